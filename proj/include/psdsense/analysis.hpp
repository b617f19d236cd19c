#pragma once

#include <limits>
#include <string>

#include "psdsense/estimators.hpp"
#include "psdsense/hermitian.hpp"
#include "psdsense/measurement.hpp"
#include "psdsense/sensing.hpp"

namespace psdsense {

/// Error-bound constants; both diverge as delta_4r approaches sqrt(2) - 1
/// from below and the domain ends there.
struct BoundConstants {
  double delta_4r = 0.0;
  double c0 = 4.0;
  double c1 = 1.0;
};

BoundConstants bound_constants(double delta_4r);

/// 2 c0 epsilon + c1 sqrt(2/r) ||tail of rank_split(rho_hat, r)||_*.
double lemma2_bound(const HermitianMatrix& rho_hat, double epsilon, int r,
                    double delta_4r);

enum class ResidualNorm { l2, max };

/// Equivalence check between the trace-minimization program at noise bound
/// epsilon and the fixed-trace least-squares program at the dual trace value.
/// For the 2-norm the dual value t = sum f - sqrt(m) epsilon is closed-form
/// and the trace-minimization side runs through the independent penalty
/// route; for the max norm no closed form exists, so t is measured from a
/// feasibility bisection and only the solution agreement and residual level
/// are checked.
struct Lemma3Report {
  ResidualNorm norm = ResidualNorm::l2;
  bool feasible = false;
  double t = 0.0;
  double solution_distance = std::numeric_limits<double>::infinity();
  double residual_gap = std::numeric_limits<double>::infinity();
  double trace_gap = std::numeric_limits<double>::infinity();
  bool pass = false;
  std::string message;
};

Lemma3Report lemma3_check(const SensingMap& map,
                          const MeasurementRecord& record, double epsilon,
                          const SolverConfig& config,
                          ResidualNorm norm = ResidualNorm::l2);

}  // namespace psdsense
