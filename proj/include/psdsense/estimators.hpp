#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "psdsense/hermitian.hpp"
#include "psdsense/measurement.hpp"
#include "psdsense/sensing.hpp"

namespace psdsense {

enum class StepRule { fixed, backtracking };

struct SolverConfig {
  int max_iterations = 5000;
  double gradient_tolerance = 1e-9;  // on the relative objective decrease
  StepRule step_rule = StepRule::backtracking;
  bool acceleration = true;  // momentum with restart on objective increase
  std::uint64_t seed = 0;
  bool record_objectives = false;  // keep the per-iteration objective trace
};

struct EstimatorDiagnostics {
  /// Solution before any trace renormalization.
  HermitianMatrix raw;
  /// Residual of raw against the problem the solver actually ran on
  /// (the unit-rescaled one for trace_min_psd).
  double raw_residual = 0.0;
  double raw_trace = 0.0;
  /// The trace value t when the estimator reduced to a fixed-trace program.
  double fixed_trace = std::numeric_limits<double>::quiet_NaN();
  bool objective_constant_on_feasible_set = false;
  std::vector<double> objective_trace;
};

struct EstimatorResult {
  HermitianMatrix rho_hat;
  double objective = 0.0;
  double residual = 0.0;  // ||A[rho_hat] - f||_2 against the caller's record
  int iterations = 0;
  bool converged = false;
  bool renormalized = false;
  EstimatorDiagnostics diagnostics;
};

/// Map, record and noise bound jointly divided by the map's scale s so that
/// sum_i A_i = identity, as the closed-form dual values require.
struct UnitScaleProblem {
  SensingMap map;
  MeasurementRecord record;
  double epsilon = 0.0;
  double factor = 1.0;  // the original scale s
};

UnitScaleProblem rescale_to_unit(const SensingMap& map,
                                 const MeasurementRecord& record,
                                 double epsilon);

// Positivity-constrained estimators ----------------------------------------

/// min ||A[rho] - f||_2  s.t.  rho >= 0   (projected gradient on the cone;
/// the returned rho_hat is trace-renormalized, raw kept in diagnostics).
EstimatorResult nnls_psd(const SensingMap& map, const MeasurementRecord& record,
                         const SolverConfig& config,
                         const HermitianMatrix* init = nullptr);

/// min Tr rho  s.t.  ||f - A[rho]||_2 <= epsilon, rho >= 0, solved through
/// the dual-value reduction t = sum f - sqrt(m) epsilon on the unit-rescaled
/// problem, then one fixed-trace least-squares solve.
EstimatorResult trace_min_psd(const SensingMap& map,
                              const MeasurementRecord& record, double epsilon,
                              const SolverConfig& config,
                              const HermitianMatrix* init = nullptr);

/// Cross-check route for the same program: bisection on the penalty weight mu
/// of min 0.5||A[rho]-f||^2 + mu Tr rho over the PSD cone until the residual
/// matches epsilon. Independent of the dual-value reduction.
EstimatorResult trace_min_psd_penalty(const SensingMap& map,
                                      const MeasurementRecord& record,
                                      double epsilon,
                                      const SolverConfig& config);

/// min ||A[rho] - f||_2  s.t.  Tr rho = t, rho >= 0.
EstimatorResult constrained_ls_psd(const SensingMap& map,
                                   const MeasurementRecord& record, double t,
                                   const SolverConfig& config,
                                   const HermitianMatrix* init = nullptr);

/// min -sum_i f_i log Tr(E_i rho)  s.t.  rho >= 0, Tr rho = 1, with log
/// arguments floored at 1e-12.
EstimatorResult max_likelihood_psd(const SensingMap& map,
                                   const MeasurementRecord& record,
                                   const SolverConfig& config,
                                   const HermitianMatrix* init = nullptr);

// Positivity-free baselines -------------------------------------------------

/// min ||M||_*  s.t.  ||A[M] - f||_2 <= epsilon (equality when epsilon == 0,
/// enforced to 1e-9 by penalty continuation). Eigenvalue soft-thresholding
/// with penalty-weight continuation; no renormalization.
EstimatorResult nuclear_min_free(const SensingMap& map,
                                 const MeasurementRecord& record,
                                 double epsilon, const SolverConfig& config,
                                 const HermitianMatrix* init = nullptr);

/// Minimum-Frobenius-norm Hermitian least-squares solution via the
/// pseudo-inverse of the vectorized sensing operator (singular values below
/// 1e-10 of the largest truncated).
EstimatorResult least_squares_free(const SensingMap& map,
                                   const MeasurementRecord& record);

/// min Tr M  s.t.  A[M] = p. When the identity lies in the operator span the
/// trace is constant on the feasible set; the minimum-norm feasible point is
/// returned and flagged. Otherwise the program is unbounded.
EstimatorResult trace_min_free(const SensingMap& map,
                               const MeasurementRecord& record);

// ---------------------------------------------------------------------------

/// Eigenvalue shrinkage toward zero: sign(v) * max(|v| - threshold, 0).
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double threshold);

std::vector<std::string> registered_estimators();
bool estimator_is_positivity_constrained(const std::string& name);

struct EstimatorInvocation {
  double epsilon = 0.0;      // trace_min_psd, nuclear_min_free
  double fixed_trace = 1.0;  // constrained_ls_psd
  const HermitianMatrix* init = nullptr;
};

EstimatorResult run_estimator_by_name(const std::string& name,
                                      const SensingMap& map,
                                      const MeasurementRecord& record,
                                      const SolverConfig& config,
                                      const EstimatorInvocation& invocation = {});

/// Runs every listed estimator plus `restarts` random-initialization restarts
/// of each on the same noiseless record and reports the maximum pairwise
/// Frobenius distance between the outputs. PASS when below 1e-5.
struct UniquenessReport {
  double max_pairwise_frobenius = 0.0;
  bool pass = false;
  std::vector<std::string> run_labels;
};

UniquenessReport uniqueness_probe(const SensingMap& map,
                                  const MeasurementRecord& record,
                                  const std::vector<std::string>& estimators,
                                  const SolverConfig& config,
                                  double epsilon = 0.0, int restarts = 5);

}  // namespace psdsense
