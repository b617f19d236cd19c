#include "psdsense/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "psdsense/errors.hpp"

namespace psdsense {

namespace {

const double kSqrt2 = std::sqrt(2.0);

double max_residual(const SensingMap& map, const Eigen::VectorXd& f,
                    const Eigen::MatrixXcd& x) {
  return (map.apply(HermitianMatrix(x)) - f).cwiseAbs().maxCoeff();
}

// Dykstra's alternating projections over {PSD, Tr = t} and the m residual
// slabs {|f_i - <A_i, x>| <= level}. Returns the limit point and whether all
// constraints hold to tolerance at it.
struct FeasibilityResult {
  bool feasible = false;
  Eigen::MatrixXcd x;
  double violation = 0.0;
};

FeasibilityResult dykstra_feasibility(const SensingMap& map,
                                      const Eigen::VectorXd& f, double level,
                                      double trace_target,
                                      Eigen::MatrixXcd start, int max_sweeps,
                                      double tol) {
  const auto& ops = map.operators();
  const int m = map.size();
  const int d = map.dim();
  std::vector<double> op_norm2(m);
  for (int i = 0; i < m; ++i) op_norm2[i] = ops[i].mat().squaredNorm();

  Eigen::MatrixXcd x = std::move(start);
  std::vector<Eigen::MatrixXcd> corrections(
      m + 1, Eigen::MatrixXcd::Zero(d, d));

  auto violation_of = [&](const Eigen::MatrixXcd& z) {
    SpectralDecomposition sd = spectral_decomposition(HermitianMatrix(z));
    const double cone = std::max(0.0, -sd.eigenvalues.minCoeff());
    const double trace = std::abs(sd.eigenvalues.sum() - trace_target);
    const double box = std::max(0.0, max_residual(map, f, z) - level);
    return std::max({cone, trace, box});
  };

  double violation = violation_of(x);
  for (int sweep = 0; sweep < max_sweeps && violation > tol; ++sweep) {
    // cone-with-trace set
    {
      Eigen::MatrixXcd y =
          project_psd_fixed_trace(HermitianMatrix(x + corrections[0]),
                                  trace_target)
              .mat();
      corrections[0] = x + corrections[0] - y;
      x = y;
    }
    for (int i = 0; i < m; ++i) {
      const Eigen::MatrixXcd shifted = x + corrections[i + 1];
      const double value = real_inner(HermitianMatrix(shifted),
                                      HermitianMatrix(ops[i].mat()));
      const double clipped =
          std::min(f[i] + level, std::max(f[i] - level, value));
      if (clipped != value) {
        Eigen::MatrixXcd y =
            shifted + ((clipped - value) / op_norm2[i]) * ops[i].mat();
        corrections[i + 1] = shifted - y;
        x = y;
      } else {
        corrections[i + 1].setZero();
        x = shifted;
      }
    }
    violation = violation_of(x);
  }
  FeasibilityResult out;
  out.feasible = violation <= tol;
  out.x = std::move(x);
  out.violation = violation;
  return out;
}

}  // namespace

BoundConstants bound_constants(double delta_4r) {
  const double limit = kSqrt2 - 1.0;
  if (!(delta_4r >= 0.0) || delta_4r >= limit) {
    std::ostringstream msg;
    msg << "bound_constants: requires 0 <= delta_4r < sqrt(2)-1 ~= " << limit
        << ", got " << delta_4r;
    throw DomainError(msg.str());
  }
  BoundConstants out;
  out.delta_4r = delta_4r;
  const double denom = 1.0 - (1.0 + kSqrt2) * delta_4r;
  out.c0 = 4.0 * std::sqrt(1.0 + delta_4r) / denom;
  out.c1 = (1.0 - (1.0 - kSqrt2) * delta_4r) / denom;
  return out;
}

double lemma2_bound(const HermitianMatrix& rho_hat, double epsilon, int r,
                    double delta_4r) {
  const BoundConstants c = bound_constants(delta_4r);
  const RankSplit split = rank_split(rho_hat, r);
  const double tail_nuclear = norms(split.tail).nuclear;
  return 2.0 * c.c0 * epsilon + c.c1 * std::sqrt(2.0 / r) * tail_nuclear;
}

Lemma3Report lemma3_check(const SensingMap& map,
                          const MeasurementRecord& record, double epsilon,
                          const SolverConfig& config, ResidualNorm norm) {
  if (epsilon <= 0.0) throw DomainError("lemma3_check: epsilon must be > 0");
  if (record.is_ideal())
    throw DomainError("lemma3_check: expects a sampled record");

  UnitScaleProblem unit = rescale_to_unit(map, record, epsilon);
  const int m = unit.map.size();
  const Eigen::VectorXd& f = unit.record.values;

  Lemma3Report report;
  report.norm = norm;

  if (norm == ResidualNorm::l2) {
    report.t = f.sum() - std::sqrt(double(m)) * unit.epsilon;
    if (report.t <= 0.0) {
      report.feasible = false;
      std::ostringstream msg;
      msg << "infeasible: t = sum f - sqrt(m) epsilon = " << report.t
          << " <= 0";
      report.message = msg.str();
      return report;
    }
    report.feasible = true;
    // Route one: penalty bisection, no dual-value shortcut.
    EstimatorResult via_penalty =
        trace_min_psd_penalty(map, record, epsilon, config);
    // Route two: fixed-trace least squares at the closed-form t.
    EstimatorResult via_trace =
        constrained_ls_psd(unit.map, unit.record, report.t, config);

    report.trace_gap =
        std::abs(via_penalty.diagnostics.raw_trace - report.t);
    report.residual_gap =
        std::abs(via_trace.diagnostics.raw_residual - unit.epsilon);
    report.solution_distance = frobenius_distance(
        via_penalty.diagnostics.raw, via_trace.diagnostics.raw);
    report.pass = report.trace_gap < 1e-4 && report.residual_gap < 1e-4 &&
                  report.solution_distance < 1e-4;
    return report;
  }

  // Max-norm variant. Trace minimization by bisection on the trace with a
  // feasibility oracle, then the fixed-trace minimax level by bisection on
  // the level.
  const int d = unit.map.dim();
  const double level = unit.epsilon;
  const int sweeps = 6000;
  const double tol = 1e-10;

  Eigen::MatrixXcd warm = Eigen::MatrixXcd::Zero(d, d);
  double t_lo = 0.0;
  double t_hi = f.sum();
  FeasibilityResult at_hi = dykstra_feasibility(
      unit.map, f, level, t_hi, warm, sweeps, tol);
  for (int grow = 0; grow < 4 && !at_hi.feasible; ++grow) {
    t_hi *= 2.0;
    at_hi = dykstra_feasibility(unit.map, f, level, t_hi, at_hi.x, sweeps, tol);
  }
  if (!at_hi.feasible) {
    report.feasible = false;
    report.message = "infeasible: no trace level admits the residual box";
    return report;
  }
  report.feasible = true;
  Eigen::MatrixXcd rho_tr = at_hi.x;
  for (int it = 0; it < 45; ++it) {
    const double t_mid = 0.5 * (t_lo + t_hi);
    FeasibilityResult mid = dykstra_feasibility(unit.map, f, level, t_mid,
                                                rho_tr, sweeps, tol);
    if (mid.feasible) {
      t_hi = t_mid;
      rho_tr = mid.x;
    } else {
      t_lo = t_mid;
    }
  }
  const double t_star = HermitianMatrix(rho_tr).trace();
  report.t = t_star;

  double s_lo = 0.0;
  double s_hi = max_residual(unit.map, f, rho_tr);
  Eigen::MatrixXcd rho_ls = rho_tr;
  for (int it = 0; it < 45; ++it) {
    const double s_mid = 0.5 * (s_lo + s_hi);
    FeasibilityResult mid = dykstra_feasibility(unit.map, f, s_mid, t_star,
                                                rho_ls, sweeps, tol);
    if (mid.feasible) {
      s_hi = s_mid;
      rho_ls = mid.x;
    } else {
      s_lo = s_mid;
    }
  }

  report.solution_distance = (rho_tr - rho_ls).norm();
  report.residual_gap =
      std::abs(max_residual(unit.map, f, rho_ls) - unit.epsilon);
  report.trace_gap =
      std::abs(HermitianMatrix(rho_ls).trace() - t_star);
  report.pass =
      report.solution_distance < 1e-4 && report.residual_gap < 1e-4;
  return report;
}

}  // namespace psdsense
