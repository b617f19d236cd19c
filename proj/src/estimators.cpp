#include "psdsense/estimators.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>
#include <utility>

#include "psdsense/errors.hpp"
#include "psdsense/hash.hpp"
#include "psdsense/rng.hpp"

namespace psdsense {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kLogFloor = 1e-12;

// log with a quadratic extension below the floor, so the likelihood objective
// stays finite and convex with a gradient consistent everywhere. Evaluated in
// long double: the objective is compared across nearby iterates down to the
// ~1e-18 scale, below what double-precision log rounding can certify.
long double floored_log(long double x) {
  if (x >= kLogFloor) return std::log(x);
  const long double u = (x - kLogFloor) / kLogFloor;
  return std::log((long double)kLogFloor) + u - 0.5L * u * u;
}

double floored_log_derivative(double x) {
  if (x >= kLogFloor) return 1.0 / x;
  return (1.0 - (x - kLogFloor) / kLogFloor) / kLogFloor;
}

double real_dot(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return (a.array().conjugate() * b.array()).sum().real();
}

struct SolveOutcome {
  Eigen::MatrixXcd x;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

// Projected gradient with Armijo backtracking and momentum that restarts
// whenever a step would increase the objective, so the reported objective
// sequence is nonincreasing (up to round-off) with or without acceleration.
template <class Objective, class Gradient, class Project>
SolveOutcome projected_gradient(Objective&& objective, Gradient&& gradient,
                                Project&& project, Eigen::MatrixXcd x0,
                                double lipschitz, const SolverConfig& cfg) {
  const double eta0 = lipschitz > 0.0 ? 1.0 / (1.01 * lipschitz) : 1.0;
  const double eta_max = eta0 * 1e8;
  double eta = eta0;

  Eigen::MatrixXcd x = project(std::move(x0));
  double fx = objective(x);
  Eigen::MatrixXcd y = x;
  double t_momentum = 1.0;

  SolveOutcome out;
  if (cfg.record_objectives) out.trace.push_back(fx);

  auto step_from = [&](const Eigen::MatrixXcd& base, double fbase,
                       Eigen::MatrixXcd& z, double& fz) {
    const Eigen::MatrixXcd g = gradient(base);
    auto trial = [&](double step, Eigen::MatrixXcd& cand, double& fcand) {
      cand = project(base - step * g);
      fcand = objective(cand);
      if (cfg.step_rule == StepRule::fixed) return true;
      const double lin = real_dot(g, cand - base);
      return fcand <= fbase + kArmijo * lin + 1e-15 * std::abs(fbase);
    };
    if (trial(eta, z, fz)) {
      if (cfg.step_rule == StepRule::backtracking) {
        for (int grow = 0; grow < 8 && eta * 2.0 <= eta_max; ++grow) {
          Eigen::MatrixXcd cand;
          double fcand = 0.0;
          if (trial(eta * 2.0, cand, fcand) && fcand <= fz) {
            eta *= 2.0;
            z = std::move(cand);
            fz = fcand;
          } else {
            break;
          }
        }
      }
      return;
    }
    for (int bt = 0; bt < 200; ++bt) {
      eta *= 0.5;
      if (trial(eta, z, fz)) return;
    }
    z = base;  // stationary to machine precision
    fz = fbase;
  };

  int it = 0;
  int stall = 0;  // consecutive iterations below the decrease tolerance
  for (; it < cfg.max_iterations; ++it) {
    // A crashed step size would make every trial round to zero movement and
    // fake a stall; every iteration restarts the hunt from a sane scale.
    eta = std::min(std::max(eta, 1e-8 * eta0), eta_max);
    Eigen::MatrixXcd z;
    double fz = fx;
    if (cfg.acceleration) {
      step_from(y, objective(y), z, fz);
      if (fz > fx) {
        t_momentum = 1.0;
        step_from(x, fx, z, fz);
      }
    } else {
      step_from(x, fx, z, fz);
    }
    const double decrease = fx - fz;
    if (cfg.acceleration) {
      const double t_next =
          0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
      y = z + ((t_momentum - 1.0) / t_next) * (z - x);
      t_momentum = t_next;
    }
    x = std::move(z);
    const double f_prev = fx;
    fx = fz;
    if (cfg.record_objectives) out.trace.push_back(fx);
    if (decrease <= cfg.gradient_tolerance * std::max(std::abs(f_prev), 1e-300))
      ++stall;
    else
      stall = 0;
    if (fx <= 1e-30) {
      out.converged = true;
      ++it;
      break;
    }
    if (stall >= 3) {
      // Momentum ripples can fake a plateau; only stop if a plain step from
      // x at a fresh scale cannot improve either.
      eta = eta0;
      Eigen::MatrixXcd zc;
      double fzc = fx;
      step_from(x, fx, zc, fzc);
      const double confirmed = fx - fzc;
      if (fzc <= fx) {
        x = std::move(zc);
        fx = fzc;
      }
      y = x;
      t_momentum = 1.0;
      stall = 0;
      if (confirmed <=
          cfg.gradient_tolerance * std::max(std::abs(fx), 1e-300)) {
        out.converged = true;
        ++it;
        break;
      }
    }
  }
  out.x = std::move(x);
  out.objective = fx;
  out.iterations = it;
  return out;
}

// Proximal gradient for F = g + h with smooth g; backtracking on the
// quadratic upper bound of g and the same monotone restart scheme.
template <class Smooth, class SmoothGrad, class Prox, class Nonsmooth>
SolveOutcome proximal_gradient(Smooth&& g, SmoothGrad&& grad_g, Prox&& prox,
                               Nonsmooth&& h, Eigen::MatrixXcd x0,
                               double lipschitz, const SolverConfig& cfg) {
  const double eta0 = lipschitz > 0.0 ? 1.0 / (1.01 * lipschitz) : 1.0;
  const double eta_max = eta0 * 1e8;
  double eta = eta0;

  Eigen::MatrixXcd x = std::move(x0);
  double fx = g(x) + h(x);
  Eigen::MatrixXcd y = x;
  double t_momentum = 1.0;

  SolveOutcome out;
  int stall = 0;
  if (cfg.record_objectives) out.trace.push_back(fx);

  auto step_from = [&](const Eigen::MatrixXcd& base, Eigen::MatrixXcd& z,
                       double& fz) {
    const double gbase = g(base);
    const Eigen::MatrixXcd grad = grad_g(base);
    auto trial = [&](double step, Eigen::MatrixXcd& cand, double& fcand) {
      cand = prox(base - step * grad, step);
      const Eigen::MatrixXcd diff = cand - base;
      const double gz = g(cand);
      const double bound =
          gbase + real_dot(grad, diff) + diff.squaredNorm() / (2.0 * step);
      if (cfg.step_rule != StepRule::fixed &&
          gz > bound + 1e-15 * std::abs(gbase))
        return false;
      fcand = gz + h(cand);
      return true;
    };
    if (trial(eta, z, fz)) {
      if (cfg.step_rule == StepRule::backtracking) {
        for (int grow = 0; grow < 8 && eta * 2.0 <= eta_max; ++grow) {
          Eigen::MatrixXcd cand;
          double fcand = 0.0;
          if (trial(eta * 2.0, cand, fcand) && fcand <= fz) {
            eta *= 2.0;
            z = std::move(cand);
            fz = fcand;
          } else {
            break;
          }
        }
      }
      return;
    }
    for (int bt = 0; bt < 200; ++bt) {
      eta *= 0.5;
      if (trial(eta, z, fz)) return;
    }
    z = base;
    fz = g(base) + h(base);
  };

  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    eta = std::min(std::max(eta, 1e-8 * eta0), eta_max);
    Eigen::MatrixXcd z;
    double fz = fx;
    if (cfg.acceleration) {
      step_from(y, z, fz);
      if (fz > fx) {
        t_momentum = 1.0;
        step_from(x, z, fz);
      }
    } else {
      step_from(x, z, fz);
    }
    const double decrease = fx - fz;
    if (fz <= fx) {  // keep the better point; prox steps from y may stall
      if (cfg.acceleration) {
        const double t_next =
            0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
        y = z + ((t_momentum - 1.0) / t_next) * (z - x);
        t_momentum = t_next;
      }
      x = std::move(z);
      fx = fz;
    } else {
      y = x;
      t_momentum = 1.0;
    }
    if (cfg.record_objectives) out.trace.push_back(fx);
    if (decrease <= cfg.gradient_tolerance * std::max(std::abs(fx), 1e-300))
      ++stall;
    else
      stall = 0;
    if (fx <= 1e-30) {
      out.converged = true;
      ++it;
      break;
    }
    if (stall >= 3) {
      eta = eta0;
      Eigen::MatrixXcd zc;
      double fzc = fx;
      step_from(x, zc, fzc);
      const double confirmed = fx - fzc;
      if (fzc <= fx) {
        x = std::move(zc);
        fx = fzc;
      }
      y = x;
      t_momentum = 1.0;
      stall = 0;
      if (confirmed <=
          cfg.gradient_tolerance * std::max(std::abs(fx), 1e-300)) {
        out.converged = true;
        ++it;
        break;
      }
    }
  }
  out.x = std::move(x);
  out.objective = fx;
  out.iterations = it;
  return out;
}

void check_dims(const SensingMap& map, const MeasurementRecord& record) {
  if (record.size() != map.size())
    throw DomainError("estimator: record length does not match the map");
}

double record_residual(const SensingMap& map, const MeasurementRecord& record,
                       const HermitianMatrix& rho) {
  return (map.apply(rho) - record.values).norm();
}

// Renormalizes to unit trace when possible and assembles the result struct.
EstimatorResult finish_psd(const SensingMap& map,
                           const MeasurementRecord& record,
                           const SolveOutcome& outcome, double objective,
                           bool force_renormalize) {
  EstimatorResult result;
  HermitianMatrix raw(outcome.x);
  result.diagnostics.raw = raw;
  result.diagnostics.raw_trace = raw.trace();
  result.diagnostics.raw_residual = record_residual(map, record, raw);
  result.diagnostics.objective_trace = outcome.trace;
  if ((force_renormalize || std::abs(raw.trace() - 1.0) > 1e-12) &&
      raw.trace() > 1e-12) {
    result.rho_hat = HermitianMatrix(raw.mat() / raw.trace());
    result.renormalized = true;
  } else {
    result.rho_hat = raw;
    result.renormalized = false;
  }
  result.objective = objective;
  result.residual = record_residual(map, record, result.rho_hat);
  result.iterations = outcome.iterations;
  result.converged = outcome.converged;
  return result;
}

HermitianMatrix default_psd_init(int dim, double trace) {
  return HermitianMatrix((trace / dim) *
                         Eigen::MatrixXcd::Identity(dim, dim));
}

}  // namespace

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double threshold) {
  return v.array().sign() * (v.array().abs() - threshold).cwiseMax(0.0);
}

UnitScaleProblem rescale_to_unit(const SensingMap& map,
                                 const MeasurementRecord& record,
                                 double epsilon) {
  check_dims(map, record);
  const double s = map.scale();
  if (!std::isfinite(s) || s <= 0.0)
    throw DomainError(
        "rescale_to_unit: map operators do not sum to a positive multiple of "
        "the identity");
  UnitScaleProblem out;
  out.factor = s;
  out.map = map.rescaled_to_unit();
  out.record = record;
  out.record.values /= s;
  out.record.epsilon = record.epsilon / s;
  out.epsilon = epsilon / s;
  return out;
}

EstimatorResult nnls_psd(const SensingMap& map, const MeasurementRecord& record,
                         const SolverConfig& config,
                         const HermitianMatrix* init) {
  check_dims(map, record);
  const Eigen::VectorXd f = record.values;
  const double lipschitz = sensing_lipschitz(map);
  auto objective = [&](const Eigen::MatrixXcd& x) {
    return 0.5 * (map.apply(HermitianMatrix(x)) - f).squaredNorm();
  };
  auto gradient = [&](const Eigen::MatrixXcd& x) {
    return map.adjoint(map.apply(HermitianMatrix(x)) - f).mat();
  };
  auto project = [](const Eigen::MatrixXcd& x) {
    return project_psd(HermitianMatrix(x)).mat();
  };
  const Eigen::MatrixXcd x0 =
      init ? init->mat() : default_psd_init(map.dim(), 1.0).mat();
  SolveOutcome outcome =
      projected_gradient(objective, gradient, project, x0, lipschitz, config);
  HermitianMatrix raw(outcome.x);
  return finish_psd(map, record, outcome,
                    record_residual(map, record, raw), true);
}

EstimatorResult constrained_ls_psd(const SensingMap& map,
                                   const MeasurementRecord& record, double t,
                                   const SolverConfig& config,
                                   const HermitianMatrix* init) {
  check_dims(map, record);
  if (t <= 0.0) throw DomainError("constrained_ls_psd: t must be > 0");
  const Eigen::VectorXd f = record.values;
  const double lipschitz = sensing_lipschitz(map);
  auto objective = [&](const Eigen::MatrixXcd& x) {
    return 0.5 * (map.apply(HermitianMatrix(x)) - f).squaredNorm();
  };
  auto gradient = [&](const Eigen::MatrixXcd& x) {
    return map.adjoint(map.apply(HermitianMatrix(x)) - f).mat();
  };
  auto project = [t](const Eigen::MatrixXcd& x) {
    return project_psd_fixed_trace(HermitianMatrix(x), t).mat();
  };
  const Eigen::MatrixXcd x0 =
      init ? init->mat() : default_psd_init(map.dim(), t).mat();
  SolveOutcome outcome =
      projected_gradient(objective, gradient, project, x0, lipschitz, config);
  HermitianMatrix raw(outcome.x);
  EstimatorResult result =
      finish_psd(map, record, outcome, record_residual(map, record, raw),
                 std::abs(t - 1.0) > 1e-12);
  result.diagnostics.fixed_trace = t;
  return result;
}

EstimatorResult trace_min_psd(const SensingMap& map,
                              const MeasurementRecord& record, double epsilon,
                              const SolverConfig& config,
                              const HermitianMatrix* init) {
  if (epsilon < 0.0) throw DomainError("trace_min_psd: epsilon must be >= 0");
  UnitScaleProblem unit = rescale_to_unit(map, record, epsilon);
  const double sum_f = unit.record.values.sum();
  const double t = sum_f - std::sqrt(double(unit.map.size())) * unit.epsilon;
  if (t <= 0.0) {
    std::ostringstream msg;
    msg << "trace_min_psd: dual trace value t = sum f - sqrt(m) epsilon = "
        << t << " is not positive (epsilon too large for this record)";
    throw InfeasibilityError(msg.str());
  }
  EstimatorResult inner =
      constrained_ls_psd(unit.map, unit.record, t, config, init);

  EstimatorResult result;
  result.diagnostics = inner.diagnostics;
  result.diagnostics.fixed_trace = t;
  const HermitianMatrix& raw = result.diagnostics.raw;
  result.rho_hat = HermitianMatrix(raw.mat() / raw.trace());
  result.renormalized = true;
  result.objective = raw.trace();
  result.residual = record_residual(map, record, result.rho_hat);
  result.iterations = inner.iterations;
  result.converged = inner.converged;
  return result;
}

EstimatorResult trace_min_psd_penalty(const SensingMap& map,
                                      const MeasurementRecord& record,
                                      double epsilon,
                                      const SolverConfig& config) {
  if (epsilon <= 0.0)
    throw DomainError("trace_min_psd_penalty: epsilon must be > 0");
  UnitScaleProblem unit = rescale_to_unit(map, record, epsilon);
  const SensingMap& umap = unit.map;
  const Eigen::VectorXd f = unit.record.values;
  const int d = umap.dim();
  const double lipschitz = sensing_lipschitz(umap);
  const Eigen::MatrixXcd identity = Eigen::MatrixXcd::Identity(d, d);

  auto project = [](const Eigen::MatrixXcd& x) {
    return project_psd(HermitianMatrix(x)).mat();
  };
  auto solve_at = [&](double mu, Eigen::MatrixXcd start, int max_it)
      -> SolveOutcome {
    auto objective = [&](const Eigen::MatrixXcd& x) {
      return 0.5 * (umap.apply(HermitianMatrix(x)) - f).squaredNorm() +
             mu * x.trace().real();
    };
    auto gradient = [&](const Eigen::MatrixXcd& x) -> Eigen::MatrixXcd {
      return umap.adjoint(umap.apply(HermitianMatrix(x)) - f).mat() +
             mu * identity;
    };
    SolverConfig inner = config;
    inner.max_iterations = max_it;
    inner.record_objectives = false;
    return projected_gradient(objective, gradient, project, std::move(start),
                              lipschitz, inner);
  };
  auto residual_of = [&](const Eigen::MatrixXcd& x) {
    return (umap.apply(HermitianMatrix(x)) - f).norm();
  };

  Eigen::MatrixXcd x = default_psd_init(d, 1.0).mat();
  SolveOutcome base = solve_at(0.0, x, config.max_iterations);
  x = base.x;
  int iterations = base.iterations;
  if (residual_of(x) > unit.epsilon) {
    std::ostringstream msg;
    msg << "trace_min_psd_penalty: epsilon " << unit.epsilon
        << " lies below the attainable residual " << residual_of(x);
    throw InfeasibilityError(msg.str());
  }

  double mu_lo = 0.0;
  double mu_hi = std::max(1e-8, 1e-3 * lipschitz);
  Eigen::MatrixXcd x_hi = x;
  for (int grow = 0; grow < 200; ++grow) {
    SolveOutcome probe = solve_at(mu_hi, x_hi, config.max_iterations);
    x_hi = probe.x;
    iterations += probe.iterations;
    if (residual_of(x_hi) > unit.epsilon) break;
    mu_hi *= 4.0;
  }

  SolveOutcome last = base;
  for (int bisect = 0; bisect < 80; ++bisect) {
    const double mu = 0.5 * (mu_lo + mu_hi);
    last = solve_at(mu, x, config.max_iterations);
    x = last.x;
    iterations += last.iterations;
    const double res = residual_of(x);
    if (std::abs(res - unit.epsilon) <= 1e-9 * std::max(1.0, unit.epsilon))
      break;
    if (res > unit.epsilon)
      mu_hi = mu;
    else
      mu_lo = mu;
    if ((mu_hi - mu_lo) <= 1e-14 * std::max(1.0, mu_hi)) break;
  }

  SolveOutcome outcome = last;
  outcome.x = x;
  outcome.iterations = iterations;
  EstimatorResult result = finish_psd(unit.map, unit.record, outcome,
                                      HermitianMatrix(x).trace(), true);
  result.residual = record_residual(map, record, result.rho_hat);
  return result;
}

EstimatorResult max_likelihood_psd(const SensingMap& map,
                                   const MeasurementRecord& record,
                                   const SolverConfig& config,
                                   const HermitianMatrix* init) {
  check_dims(map, record);
  if (record.values.minCoeff() < 0.0)
    throw DomainError("max_likelihood_psd: record values must be nonnegative");
  const Eigen::VectorXd f = record.values;
  const double lipschitz = sensing_lipschitz(map);
  // Minimized as the relative form sum f (log f - log p), which vanishes at
  // the optimum of noiseless data; the absolute form -sum f log p sits at
  // O(1) where double-precision decreases bottom out long before the flat
  // valley around a rank-deficient optimum is crossed. Gradients agree.
  double entropy = 0.0;
  for (int i = 0; i < f.size(); ++i)
    if (f[i] > 0.0) entropy -= f[i] * std::log(f[i]);
  // The KL objective is compared between iterates that differ by ~1e-9;
  // a double GEMV for p has an ~1e-16 rounding staircase that buries such
  // decreases, so when the vectorized operator is available the whole
  // evaluation runs in long double against that fixed matrix.
  const bool precise = map.has_vectorized();
  const int dim2 = map.dim() * map.dim();
  std::vector<long double> f_log_f(f.size(), 0.0L);
  for (int i = 0; i < f.size(); ++i)
    if (f[i] > 0.0)
      f_log_f[i] = (long double)f[i] * std::log((long double)f[i]);
  auto objective = [&](const Eigen::MatrixXcd& x) {
    if (precise) {
      const auto& svec = map.vectorized();
      const int d = map.dim();
      const long double root2 = std::sqrt((long double)2.0);
      std::vector<long double> r(dim2);
      int k = 0;
      for (int i = 0; i < d; ++i) r[k++] = (long double)x(i, i).real();
      for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
          r[k++] = root2 * (long double)x(i, j).real();
          r[k++] = root2 * (long double)x(i, j).imag();
        }
      }
      long double value = 0.0L;
      for (int i = 0; i < f.size(); ++i) {
        if (f[i] <= 0.0) continue;
        const double* row = svec.data() + std::size_t(i) * dim2;
        long double p = 0.0L;
        for (int j = 0; j < dim2; ++j) p += (long double)row[j] * r[j];
        value += f_log_f[i] - (long double)f[i] * floored_log(p);
      }
      return (double)value;
    }
    const Eigen::VectorXd p = map.apply(HermitianMatrix(x));
    long double value = 0.0L;
    for (int i = 0; i < p.size(); ++i)
      if (f[i] > 0.0) value += f_log_f[i] - (long double)f[i] * floored_log(p[i]);
    return (double)value;
  };
  auto gradient = [&](const Eigen::MatrixXcd& x) {
    const Eigen::VectorXd p = map.apply(HermitianMatrix(x));
    Eigen::VectorXd w(p.size());
    for (int i = 0; i < p.size(); ++i)
      w[i] = f[i] > 0.0 ? -f[i] * floored_log_derivative(p[i]) : 0.0;
    return map.adjoint(w).mat();
  };
  auto project = [](const Eigen::MatrixXcd& x) {
    return project_psd_fixed_trace(HermitianMatrix(x), 1.0).mat();
  };
  const Eigen::MatrixXcd x0 =
      init ? init->mat() : default_psd_init(map.dim(), 1.0).mat();
  SolveOutcome outcome =
      projected_gradient(objective, gradient, project, x0, lipschitz, config);

  // The cone projection's eigensolver noise, amplified by the large gradient
  // at a rank-deficient optimum, floors the matrix iteration around 1e-8 in
  // Frobenius distance. When the data comes from a (near-)pure state the
  // optimum is rank one, so descend the same objective along unit vectors
  // from the dominant eigenvector; the refinement is kept only when it
  // improves the objective, which never triggers on full-rank optima.
  if (map.has_dense_operators()) {
    SpectralDecomposition sd =
        spectral_decomposition(HermitianMatrix(outcome.x));
    Eigen::VectorXcd psi = sd.eigenvectors.col(0);
    auto pure_objective = [&](const Eigen::VectorXcd& v) {
      const Eigen::VectorXd p = map.apply(HermitianMatrix(v * v.adjoint()));
      long double value = 0.0L;
      for (int i = 0; i < p.size(); ++i)
        if (f[i] > 0.0)
          value += f_log_f[i] - (long double)f[i] * floored_log(p[i]);
      return (double)value;
    };
    double fv = pure_objective(psi);
    double eta = 0.25 / lipschitz;
    int polish_iterations = 0;
    for (int k = 0; k < 400; ++k) {
      const Eigen::VectorXd p = map.apply(HermitianMatrix(psi * psi.adjoint()));
      Eigen::VectorXd w(p.size());
      for (int i = 0; i < p.size(); ++i)
        w[i] = f[i] > 0.0 ? -f[i] * floored_log_derivative(p[i]) : 0.0;
      const Eigen::VectorXcd grad = 2.0 * (map.adjoint(w).mat() * psi);
      bool moved = false;
      for (int bt = 0; bt < 40; ++bt) {
        Eigen::VectorXcd cand = psi - eta * grad;
        cand.normalize();
        const double fc = pure_objective(cand);
        if (fc < fv) {
          psi = std::move(cand);
          fv = fc;
          eta *= 2.0;
          moved = true;
          break;
        }
        eta *= 0.5;
      }
      ++polish_iterations;
      if (!moved) break;
    }
    if (fv <= outcome.objective) {
      outcome.x = psi * psi.adjoint();
      outcome.objective = fv;
      outcome.iterations += polish_iterations;
    }
  }

  // Report the log-likelihood cost -sum f log p, not the shifted form.
  return finish_psd(map, record, outcome, outcome.objective + entropy, false);
}

EstimatorResult nuclear_min_free(const SensingMap& map,
                                 const MeasurementRecord& record,
                                 double epsilon, const SolverConfig& config,
                                 const HermitianMatrix* init) {
  check_dims(map, record);
  if (epsilon < 0.0)
    throw DomainError("nuclear_min_free: epsilon must be >= 0");
  const Eigen::VectorXd f = record.values;
  const int d = map.dim();
  const double lipschitz = sensing_lipschitz(map);

  auto smooth = [&](const Eigen::MatrixXcd& x) {
    return 0.5 * (map.apply(HermitianMatrix(x)) - f).squaredNorm();
  };
  auto smooth_grad = [&](const Eigen::MatrixXcd& x) {
    return map.adjoint(map.apply(HermitianMatrix(x)) - f).mat();
  };
  auto nuclear_of = [](const Eigen::MatrixXcd& x) {
    SpectralDecomposition sd = spectral_decomposition(HermitianMatrix(x));
    return sd.eigenvalues.cwiseAbs().sum();
  };
  auto residual_of = [&](const Eigen::MatrixXcd& x) {
    return (map.apply(HermitianMatrix(x)) - f).norm();
  };

  Eigen::MatrixXcd x =
      init ? init->mat() : Eigen::MatrixXcd::Zero(d, d);
  int iterations = 0;

  auto solve_stage = [&](double tau, int max_it, double tol) {
    auto prox = [tau](const Eigen::MatrixXcd& z, double eta) {
      SpectralDecomposition sd = spectral_decomposition(HermitianMatrix(z));
      const Eigen::VectorXd lam = soft_threshold(sd.eigenvalues, eta * tau);
      return Eigen::MatrixXcd(sd.eigenvectors * lam.asDiagonal() *
                              sd.eigenvectors.adjoint());
    };
    auto h = [tau, &nuclear_of](const Eigen::MatrixXcd& z) {
      return tau * nuclear_of(z);
    };
    SolverConfig stage = config;
    stage.max_iterations = max_it;
    stage.gradient_tolerance = tol;
    stage.record_objectives = false;
    SolveOutcome outcome =
        proximal_gradient(smooth, smooth_grad, prox, h, x, lipschitz, stage);
    x = outcome.x;
    iterations += outcome.iterations;
  };

  SpectralDecomposition grad0 =
      spectral_decomposition(map.adjoint(f));
  const double tau0 = grad0.eigenvalues.cwiseAbs().maxCoeff();
  const int stage_iterations =
      std::max(200, config.max_iterations / 20);
  bool converged = false;

  if (epsilon == 0.0) {
    double tau = 0.5 * tau0;
    for (int stage = 0; stage < 60; ++stage) {
      solve_stage(tau, stage_iterations, 1e-13);
      if (residual_of(x) <= 1e-9) {
        converged = true;
        break;
      }
      tau *= 0.25;
    }
  } else {
    if (residual_of(Eigen::MatrixXcd::Zero(d, d)) <= epsilon) {
      x = Eigen::MatrixXcd::Zero(d, d);  // zero matrix already feasible
      converged = true;
    } else {
      double lo = 0.0, hi = tau0;
      for (int bisect = 0; bisect < 50; ++bisect) {
        const double tau = 0.5 * (lo + hi);
        solve_stage(tau, stage_iterations, 1e-13);
        const double res = residual_of(x);
        if (std::abs(res - epsilon) <= 1e-6 * std::max(1.0, epsilon)) {
          converged = true;
          break;
        }
        if (res > epsilon)
          hi = tau;
        else
          lo = tau;
      }
    }
  }

  EstimatorResult result;
  HermitianMatrix solution(x);
  result.rho_hat = solution;
  result.diagnostics.raw = solution;
  result.diagnostics.raw_trace = solution.trace();
  result.diagnostics.raw_residual = record_residual(map, record, solution);
  result.objective = nuclear_of(x);
  result.residual = result.diagnostics.raw_residual;
  result.iterations = iterations;
  result.converged = converged;
  result.renormalized = false;
  return result;
}

EstimatorResult least_squares_free(const SensingMap& map,
                                   const MeasurementRecord& record) {
  check_dims(map, record);
  const auto& s = map.vectorized();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(
      s, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  const Eigen::VectorXd x = svd.solve(record.values);
  HermitianMatrix solution(real_vec_to_herm(x, map.dim()));

  EstimatorResult result;
  result.rho_hat = solution;
  result.diagnostics.raw = solution;
  result.diagnostics.raw_trace = solution.trace();
  result.diagnostics.raw_residual = (s * x - record.values).norm();
  result.objective = result.diagnostics.raw_residual;
  result.residual = result.diagnostics.raw_residual;
  result.iterations = 0;
  result.converged = true;
  result.renormalized = false;
  return result;
}

EstimatorResult trace_min_free(const SensingMap& map,
                               const MeasurementRecord& record) {
  check_dims(map, record);
  if (!record.is_ideal())
    throw DomainError("trace_min_free: requires a noiseless record");
  const auto& s = map.vectorized();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(
      s, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  const Eigen::VectorXd x = svd.solve(record.values);
  const double feas = (s * x - record.values).norm();
  if (feas > 1e-8 * std::max(1.0, record.values.norm()))
    throw InfeasibilityError(
        "trace_min_free: record is inconsistent with the sensing map");

  const Eigen::VectorXd id_vec = herm_to_real_vec(
      Eigen::MatrixXcd::Identity(map.dim(), map.dim()));
  const auto rank = svd.rank();
  const Eigen::MatrixXd v_range = svd.matrixV().leftCols(rank);
  const Eigen::VectorXd projected = v_range * (v_range.transpose() * id_vec);
  if ((id_vec - projected).norm() > 1e-8 * id_vec.norm())
    throw UnboundedError(
        "trace_min_free: objective unbounded below (identity lies outside "
        "the span of the sensing operators)");

  HermitianMatrix solution(real_vec_to_herm(x, map.dim()));
  EstimatorResult result;
  result.rho_hat = solution;
  result.diagnostics.raw = solution;
  result.diagnostics.raw_trace = solution.trace();
  result.diagnostics.raw_residual = feas;
  result.diagnostics.objective_constant_on_feasible_set = true;
  result.objective = solution.trace();
  result.residual = feas;
  result.iterations = 0;
  result.converged = true;
  result.renormalized = false;
  return result;
}

std::vector<std::string> registered_estimators() {
  return {"nnls_psd",         "trace_min_psd",     "constrained_ls_psd",
          "max_likelihood_psd", "nuclear_min_free", "least_squares_free",
          "trace_min_free"};
}

bool estimator_is_positivity_constrained(const std::string& name) {
  return name == "nnls_psd" || name == "trace_min_psd" ||
         name == "constrained_ls_psd" || name == "max_likelihood_psd";
}

EstimatorResult run_estimator_by_name(const std::string& name,
                                      const SensingMap& map,
                                      const MeasurementRecord& record,
                                      const SolverConfig& config,
                                      const EstimatorInvocation& inv) {
  if (name == "nnls_psd") return nnls_psd(map, record, config, inv.init);
  if (name == "trace_min_psd")
    return trace_min_psd(map, record, inv.epsilon, config, inv.init);
  if (name == "constrained_ls_psd")
    return constrained_ls_psd(map, record, inv.fixed_trace, config, inv.init);
  if (name == "max_likelihood_psd")
    return max_likelihood_psd(map, record, config, inv.init);
  if (name == "nuclear_min_free")
    return nuclear_min_free(map, record, inv.epsilon, config, inv.init);
  if (name == "least_squares_free") return least_squares_free(map, record);
  if (name == "trace_min_free") return trace_min_free(map, record);
  std::ostringstream msg;
  msg << "unknown estimator '" << name << "' (registered:";
  for (const auto& n : registered_estimators()) msg << ' ' << n;
  msg << ")";
  throw DomainError(msg.str());
}

UniquenessReport uniqueness_probe(const SensingMap& map,
                                  const MeasurementRecord& record,
                                  const std::vector<std::string>& estimators,
                                  const SolverConfig& config, double epsilon,
                                  int restarts) {
  if (estimators.size() < 2)
    throw DomainError("uniqueness_probe: need at least two estimators");
  if (!record.is_ideal())
    throw DomainError("uniqueness_probe: expects a noiseless record");
  const int d = map.dim();

  std::vector<HermitianMatrix> solutions;
  UniquenessReport report;
  for (const auto& name : estimators) {
    EstimatorInvocation inv;
    inv.epsilon = epsilon;
    solutions.push_back(
        run_estimator_by_name(name, map, record, config, inv).rho_hat);
    report.run_labels.push_back(name + "[default]");
    for (int k = 0; k < restarts; ++k) {
      const std::uint64_t init_seed = derive_seed(
          config.seed, Stream::restart_init,
          {fnv1a64(name), static_cast<std::uint64_t>(k)});
      HermitianMatrix start =
          estimator_is_positivity_constrained(name)
              ? random_low_rank_state(d, d, init_seed)
              : gaussian_hermitian(d, init_seed);
      EstimatorInvocation restart_inv;
      restart_inv.epsilon = epsilon;
      restart_inv.init = &start;
      solutions.push_back(
          run_estimator_by_name(name, map, record, config, restart_inv)
              .rho_hat);
      report.run_labels.push_back(name + "[restart " + std::to_string(k) +
                                  "]");
    }
  }

  double max_distance = 0.0;
  for (std::size_t i = 0; i < solutions.size(); ++i)
    for (std::size_t j = i + 1; j < solutions.size(); ++j)
      max_distance = std::max(
          max_distance, frobenius_distance(solutions[i], solutions[j]));
  report.max_pairwise_frobenius = max_distance;
  report.pass = max_distance < 1e-5;
  return report;
}

}  // namespace psdsense
