// Independent reference implementations used only by tests. These stay off
// the library code paths on purpose: the Jacobi eigensolver below checks
// Eigen-based spectral routines, the brute-force simplex projection checks
// the water-filling one, and the naive Born/tensor-product routines check the
// sensing pipeline.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

namespace oracles {

// Cyclic Jacobi for a real symmetric matrix; plain rotation products, no
// Eigen decomposition routines involved.
inline void jacobi_symmetric(Eigen::MatrixXd a, Eigen::VectorXd& eigenvalues,
                             Eigen::MatrixXd& eigenvectors) {
  const int n = static_cast<int>(a.rows());
  eigenvectors = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30 * std::max(1.0, a.squaredNorm())) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (tau >= 0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        Eigen::MatrixXd g = Eigen::MatrixXd::Identity(n, n);
        g(p, p) = c;
        g(q, q) = c;
        g(p, q) = s;
        g(q, p) = -s;
        a = g.transpose() * a * g;
        eigenvectors = eigenvectors * g;
      }
    }
  }
  eigenvalues = a.diagonal();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return eigenvalues[i] > eigenvalues[j]; });
  Eigen::VectorXd ev(n);
  Eigen::MatrixXd vecs(n, n);
  for (int k = 0; k < n; ++k) {
    ev[k] = eigenvalues[order[k]];
    vecs.col(k) = eigenvectors.col(order[k]);
  }
  eigenvalues = ev;
  eigenvectors = vecs;
}

// Real embedding of a complex Hermitian matrix: X + iY -> [[X, -Y], [Y, X]],
// a real symmetric matrix carrying each eigenvalue twice.
inline Eigen::MatrixXd embed_hermitian(const Eigen::MatrixXcd& m) {
  const int d = static_cast<int>(m.rows());
  Eigen::MatrixXd e(2 * d, 2 * d);
  e.topLeftCorner(d, d) = m.real();
  e.topRightCorner(d, d) = -m.imag();
  e.bottomLeftCorner(d, d) = m.imag();
  e.bottomRightCorner(d, d) = m.real();
  return e;
}

inline Eigen::MatrixXcd unembed_hermitian(const Eigen::MatrixXd& e) {
  const int d = static_cast<int>(e.rows()) / 2;
  Eigen::MatrixXcd m(d, d);
  m.real() = 0.5 * (e.topLeftCorner(d, d) + e.bottomRightCorner(d, d));
  m.imag() = 0.5 * (e.bottomLeftCorner(d, d) - e.topRightCorner(d, d));
  return m;
}

// Eigenvalues of a complex Hermitian matrix through the real embedding:
// sort the doubled spectrum and average consecutive pairs.
inline Eigen::VectorXd hermitian_eigenvalues(const Eigen::MatrixXcd& m) {
  Eigen::VectorXd doubled;
  Eigen::MatrixXd vecs;
  jacobi_symmetric(embed_hermitian(m), doubled, vecs);
  const int d = static_cast<int>(m.rows());
  Eigen::VectorXd out(d);
  for (int i = 0; i < d; ++i) out[i] = 0.5 * (doubled[2 * i] + doubled[2 * i + 1]);
  return out;
}

// PSD projection through the real embedding (functional calculus commutes
// with the embedding, so un-embedding the clipped matrix is exact).
inline Eigen::MatrixXcd project_psd_embedded(const Eigen::MatrixXcd& m) {
  Eigen::VectorXd ev;
  Eigen::MatrixXd vecs;
  jacobi_symmetric(embed_hermitian(m), ev, vecs);
  const Eigen::VectorXd clipped = ev.cwiseMax(0.0);
  return unembed_hermitian(vecs * clipped.asDiagonal() * vecs.transpose());
}

// Global minimizer of ||x - v||^2 over {x >= 0, sum x = total} by exhaustive
// search over supports.
inline Eigen::VectorXd simplex_bruteforce(const Eigen::VectorXd& v,
                                          double total) {
  const int n = static_cast<int>(v.size());
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x = Eigen::VectorXd::Zero(n);
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    int k = 0;
    double support_sum = 0.0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        ++k;
        support_sum += v[i];
      }
    const double shift = (total - support_sum) / k;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    bool feasible = true;
    for (int i = 0; i < n; ++i) {
      if (!(mask & (1u << i))) continue;
      x[i] = v[i] + shift;
      if (x[i] < -1e-12) feasible = false;
      x[i] = std::max(x[i], 0.0);
    }
    if (!feasible) continue;
    const double dist = (x - v).squaredNorm();
    if (dist < best) {
      best = dist;
      best_x = x;
    }
  }
  return best_x;
}

inline Eigen::MatrixXcd kron_naive(const Eigen::MatrixXcd& a,
                                   const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index k = 0; k < b.rows(); ++k)
        for (Eigen::Index l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

// Explicit single-qubit eigenprojectors written out as constants.
inline Eigen::MatrixXcd qubit_projector(char axis, bool up) {
  const std::complex<double> I(0.0, 1.0);
  Eigen::MatrixXcd p(2, 2);
  if (axis == 'z') {
    p << (up ? 1 : 0), 0, 0, (up ? 0 : 1);
  } else if (axis == 'x') {
    p << 0.5, (up ? 0.5 : -0.5), (up ? 0.5 : -0.5), 0.5;
  } else {
    p << 0.5, (up ? -0.5 * I : 0.5 * I), (up ? 0.5 * I : -0.5 * I), 0.5;
  }
  return p;
}

// Entry-by-entry trace, no linear-algebra library calls.
inline double naive_trace_product(const Eigen::MatrixXcd& a,
                                  const Eigen::MatrixXcd& b) {
  std::complex<double> acc = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) acc += a(i, j) * b(j, i);
  return acc.real();
}

// Single-qubit state from its x/y/z up-probabilities (Bloch inversion).
inline Eigen::MatrixXcd bloch_inversion(double px_up, double py_up,
                                        double pz_up) {
  const std::complex<double> I(0.0, 1.0);
  const double rx = 2.0 * px_up - 1.0;
  const double ry = 2.0 * py_up - 1.0;
  const double rz = 2.0 * pz_up - 1.0;
  Eigen::MatrixXcd rho(2, 2);
  rho << 0.5 * (1.0 + rz), 0.5 * (rx - I * ry), 0.5 * (rx + I * ry),
      0.5 * (1.0 - rz);
  return rho;
}

// P(|X - n p| <= k) for X ~ Binomial(n, p), summed exactly via log-gamma.
inline double binomial_tail_within(std::int64_t n, double p, double k) {
  const double mean = n * p;
  const std::int64_t lo =
      std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(mean - k)));
  const std::int64_t hi =
      std::min<std::int64_t>(n, static_cast<std::int64_t>(std::floor(mean + k)));
  double total = 0.0;
  for (std::int64_t j = lo; j <= hi; ++j) {
    const double logp = std::lgamma(double(n) + 1.0) -
                        std::lgamma(double(j) + 1.0) -
                        std::lgamma(double(n - j) + 1.0) +
                        double(j) * std::log(p) +
                        double(n - j) * std::log1p(-p);
    total += std::exp(logp);
  }
  return total;
}

}  // namespace oracles
