#include "psdsense/hermitian.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "psdsense/errors.hpp"
#include "psdsense/rng.hpp"

namespace psdsense {

HermitianMatrix::HermitianMatrix(const Eigen::MatrixXcd& m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw DomainError("HermitianMatrix: need a square matrix with dim >= 1");
  mat_ = 0.5 * (m + m.adjoint());
}

HermitianMatrix HermitianMatrix::Zero(int dim) {
  return HermitianMatrix(Eigen::MatrixXcd::Zero(dim, dim));
}

HermitianMatrix HermitianMatrix::Identity(int dim) {
  return HermitianMatrix(Eigen::MatrixXcd::Identity(dim, dim));
}

SpectralDecomposition spectral_decomposition(const HermitianMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m.mat());
  if (es.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "eigendecomposition failed: dim=" << m.dim()
        << " frobenius=" << m.mat().norm()
        << " max|entry|=" << m.mat().cwiseAbs().maxCoeff();
    throw NumericalError(msg.str());
  }
  SpectralDecomposition out;
  out.eigenvalues = es.eigenvalues().reverse();
  out.eigenvectors = es.eigenvectors().rowwise().reverse();
  return out;
}

HermitianMatrix project_psd(const HermitianMatrix& m) {
  SpectralDecomposition sd = spectral_decomposition(m);
  Eigen::VectorXd clipped = sd.eigenvalues.cwiseMax(0.0);
  return HermitianMatrix(sd.eigenvectors * clipped.asDiagonal() *
                         sd.eigenvectors.adjoint());
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v, double total) {
  if (total < 0.0)
    throw DomainError("project_simplex: target sum must be nonnegative");
  const int n = static_cast<int>(v.size());
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = u[0];  // total == 0 leaves every coordinate clipped away
  for (int i = 0; i < n; ++i) {
    cumulative += u[i];
    const double candidate = (cumulative - total) / (i + 1);
    if (u[i] - candidate > 0.0)
      theta = candidate;
    else
      break;
  }
  return (v.array() - theta).cwiseMax(0.0);
}

HermitianMatrix project_psd_fixed_trace(const HermitianMatrix& m, double t) {
  if (t < 0.0) throw DomainError("project_psd_fixed_trace: t must be >= 0");
  SpectralDecomposition sd = spectral_decomposition(m);
  Eigen::VectorXd lam = project_simplex(sd.eigenvalues, t);
  return HermitianMatrix(sd.eigenvectors * lam.asDiagonal() *
                         sd.eigenvectors.adjoint());
}

Norms norms(const HermitianMatrix& m) {
  SpectralDecomposition sd = spectral_decomposition(m);
  Norms out;
  out.frobenius = sd.eigenvalues.norm();
  out.nuclear = sd.eigenvalues.cwiseAbs().sum();
  out.trace = sd.eigenvalues.sum();
  return out;
}

RankSplit rank_split(const HermitianMatrix& m, int r) {
  const int d = m.dim();
  if (r < 1 || r > d)
    throw DomainError("rank_split: r must satisfy 1 <= r <= dim");
  SpectralDecomposition sd = spectral_decomposition(m);
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(sd.eigenvalues[a]) > std::abs(sd.eigenvalues[b]);
  });
  Eigen::MatrixXcd head = Eigen::MatrixXcd::Zero(d, d);
  Eigen::MatrixXcd tail = Eigen::MatrixXcd::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    const int i = order[k];
    const Eigen::VectorXcd v = sd.eigenvectors.col(i);
    Eigen::MatrixXcd term = sd.eigenvalues[i] * (v * v.adjoint());
    if (k < r)
      head += term;
    else
      tail += term;
  }
  RankSplit out;
  out.head = HermitianMatrix(head);
  out.tail = HermitianMatrix(tail);
  out.r = r;
  return out;
}

HermitianMatrix haar_random_pure_state(int dim, std::uint64_t seed) {
  if (dim < 1) throw DomainError("haar_random_pure_state: dim must be >= 1");
  std::mt19937_64 eng = make_engine(derive_seed(seed, Stream::haar_state));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXcd psi(dim);
  double norm2 = 0.0;
  do {
    for (int i = 0; i < dim; ++i) {
      psi[i] = std::complex<double>(normal(eng), normal(eng));
    }
    norm2 = psi.squaredNorm();
  } while (norm2 < 1e-300);
  psi /= std::sqrt(norm2);
  return HermitianMatrix(psi * psi.adjoint());
}

HermitianMatrix random_low_rank_state(int dim, int rank, std::uint64_t seed) {
  if (dim < 1) throw DomainError("random_low_rank_state: dim must be >= 1");
  if (rank < 1 || rank > dim)
    throw DomainError("random_low_rank_state: rank must satisfy 1 <= rank <= dim");
  std::mt19937_64 eng = make_engine(derive_seed(seed, Stream::low_rank_state));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXcd g(dim, rank);
  for (int j = 0; j < rank; ++j)
    for (int i = 0; i < dim; ++i)
      g(i, j) = std::complex<double>(normal(eng), normal(eng));
  Eigen::MatrixXcd rho = g * g.adjoint();
  const double tr = rho.trace().real();
  if (tr < 1e-300) return random_low_rank_state(dim, rank, seed + 1);
  return HermitianMatrix(rho / tr);
}

HermitianMatrix gaussian_hermitian(int dim, std::uint64_t seed) {
  if (dim < 1) throw DomainError("gaussian_hermitian: dim must be >= 1");
  std::mt19937_64 eng = make_engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXcd g(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i)
      g(i, j) = std::complex<double>(normal(eng), normal(eng));
  return HermitianMatrix(g);  // constructor symmetrizes
}

double real_inner(const HermitianMatrix& a, const HermitianMatrix& b) {
  return (a.mat().array() * b.mat().array().conjugate()).sum().real();
}

double frobenius_distance(const HermitianMatrix& a, const HermitianMatrix& b) {
  return (a.mat() - b.mat()).norm();
}

Eigen::VectorXd herm_to_real_vec(const Eigen::MatrixXcd& m) {
  const int d = static_cast<int>(m.rows());
  Eigen::VectorXd v(d * d);
  int k = 0;
  for (int i = 0; i < d; ++i) v[k++] = m(i, i).real();
  const double s = std::sqrt(2.0);
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      v[k++] = s * m(i, j).real();
      v[k++] = s * m(i, j).imag();
    }
  }
  return v;
}

Eigen::MatrixXcd real_vec_to_herm(const Eigen::VectorXd& v, int dim) {
  if (v.size() != static_cast<Eigen::Index>(dim) * dim)
    throw DomainError("real_vec_to_herm: length must be dim^2");
  Eigen::MatrixXcd m(dim, dim);
  int k = 0;
  for (int i = 0; i < dim; ++i) m(i, i) = v[k++];
  const double s = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < dim; ++i) {
    for (int j = i + 1; j < dim; ++j) {
      const double re = v[k++] * s;
      const double im = v[k++] * s;
      m(i, j) = std::complex<double>(re, im);
      m(j, i) = std::complex<double>(re, -im);
    }
  }
  return m;
}

}  // namespace psdsense
