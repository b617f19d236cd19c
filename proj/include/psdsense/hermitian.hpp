#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>

namespace psdsense {

/// Dense d x d complex Hermitian matrix. Construction symmetrizes
/// M <- (M + M^dag)/2 so round-off from solver iterations never accumulates
/// into a non-Hermitian carrier.
class HermitianMatrix {
 public:
  HermitianMatrix() : mat_(Eigen::MatrixXcd::Zero(1, 1)) {}
  explicit HermitianMatrix(const Eigen::MatrixXcd& m);

  static HermitianMatrix Zero(int dim);
  static HermitianMatrix Identity(int dim);

  int dim() const { return static_cast<int>(mat_.rows()); }
  const Eigen::MatrixXcd& mat() const { return mat_; }
  std::complex<double> operator()(int i, int j) const { return mat_(i, j); }
  double trace() const { return mat_.trace().real(); }
  double frobenius() const { return mat_.norm(); }

 private:
  Eigen::MatrixXcd mat_;
};

/// Eigenvalues sorted descending; eigenvectors the matching unitary columns.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXcd eigenvectors;
};

/// Top-r spectral part (by |eigenvalue|) and the remainder.
struct RankSplit {
  HermitianMatrix head;
  HermitianMatrix tail;
  int r = 0;
};

struct Norms {
  double frobenius = 0.0;
  double nuclear = 0.0;
  double trace = 0.0;
};

SpectralDecomposition spectral_decomposition(const HermitianMatrix& m);

/// Frobenius-nearest positive semidefinite matrix (negative eigenvalues clipped).
HermitianMatrix project_psd(const HermitianMatrix& m);

/// Frobenius-nearest matrix in {X >= 0, Tr X = t}: eigenvalues projected onto
/// the simplex of total mass t, eigenvectors unchanged.
HermitianMatrix project_psd_fixed_trace(const HermitianMatrix& m, double t);

Norms norms(const HermitianMatrix& m);

/// Splits by descending |eigenvalue|; ties resolved by the stable descending
/// eigenvalue order. 1 <= r <= dim.
RankSplit rank_split(const HermitianMatrix& m, int r);

/// rho = |psi><psi| with |psi> a normalized complex standard-normal vector.
/// Deterministic for a fixed seed.
HermitianMatrix haar_random_pure_state(int dim, std::uint64_t seed);

/// Normalized Wishart state G G^dag / Tr(G G^dag) with G a dim x rank complex
/// Gaussian matrix; reduces to haar_random_pure_state's distribution at rank 1.
HermitianMatrix random_low_rank_state(int dim, int rank, std::uint64_t seed);

/// Random Hermitian matrix with independent Gaussian entries, (G + G^dag)/2.
HermitianMatrix gaussian_hermitian(int dim, std::uint64_t seed);

/// Euclidean projection of v onto {x >= 0, sum(x) = total}.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v, double total);

/// Real Frobenius inner product Re Tr(A B) of two Hermitian matrices.
double real_inner(const HermitianMatrix& a, const HermitianMatrix& b);

double frobenius_distance(const HermitianMatrix& a, const HermitianMatrix& b);

/// Isometric real coordinates for the Hermitian matrix space: diagonal entries
/// followed by sqrt(2)*(Re, Im) of the strict upper triangle, so that
/// Tr(A B) = herm_to_real_vec(A) . herm_to_real_vec(B).
Eigen::VectorXd herm_to_real_vec(const Eigen::MatrixXcd& m);
Eigen::MatrixXcd real_vec_to_herm(const Eigen::VectorXd& v, int dim);

}  // namespace psdsense
