#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "psdsense/hermitian.hpp"

namespace psdsense {

struct LayoutBlock {
  std::string label;
  int count = 0;
};

/// Positive operator-valued measure: PSD elements with sum E = s * identity.
struct Povm {
  std::vector<HermitianMatrix> elements;
  double normalization = 1.0;  // the scalar s
  std::string label;
};

/// Throws DomainError when an element is materially non-PSD or the elements
/// do not sum to normalization * identity (both at 1e-10).
void validate_povm(const Povm& povm);

/// Linear map y_i = Tr(A_i M) with its adjoint. Two backends share the same
/// semantics: an explicit operator list (materialized whenever dim <= 64,
/// plus a vectorized real matrix when small enough for fast GEMV application),
/// and a tensor-structured Pauli-basis form used at larger dimensions where
/// materializing 2^n x 2^n elements is not an option.
class SensingMap {
 public:
  using RowMajorMatrixXd =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  SensingMap() = default;
  explicit SensingMap(std::vector<HermitianMatrix> ops,
                      std::vector<LayoutBlock> layout = {},
                      double element_scale = 1.0);
  static SensingMap from_pauli_bases(const std::vector<std::string>& bases,
                                     bool rescale);

  int dim() const { return dim_; }
  int size() const { return m_; }
  const std::vector<LayoutBlock>& layout() const { return layout_; }

  /// s with sum_i A_i = s * identity; NaN when the sum is not proportional
  /// to the identity.
  double scale() const { return scale_; }
  /// Factor already applied to every element (1, or 1/B after rescaling a
  /// B-basis collection).
  double element_scale() const { return element_scale_; }

  bool has_dense_operators() const { return !ops_.empty(); }
  const std::vector<HermitianMatrix>& operators() const;
  bool has_vectorized() const { return vec_.size() > 0; }
  /// m x dim^2 real matrix whose rows are the operators in the isometric
  /// real coordinates of herm_to_real_vec.
  const RowMajorMatrixXd& vectorized() const;
  const std::vector<std::string>& pauli_bases() const { return bases_; }

  Eigen::VectorXd apply(const HermitianMatrix& m) const;
  HermitianMatrix adjoint(const Eigen::VectorXd& y) const;

  /// Copy with every element divided by scale() so that sum A_i = identity.
  SensingMap rescaled_to_unit() const;

 private:
  void compute_scale();
  void maybe_vectorize();

  int dim_ = 0;
  int m_ = 0;
  std::vector<LayoutBlock> layout_;
  std::vector<HermitianMatrix> ops_;
  std::vector<std::string> bases_;
  RowMajorMatrixXd vec_;
  double scale_ = std::numeric_limits<double>::quiet_NaN();
  double element_scale_ = 1.0;
};

/// 2^n rank-1 projectors, tensor products of single-qubit up/down
/// eigenprojectors of sigma_x/y/z per the basis string; outcome order is
/// lexicographic in up/down with the first qubit most significant.
Povm pauli_basis_povm(int n_qubits, const std::string& basis);

/// m_bases distinct basis strings drawn uniformly without replacement from
/// the 3^n possibilities; deterministic under seed.
std::vector<std::string> random_pauli_basis_set(int n_qubits,
                                                std::int64_t m_bases,
                                                std::uint64_t seed);

SensingMap sensing_map_from_povms(const std::vector<Povm>& povms, bool rescale);

/// Auxiliary reformulation: with W = sum_i h_i A_i > 0 and B = W^{1/2}
/// (Hermitian positive definite), the transformed operators B^-1 A_i B^-1
/// define a map whose PSD solution set is in one-to-one correspondence with
/// the original one, and every consistent PSD M has Tr(B M B) = h . p.
struct AuxiliaryProblem {
  SensingMap transformed_map;
  HermitianMatrix conjugator;  // B
  double fixed_trace = 0.0;    // c = h . p
  Eigen::VectorXd h;
};

AuxiliaryProblem auxiliary_transform(const SensingMap& map,
                                     const Eigen::VectorXd& p,
                                     const Eigen::VectorXd& h);

/// Sampled lower bound on the restricted isometry constant delta_r. Ratios
/// are ||A[M]||_2^2 / ||M||_F^2 over random unit-norm rank <= r Hermitian
/// matrices; the true delta_r can only be larger.
struct RipEstimate {
  int r = 0;
  int samples = 0;
  double delta_lower = 0.0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};

RipEstimate estimate_rip(const SensingMap& map, int r, int samples,
                         std::uint64_t seed);

/// Largest eigenvalue of A^dag A, estimated by 50 power iterations from a
/// fixed seeded start; used as a Lipschitz constant for gradient steps.
double sensing_lipschitz(const SensingMap& map);

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

}  // namespace psdsense
