#include "psdsense/sensing.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "psdsense/errors.hpp"
#include "psdsense/rng.hpp"

namespace psdsense {

namespace {

// Dense elements are materialized up to dim 64 (n <= 6 qubits); beyond that
// only the tensor-structured Pauli backend is available.
constexpr std::int64_t kVectorizeLimit = std::int64_t(1) << 23;  // doubles

using Matrix2cd = Eigen::Matrix2cd;
const std::complex<double> kI(0.0, 1.0);

Matrix2cd pauli_projector(char axis, bool up) {
  Matrix2cd p;
  switch (axis) {
    case 'z':
      p << (up ? 1.0 : 0.0), 0.0, 0.0, (up ? 0.0 : 1.0);
      break;
    case 'x':
      p << 0.5, (up ? 0.5 : -0.5), (up ? 0.5 : -0.5), 0.5;
      break;
    case 'y':
      p << 0.5, (up ? -0.5 * kI : 0.5 * kI), (up ? 0.5 * kI : -0.5 * kI), 0.5;
      break;
    default:
      throw DomainError(std::string("invalid Pauli basis character '") + axis +
                        "' (expected x, y or z)");
  }
  return p;
}

// Measurement-basis rotation: rows are the outcome bra vectors, so that
// diag(U rho U^dag) gives the outcome probabilities of the axis.
Matrix2cd basis_rotation(char axis) {
  const double s = 1.0 / std::sqrt(2.0);
  Matrix2cd u;
  switch (axis) {
    case 'z':
      u << 1.0, 0.0, 0.0, 1.0;
      break;
    case 'x':
      u << s, s, s, -s;
      break;
    case 'y':
      u << s, -s * kI, s, s * kI;
      break;
    default:
      throw DomainError(std::string("invalid Pauli basis character '") + axis +
                        "' (expected x, y or z)");
  }
  return u;
}

void check_basis_string(int n_qubits, const std::string& basis) {
  if (n_qubits < 1) throw DomainError("qubit count must be >= 1");
  if (static_cast<int>(basis.size()) != n_qubits)
    throw DomainError("basis string length must equal the qubit count");
  for (char c : basis)
    if (c != 'x' && c != 'y' && c != 'z')
      throw DomainError(std::string("invalid Pauli basis character '") + c +
                        "' (expected x, y or z)");
}

// Left-multiplies M by (I ⊗ u ⊗ I) acting on the given qubit of the row index.
void apply_left(Eigen::MatrixXcd& m, const Matrix2cd& u, int qubit, int n) {
  const int d = static_cast<int>(m.rows());
  const int stride = 1 << (n - 1 - qubit);
  for (int c = 0; c < d; ++c) {
    for (int high = 0; high < d / (2 * stride); ++high) {
      for (int low = 0; low < stride; ++low) {
        const int r0 = high * 2 * stride + low;
        const int r1 = r0 + stride;
        const std::complex<double> a = m(r0, c), b = m(r1, c);
        m(r0, c) = u(0, 0) * a + u(0, 1) * b;
        m(r1, c) = u(1, 0) * a + u(1, 1) * b;
      }
    }
  }
}

// Right-multiplies M by (I ⊗ u ⊗ I)^dag acting on the given qubit of the
// column index.
void apply_right_dagger(Eigen::MatrixXcd& m, const Matrix2cd& u, int qubit,
                        int n) {
  const int d = static_cast<int>(m.rows());
  const int stride = 1 << (n - 1 - qubit);
  for (int r = 0; r < d; ++r) {
    for (int high = 0; high < d / (2 * stride); ++high) {
      for (int low = 0; low < stride; ++low) {
        const int c0 = high * 2 * stride + low;
        const int c1 = c0 + stride;
        const std::complex<double> a = m(r, c0), b = m(r, c1);
        m(r, c0) = a * std::conj(u(0, 0)) + b * std::conj(u(0, 1));
        m(r, c1) = a * std::conj(u(1, 0)) + b * std::conj(u(1, 1));
      }
    }
  }
}

// U M U^dag with U the tensor product of per-qubit basis rotations.
Eigen::MatrixXcd rotate_to_basis(const Eigen::MatrixXcd& m,
                                 const std::string& basis) {
  const int n = static_cast<int>(basis.size());
  Eigen::MatrixXcd out = m;
  for (int q = 0; q < n; ++q) {
    const Matrix2cd u = basis_rotation(basis[q]);
    apply_left(out, u, q, n);
    apply_right_dagger(out, u, q, n);
  }
  return out;
}

// U^dag D U for diagonal D given as a vector.
Eigen::MatrixXcd rotate_diagonal_back(const Eigen::VectorXd& diag,
                                      const std::string& basis) {
  const int n = static_cast<int>(basis.size());
  Eigen::MatrixXcd out = diag.cast<std::complex<double>>().asDiagonal();
  for (int q = 0; q < n; ++q) {
    const Matrix2cd u = basis_rotation(basis[q]).adjoint();
    apply_left(out, u, q, n);
    apply_right_dagger(out, u, q, n);
  }
  return out;
}

std::uint64_t pow3(int n) {
  std::uint64_t v = 1;
  for (int i = 0; i < n; ++i) v *= 3;
  return v;
}

std::string basis_from_index(std::uint64_t idx, int n) {
  static const char axes[3] = {'x', 'y', 'z'};
  std::string s(n, 'x');
  for (int i = n - 1; i >= 0; --i) {
    s[i] = axes[idx % 3];
    idx /= 3;
  }
  return s;
}

}  // namespace

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

void validate_povm(const Povm& povm) {
  if (povm.elements.empty()) throw DomainError("POVM has no elements");
  const int d = povm.elements.front().dim();
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(d, d);
  for (const auto& e : povm.elements) {
    if (e.dim() != d) throw DomainError("POVM elements differ in dimension");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(e.mat(),
                                                       Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10)
      throw DomainError("POVM element is not positive semidefinite");
    sum += e.mat();
  }
  const Eigen::MatrixXcd target =
      povm.normalization * Eigen::MatrixXcd::Identity(d, d);
  if ((sum - target).norm() > 1e-10 * std::max(1.0, std::abs(povm.normalization)))
    throw DomainError("POVM elements do not sum to normalization * identity");
}

SensingMap::SensingMap(std::vector<HermitianMatrix> ops,
                       std::vector<LayoutBlock> layout,
                       double element_scale) {
  if (ops.empty()) throw DomainError("SensingMap: empty operator list");
  dim_ = ops.front().dim();
  for (const auto& op : ops)
    if (op.dim() != dim_)
      throw DomainError("SensingMap: operators differ in dimension");
  m_ = static_cast<int>(ops.size());
  ops_ = std::move(ops);
  if (layout.empty()) {
    layout_ = {{"ops", m_}};
  } else {
    int total = 0;
    for (const auto& b : layout) total += b.count;
    if (total != m_)
      throw DomainError("SensingMap: layout counts do not sum to m");
    layout_ = std::move(layout);
  }
  element_scale_ = element_scale;
  compute_scale();
  maybe_vectorize();
}

SensingMap SensingMap::from_pauli_bases(const std::vector<std::string>& bases,
                                        bool rescale) {
  if (bases.empty()) throw DomainError("from_pauli_bases: no bases given");
  const int n = static_cast<int>(bases.front().size());
  for (const auto& b : bases) check_basis_string(n, b);
  const int B = static_cast<int>(bases.size());
  const double factor = rescale ? 1.0 / B : 1.0;

  if (n <= 6) {  // 2^6 == kDenseDimLimit
    std::vector<Povm> povms;
    povms.reserve(bases.size());
    for (const auto& b : bases) povms.push_back(pauli_basis_povm(n, b));
    SensingMap map = sensing_map_from_povms(povms, rescale);
    map.bases_ = bases;
    return map;
  }

  SensingMap map;
  map.dim_ = 1 << n;
  map.m_ = B * map.dim_;
  map.bases_ = bases;
  map.element_scale_ = factor;
  map.scale_ = B * factor;
  map.layout_.reserve(bases.size());
  for (const auto& b : bases) map.layout_.push_back({b, map.dim_});
  return map;
}

const std::vector<HermitianMatrix>& SensingMap::operators() const {
  if (ops_.empty())
    throw DomainError(
        "SensingMap: dense operators unavailable for this dimension "
        "(tensor-structured Pauli backend)");
  return ops_;
}

const SensingMap::RowMajorMatrixXd& SensingMap::vectorized() const {
  if (vec_.size() == 0)
    throw DomainError("SensingMap: vectorized form unavailable (too large)");
  return vec_;
}

void SensingMap::compute_scale() {
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(dim_, dim_);
  for (const auto& op : ops_) sum += op.mat();
  const double s = sum.trace().real() / dim_;
  const Eigen::MatrixXcd target = s * Eigen::MatrixXcd::Identity(dim_, dim_);
  if ((sum - target).norm() <= 1e-8 * std::max(1.0, std::abs(s)) * std::sqrt(dim_))
    scale_ = s;
  else
    scale_ = std::numeric_limits<double>::quiet_NaN();
}

void SensingMap::maybe_vectorize() {
  const std::int64_t cells = std::int64_t(m_) * dim_ * dim_;
  if (cells > kVectorizeLimit) return;
  vec_.resize(m_, dim_ * dim_);
  for (int i = 0; i < m_; ++i) vec_.row(i) = herm_to_real_vec(ops_[i].mat());
}

Eigen::VectorXd SensingMap::apply(const HermitianMatrix& m) const {
  if (m.dim() != dim_) throw DomainError("apply: dimension mismatch");
  if (vec_.size() > 0) return vec_ * herm_to_real_vec(m.mat());
  if (!ops_.empty()) {
    Eigen::VectorXd y(m_);
    for (int i = 0; i < m_; ++i) y[i] = real_inner(ops_[i], m);
    return y;
  }
  Eigen::VectorXd y(m_);
  int offset = 0;
  for (const auto& block : layout_) {
    const Eigen::MatrixXcd rotated = rotate_to_basis(m.mat(), block.label);
    y.segment(offset, block.count) =
        element_scale_ * rotated.diagonal().real();
    offset += block.count;
  }
  return y;
}

HermitianMatrix SensingMap::adjoint(const Eigen::VectorXd& y) const {
  if (y.size() != m_) throw DomainError("adjoint: length mismatch");
  if (vec_.size() > 0)
    return HermitianMatrix(real_vec_to_herm(vec_.transpose() * y, dim_));
  if (!ops_.empty()) {
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(dim_, dim_);
    for (int i = 0; i < m_; ++i) sum += y[i] * ops_[i].mat();
    return HermitianMatrix(sum);
  }
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(dim_, dim_);
  int offset = 0;
  for (const auto& block : layout_) {
    sum += rotate_diagonal_back(y.segment(offset, block.count), block.label);
    offset += block.count;
  }
  return HermitianMatrix(element_scale_ * sum);
}

SensingMap SensingMap::rescaled_to_unit() const {
  if (!std::isfinite(scale_) || scale_ <= 0.0)
    throw DomainError(
        "rescaled_to_unit: operators do not sum to a positive multiple of "
        "the identity");
  if (std::abs(scale_ - 1.0) < 1e-12) return *this;
  SensingMap out;
  out.dim_ = dim_;
  out.m_ = m_;
  out.layout_ = layout_;
  out.bases_ = bases_;
  out.element_scale_ = element_scale_ / scale_;
  if (!ops_.empty()) {
    out.ops_.reserve(ops_.size());
    for (const auto& op : ops_)
      out.ops_.emplace_back(op.mat() / scale_);
    out.compute_scale();
    out.maybe_vectorize();
  } else {
    out.scale_ = 1.0;
  }
  return out;
}

Povm pauli_basis_povm(int n_qubits, const std::string& basis) {
  check_basis_string(n_qubits, basis);
  const int d = 1 << n_qubits;
  Povm povm;
  povm.label = basis;
  povm.normalization = 1.0;
  povm.elements.reserve(d);
  for (int outcome = 0; outcome < d; ++outcome) {
    Eigen::MatrixXcd e = Eigen::MatrixXcd::Ones(1, 1);
    for (int q = 0; q < n_qubits; ++q) {
      const bool up = ((outcome >> (n_qubits - 1 - q)) & 1) == 0;
      e = kron(e, pauli_projector(basis[q], up));
    }
    povm.elements.emplace_back(e);
  }
  return povm;
}

std::vector<std::string> random_pauli_basis_set(int n_qubits,
                                                std::int64_t m_bases,
                                                std::uint64_t seed) {
  if (n_qubits < 1 || n_qubits > 39)
    throw DomainError("random_pauli_basis_set: qubit count out of range");
  const std::uint64_t total = pow3(n_qubits);
  if (m_bases < 1 || static_cast<std::uint64_t>(m_bases) > total) {
    std::ostringstream msg;
    msg << "random_pauli_basis_set: m_bases must be in [1, 3^n] = [1, "
        << total << "], got " << m_bases;
    throw DomainError(msg.str());
  }
  std::mt19937_64 eng = make_engine(derive_seed(seed, Stream::basis_choice));
  std::vector<std::string> out;
  out.reserve(m_bases);
  if (total <= (std::uint64_t(1) << 21)) {
    std::vector<std::uint64_t> pool(total);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::int64_t k = 0; k < m_bases; ++k) {
      std::uniform_int_distribution<std::uint64_t> pick(k, total - 1);
      std::swap(pool[k], pool[pick(eng)]);
      out.push_back(basis_from_index(pool[k], n_qubits));
    }
  } else {
    std::unordered_set<std::uint64_t> seen;
    std::uniform_int_distribution<std::uint64_t> pick(0, total - 1);
    while (static_cast<std::int64_t>(out.size()) < m_bases) {
      const std::uint64_t idx = pick(eng);
      if (seen.insert(idx).second)
        out.push_back(basis_from_index(idx, n_qubits));
    }
  }
  return out;
}

SensingMap sensing_map_from_povms(const std::vector<Povm>& povms,
                                  bool rescale) {
  if (povms.empty()) throw DomainError("sensing_map_from_povms: no POVMs");
  const int d = povms.front().elements.empty()
                    ? 0
                    : povms.front().elements.front().dim();
  const double factor = rescale ? 1.0 / povms.size() : 1.0;
  std::vector<HermitianMatrix> ops;
  std::vector<LayoutBlock> layout;
  for (std::size_t b = 0; b < povms.size(); ++b) {
    const Povm& p = povms[b];
    if (p.elements.empty())
      throw DomainError("sensing_map_from_povms: POVM has no elements");
    if (p.elements.front().dim() != d)
      throw DomainError("sensing_map_from_povms: POVM dimensions differ");
    std::string label = p.label.empty() ? "povm" + std::to_string(b) : p.label;
    layout.push_back({label, static_cast<int>(p.elements.size())});
    for (const auto& e : p.elements) {
      if (e.dim() != d)
        throw DomainError("sensing_map_from_povms: POVM dimensions differ");
      if (rescale)
        ops.emplace_back(factor * e.mat());
      else
        ops.push_back(e);
    }
  }
  return SensingMap(std::move(ops), std::move(layout), factor);
}

AuxiliaryProblem auxiliary_transform(const SensingMap& map,
                                     const Eigen::VectorXd& p,
                                     const Eigen::VectorXd& h) {
  if (p.size() != map.size() || h.size() != map.size())
    throw DomainError("auxiliary_transform: vector length mismatch");
  const auto& ops = map.operators();
  const HermitianMatrix w = map.adjoint(h);
  SpectralDecomposition sd = spectral_decomposition(w);
  const double largest = sd.eigenvalues.cwiseAbs().maxCoeff();
  const double smallest = sd.eigenvalues.minCoeff();
  if (smallest <= 1e-10 * largest) {
    std::ostringstream msg;
    msg << "auxiliary_transform: premise h^T E = W > 0 violated "
        << "(smallest eigenvalue " << smallest << ", largest " << largest
        << ")";
    throw InfeasibilityError(msg.str());
  }
  const Eigen::VectorXd inv_sqrt = sd.eigenvalues.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXcd b = sd.eigenvectors *
                             sd.eigenvalues.cwiseSqrt().asDiagonal() *
                             sd.eigenvectors.adjoint();
  const Eigen::MatrixXcd b_inv =
      sd.eigenvectors * inv_sqrt.asDiagonal() * sd.eigenvectors.adjoint();

  std::vector<HermitianMatrix> transformed;
  transformed.reserve(ops.size());
  for (const auto& op : ops)
    transformed.emplace_back(b_inv * op.mat() * b_inv);

  AuxiliaryProblem out;
  out.transformed_map = SensingMap(std::move(transformed), map.layout());
  out.conjugator = HermitianMatrix(b);
  out.fixed_trace = h.dot(p);
  out.h = h;
  return out;
}

RipEstimate estimate_rip(const SensingMap& map, int r, int samples,
                         std::uint64_t seed) {
  const int d = map.dim();
  if (r < 1 || r > d) throw DomainError("estimate_rip: r out of range");
  if (samples < 1) throw DomainError("estimate_rip: samples must be >= 1");
  double min_ratio = std::numeric_limits<double>::infinity();
  double max_ratio = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const std::uint64_t sample_seed =
        derive_seed(seed, Stream::rip_sample, {static_cast<std::uint64_t>(k)});
    std::mt19937_64 eng = make_engine(sample_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXcd g(d, r);
    for (int j = 0; j < r; ++j)
      for (int i = 0; i < d; ++i)
        g(i, j) = std::complex<double>(normal(eng), normal(eng));
    Eigen::MatrixXcd q =
        Eigen::HouseholderQR<Eigen::MatrixXcd>(g).householderQ() *
        Eigen::MatrixXcd::Identity(d, r);
    Eigen::MatrixXcd core(r, r);
    for (int j = 0; j < r; ++j)
      for (int i = 0; i < r; ++i)
        core(i, j) = std::complex<double>(normal(eng), normal(eng));
    Eigen::MatrixXcd m = q * (0.5 * (core + core.adjoint())) * q.adjoint();
    const double fro = m.norm();
    if (fro < 1e-300) continue;
    const double ratio =
        map.apply(HermitianMatrix(m / fro)).squaredNorm();
    min_ratio = std::min(min_ratio, ratio);
    max_ratio = std::max(max_ratio, ratio);
  }
  RipEstimate out;
  out.r = r;
  out.samples = samples;
  out.min_ratio = min_ratio;
  out.max_ratio = max_ratio;
  out.delta_lower = std::max(1.0 - min_ratio, max_ratio - 1.0);
  return out;
}

double sensing_lipschitz(const SensingMap& map) {
  const int d = map.dim();
  HermitianMatrix v =
      gaussian_hermitian(d, derive_seed(0x9d5e115e, Stream::power_iteration));
  double lambda = 1.0;
  for (int it = 0; it < 50; ++it) {
    HermitianMatrix w = map.adjoint(map.apply(v));
    lambda = w.frobenius();
    if (lambda < 1e-300) return 1.0;
    v = HermitianMatrix(w.mat() / lambda);
  }
  return lambda;
}

}  // namespace psdsense
