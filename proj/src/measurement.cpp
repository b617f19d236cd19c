#include "psdsense/measurement.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <sstream>

#include "psdsense/errors.hpp"
#include "psdsense/rng.hpp"

namespace psdsense {

namespace {

// Multinomial draw by sequential conditional binomials.
Eigen::VectorXd multinomial(const Eigen::VectorXd& probs, int n,
                            std::mt19937_64& eng) {
  const int k = static_cast<int>(probs.size());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
  int remaining = n;
  double mass = probs.sum();
  for (int i = 0; i < k - 1 && remaining > 0; ++i) {
    double q = mass > 0.0 ? probs[i] / mass : 0.0;
    q = std::min(1.0, std::max(0.0, q));
    std::binomial_distribution<int> binom(remaining, q);
    const int draw = binom(eng);
    counts[i] = draw;
    remaining -= draw;
    mass -= probs[i];
  }
  counts[k - 1] = remaining;
  return counts;
}

}  // namespace

MeasurementRecord born_probabilities(const SensingMap& map,
                                     const HermitianMatrix& rho) {
  if (rho.dim() != map.dim())
    throw DomainError("born_probabilities: dimension mismatch");
  if (std::abs(map.element_scale() - 1.0) > 1e-12)
    throw DomainError(
        "born_probabilities: map must carry POVM-normalized elements "
        "(element_scale == 1)");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.mat(),
                                                     Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-6) {
    std::ostringstream msg;
    msg << "born_probabilities: state is materially non-PSD (eigenvalue "
        << es.eigenvalues().minCoeff() << ")";
    throw DomainError(msg.str());
  }
  if (std::abs(rho.trace() - 1.0) > 1e-6)
    throw DomainError("born_probabilities: state trace differs from 1");

  MeasurementRecord record;
  record.values = map.apply(rho);
  record.layout = map.layout();
  record.n_rep = 0;
  record.epsilon = 0.0;

  int offset = 0;
  for (const auto& block : record.layout) {
    auto segment = record.values.segment(offset, block.count);
    const double min_value = segment.minCoeff();
    if (min_value < -1e-8) {
      std::ostringstream msg;
      msg << "born_probabilities: probability " << min_value
          << " exceeds the round-off clipping budget";
      throw DomainError(msg.str());
    }
    segment = segment.cwiseMax(0.0);
    const double sum = segment.sum();
    if (sum <= 0.0)
      throw DomainError("born_probabilities: basis block has zero total mass");
    segment /= sum;
    offset += block.count;
  }
  return record;
}

MeasurementRecord sample_frequencies(const MeasurementRecord& ideal, int n_rep,
                                     std::uint64_t seed, double sigma_factor) {
  if (!ideal.is_ideal())
    throw DomainError("sample_frequencies: input record is already sampled");
  if (n_rep < 1) throw DomainError("sample_frequencies: n_rep must be >= 1");

  MeasurementRecord out;
  out.values.resize(ideal.values.size());
  out.layout = ideal.layout;
  out.n_rep = n_rep;

  int offset = 0;
  std::uint64_t block_index = 0;
  for (const auto& block : ideal.layout) {
    std::mt19937_64 eng =
        make_engine(derive_seed(seed, Stream::multinomial, {block_index}));
    const Eigen::VectorXd counts =
        multinomial(ideal.values.segment(offset, block.count), n_rep, eng);
    out.values.segment(offset, block.count) = counts / double(n_rep);
    offset += block.count;
    ++block_index;
  }
  out.epsilon = estimate_noise_bound(out, sigma_factor);
  return out;
}

double estimate_noise_bound(const MeasurementRecord& record,
                            double sigma_factor) {
  if (record.is_ideal()) return 0.0;
  const auto& f = record.values;
  const double variance =
      (f.array() * (1.0 - f.array())).sum() / double(record.n_rep);
  return sigma_factor * std::sqrt(std::max(variance, 0.0));
}

}  // namespace psdsense
