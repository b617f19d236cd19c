#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "psdsense/hermitian.hpp"
#include "psdsense/sensing.hpp"

namespace psdsense {

/// Measurement data in probability units: ideal Born probabilities when
/// n_rep == 0, otherwise outcome frequencies from n_rep shots per basis.
/// Each layout block sums to 1.
struct MeasurementRecord {
  Eigen::VectorXd values;
  int n_rep = 0;         // 0 denotes ideal / noiseless
  double epsilon = 0.0;  // ||f - p||_2 bound; 0 when noiseless
  std::vector<LayoutBlock> layout;

  bool is_ideal() const { return n_rep == 0; }
  int size() const { return static_cast<int>(values.size()); }
};

/// p_i = Tr(E_i rho) over a POVM-normalized map (element_scale == 1).
/// Negative round-off up to 1e-8 is clipped and each basis block
/// renormalized; anything beyond that is an error, not a silent fix.
MeasurementRecord born_probabilities(const SensingMap& map,
                                     const HermitianMatrix& rho);

/// One multinomial draw of size n_rep per basis block; f = counts / n_rep.
/// epsilon is filled in via estimate_noise_bound with the given sigma factor.
MeasurementRecord sample_frequencies(const MeasurementRecord& ideal, int n_rep,
                                     std::uint64_t seed,
                                     double sigma_factor = 2.0);

/// Heuristic noise bound: sigma_factor * sqrt(sum f(1-f) / n_rep), the
/// aggregate multinomial standard-deviation estimate of ||f - p||_2.
/// Returns 0 on an ideal record. Degenerate at n_rep == 1 (one-hot blocks
/// give 0); callers should override epsilon in that regime.
double estimate_noise_bound(const MeasurementRecord& record,
                            double sigma_factor = 2.0);

}  // namespace psdsense
