#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "psdsense/analysis.hpp"
#include "psdsense/estimators.hpp"
#include "psdsense/hermitian.hpp"
#include "psdsense/measurement.hpp"
#include "psdsense/sensing.hpp"

namespace psdsense {

/// Shortest round-trip decimal form of v ('.'-separated, C locale).
std::string format_double(double v);

std::uint64_t layout_hash(const std::vector<LayoutBlock>& layout);
std::uint64_t solver_config_hash(const SolverConfig& config);

// Operator text format, shared by POVMs and sensing maps: a header with dim,
// count, scale and element_scale, `block <label> <count>` lines, then per
// operator a `op <index>` line followed by dim rows of 2*dim decimals
// (re im pairs, row-major).
void save_operators(const std::string& path, const SensingMap& map);
void save_operators(const std::string& path, const Povm& povm);
SensingMap load_sensing_map(const std::string& path);
Povm load_povm(const std::string& path);  // validates PSD and completeness

// Single Hermitian matrix in the same entry layout.
void save_state(const std::string& path, const HermitianMatrix& m);
HermitianMatrix load_state(const std::string& path);

// Record CSV: one `# psd-sense record v1 ...` header line carrying n_rep,
// epsilon, d and the layout hash, a column header, then
// (basis,outcome_index,value) rows.
void save_record(const std::string& path, const MeasurementRecord& record,
                 int dim);

struct RecordFile {
  MeasurementRecord record;
  int dim = 0;
};
RecordFile load_record(const std::string& path);

std::string serialize_result(const EstimatorResult& result,
                             const std::string& estimator_name,
                             std::uint64_t config_hash,
                             const HermitianMatrix* reference = nullptr);
std::string serialize_rip(const RipEstimate& rip);
std::string serialize_lemma3(const Lemma3Report& report);
std::string serialize_uniqueness(const UniquenessReport& report);

}  // namespace psdsense
