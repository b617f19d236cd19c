#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "psdsense/estimators.hpp"

namespace psdsense {

struct ExperimentConfig {
  int n_qubits = 3;
  std::vector<int> basis_counts;  // sorted ascending at validation
  std::vector<std::string> estimators;
  int n_trials = 10;
  int n_rep = 0;  // 0 = noiseless
  std::uint64_t seed = 0;
  std::string output_dir;
  int rank_of_truth = 1;
  SolverConfig solver;
  double noise_sigma_factor = 2.0;
  /// Each basis is sampled n_rep times; the per-basis reading of the
  /// repetition budget is recorded here for the emitted metadata.
  std::string repetition_convention = "per_basis";
  /// When false the runtime column is written as 0 so outputs are
  /// byte-for-byte reproducible.
  bool include_runtime = true;
  int threads = 0;  // 0 = hardware concurrency

  static ExperimentConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

struct TrialRow {
  int trial = 0;
  int m_bases = 0;
  std::string estimator;
  double infidelity = 0.0;
  double frobenius = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  double runtime_seconds = 0.0;
};

struct ReportRow {
  int m_bases = 0;
  std::string estimator;
  double mean_infidelity = 0.0;
  double std_infidelity = 0.0;
  double mean_frobenius = 0.0;
  double mean_iterations = 0.0;
  double mean_runtime_seconds = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ReportRow> rows;     // one per (m, estimator), sorted
  std::vector<TrialRow> trials;    // raw per-trial rows
};

/// Full sweep: per trial draw a Haar (or rank-r) state, per m a random basis
/// set, simulate the record (sampling when n_rep > 0), run every estimator
/// and aggregate infidelity / Frobenius-distance statistics. Deterministic
/// under the config seed; estimator failures become non-converged rows.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Writes report.csv, trials.csv, config.json and plot.gp into output_dir.
void emit_outputs(const ExperimentReport& report,
                  const std::string& output_dir);

int cli_main(int argc, char** argv);

}  // namespace psdsense
