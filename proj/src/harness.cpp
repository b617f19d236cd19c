#include "psdsense/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <thread>

#include <json.hpp>

#include "psdsense/errors.hpp"
#include "psdsense/io.hpp"
#include "psdsense/measurement.hpp"
#include "psdsense/rng.hpp"

namespace psdsense {

namespace {

using nlohmann::json;

constexpr std::uint64_t kStateTag = 0xa1;
constexpr std::uint64_t kBasesTag = 0xa2;
constexpr std::uint64_t kSampleTag = 0xa3;

SolverConfig solver_from_json(const json& j) {
  SolverConfig cfg;
  if (j.contains("max_iterations")) cfg.max_iterations = j["max_iterations"];
  if (j.contains("gradient_tolerance"))
    cfg.gradient_tolerance = j["gradient_tolerance"];
  if (j.contains("acceleration")) cfg.acceleration = j["acceleration"];
  if (j.contains("step_rule")) {
    const std::string rule = j["step_rule"];
    if (rule == "fixed")
      cfg.step_rule = StepRule::fixed;
    else if (rule == "backtracking")
      cfg.step_rule = StepRule::backtracking;
    else
      throw DomainError("solver.step_rule must be 'fixed' or 'backtracking'");
  }
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (cfg.max_iterations < 1)
    throw DomainError("solver.max_iterations must be >= 1");
  if (cfg.gradient_tolerance < 0.0)
    throw DomainError("solver.gradient_tolerance must be >= 0");
  return cfg;
}

json solver_to_json(const SolverConfig& cfg) {
  json j;
  j["max_iterations"] = cfg.max_iterations;
  j["gradient_tolerance"] = cfg.gradient_tolerance;
  j["step_rule"] =
      cfg.step_rule == StepRule::backtracking ? "backtracking" : "fixed";
  j["acceleration"] = cfg.acceleration;
  j["seed"] = cfg.seed;
  return j;
}

std::uint64_t pow3_check(int n) {
  std::uint64_t v = 1;
  for (int i = 0; i < n; ++i) v *= 3;
  return v;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.n_qubits < 1 || cfg.n_qubits > 14)
    throw DomainError("experiment: n_qubits must be in [1, 14]");
  if (cfg.basis_counts.empty())
    throw DomainError("experiment: basis_counts must be nonempty");
  const std::uint64_t total = pow3_check(cfg.n_qubits);
  for (int m : cfg.basis_counts)
    if (m < 1 || static_cast<std::uint64_t>(m) > total)
      throw DomainError("experiment: basis count outside [1, 3^n]");
  if (cfg.estimators.empty())
    throw DomainError("experiment: estimators must be nonempty");
  const auto known = registered_estimators();
  for (const auto& name : cfg.estimators)
    if (std::find(known.begin(), known.end(), name) == known.end())
      throw DomainError("experiment: unknown estimator '" + name + "'");
  if (cfg.n_trials < 1) throw DomainError("experiment: n_trials must be >= 1");
  if (cfg.n_rep < 0) throw DomainError("experiment: n_rep must be >= 0");
  const int d = 1 << cfg.n_qubits;
  if (cfg.rank_of_truth < 1 || cfg.rank_of_truth > d)
    throw DomainError("experiment: rank_of_truth must be in [1, 2^n]");
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DomainError(std::string("config: invalid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    cfg.n_qubits = j.at("n_qubits");
    cfg.basis_counts = j.at("basis_counts").get<std::vector<int>>();
    cfg.estimators = j.at("estimators").get<std::vector<std::string>>();
    if (j.contains("n_trials")) cfg.n_trials = j["n_trials"];
    if (j.contains("n_rep")) cfg.n_rep = j["n_rep"];
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"];
    if (j.contains("rank_of_truth")) cfg.rank_of_truth = j["rank_of_truth"];
    if (j.contains("solver")) cfg.solver = solver_from_json(j["solver"]);
    if (j.contains("noise_sigma_factor"))
      cfg.noise_sigma_factor = j["noise_sigma_factor"];
    if (j.contains("include_runtime"))
      cfg.include_runtime = j["include_runtime"];
    if (j.contains("threads")) cfg.threads = j["threads"];
  } catch (const json::exception& e) {
    throw DomainError(std::string("config: ") + e.what());
  }
  std::sort(cfg.basis_counts.begin(), cfg.basis_counts.end());
  validate(cfg);
  return cfg;
}

std::string ExperimentConfig::to_json_text() const {
  json j;
  j["n_qubits"] = n_qubits;
  j["basis_counts"] = basis_counts;
  j["estimators"] = estimators;
  j["n_trials"] = n_trials;
  j["n_rep"] = n_rep;
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  j["rank_of_truth"] = rank_of_truth;
  j["solver"] = solver_to_json(solver);
  j["noise_sigma_factor"] = noise_sigma_factor;
  j["repetition_convention"] = repetition_convention;
  j["include_runtime"] = include_runtime;
  j["threads"] = threads;
  return j.dump(2) + "\n";
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  validate(config);
  const int n = config.n_qubits;
  const int d = 1 << n;

  struct Task {
    int trial;
    int m;
  };
  std::vector<Task> tasks;
  for (int trial = 0; trial < config.n_trials; ++trial)
    for (int m : config.basis_counts) tasks.push_back({trial, m});
  std::vector<std::vector<TrialRow>> slots(tasks.size());

  auto run_task = [&](const Task& task) {
    std::vector<TrialRow> rows;
    const std::uint64_t state_seed = derive_seed(
        config.seed, {kStateTag, static_cast<std::uint64_t>(task.trial)});
    const HermitianMatrix rho0 =
        config.rank_of_truth == 1
            ? haar_random_pure_state(d, state_seed)
            : random_low_rank_state(d, config.rank_of_truth, state_seed);
    const std::vector<std::string> bases = random_pauli_basis_set(
        n, task.m,
        derive_seed(config.seed, {kBasesTag,
                                  static_cast<std::uint64_t>(task.trial),
                                  static_cast<std::uint64_t>(task.m)}));
    const SensingMap map = SensingMap::from_pauli_bases(bases, false);
    MeasurementRecord record = born_probabilities(map, rho0);
    if (config.n_rep > 0)
      record = sample_frequencies(
          record, config.n_rep,
          derive_seed(config.seed, {kSampleTag,
                                    static_cast<std::uint64_t>(task.trial),
                                    static_cast<std::uint64_t>(task.m)}),
          config.noise_sigma_factor);

    for (const auto& name : config.estimators) {
      TrialRow row;
      row.trial = task.trial;
      row.m_bases = task.m;
      row.estimator = name;
      const auto start = std::chrono::steady_clock::now();
      try {
        EstimatorInvocation inv;
        inv.epsilon = record.epsilon;
        const EstimatorResult result =
            run_estimator_by_name(name, map, record, config.solver, inv);
        row.infidelity = clamp01(1.0 - real_inner(rho0, result.rho_hat));
        row.frobenius = frobenius_distance(result.rho_hat, rho0);
        row.residual = result.residual;
        row.iterations = result.iterations;
        row.converged = result.converged;
      } catch (const std::exception&) {
        row.infidelity = std::numeric_limits<double>::quiet_NaN();
        row.frobenius = std::numeric_limits<double>::quiet_NaN();
        row.residual = std::numeric_limits<double>::quiet_NaN();
        row.iterations = 0;
        row.converged = false;
      }
      const auto stop = std::chrono::steady_clock::now();
      row.runtime_seconds =
          config.include_runtime
              ? std::chrono::duration<double>(stop - start).count()
              : 0.0;
      rows.push_back(std::move(row));
    }
    return rows;
  };

  int thread_count = config.threads > 0
                         ? config.threads
                         : static_cast<int>(std::thread::hardware_concurrency());
  thread_count =
      std::max(1, std::min<int>(thread_count, static_cast<int>(tasks.size())));
  if (thread_count == 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) slots[i] = run_task(tasks[i]);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (std::size_t i = next.fetch_add(1); i < tasks.size();
           i = next.fetch_add(1))
        slots[i] = run_task(tasks[i]);
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < thread_count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentReport report;
  report.config = config;
  for (auto& slot : slots)
    for (auto& row : slot) report.trials.push_back(std::move(row));

  for (int m : config.basis_counts) {
    for (const auto& name : config.estimators) {
      ReportRow row;
      row.m_bases = m;
      row.estimator = name;
      double sum_inf = 0.0, sum_inf2 = 0.0, sum_fro = 0.0, sum_iter = 0.0,
             sum_time = 0.0;
      int count = 0;
      for (const auto& trial : report.trials) {
        if (trial.m_bases != m || trial.estimator != name) continue;
        sum_inf += trial.infidelity;
        sum_inf2 += trial.infidelity * trial.infidelity;
        sum_fro += trial.frobenius;
        sum_iter += trial.iterations;
        sum_time += trial.runtime_seconds;
        ++count;
      }
      if (count == 0) continue;
      row.mean_infidelity = sum_inf / count;
      row.std_infidelity =
          count > 1 ? std::sqrt(std::max(
                          0.0, (sum_inf2 - sum_inf * sum_inf / count) /
                                   (count - 1)))
                    : 0.0;
      row.mean_frobenius = sum_fro / count;
      row.mean_iterations = sum_iter / count;
      row.mean_runtime_seconds = sum_time / count;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

void emit_outputs(const ExperimentReport& report,
                  const std::string& output_dir) {
  if (report.rows.empty()) throw DomainError("emit_outputs: empty report");
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + output_dir);

  const auto path = [&](const char* name) {
    return (std::filesystem::path(output_dir) / name).string();
  };

  {
    std::ofstream out(path("report.csv"));
    if (!out) throw IoError("cannot write report.csv in " + output_dir);
    out << "# psd-sense report v1\n";
    out << "m_bases,estimator,mean_infidelity,std_infidelity,mean_frobenius,"
           "mean_iterations,mean_runtime_seconds\n";
    for (const auto& row : report.rows)
      out << row.m_bases << ',' << row.estimator << ','
          << format_double(row.mean_infidelity) << ','
          << format_double(row.std_infidelity) << ','
          << format_double(row.mean_frobenius) << ','
          << format_double(row.mean_iterations) << ','
          << format_double(row.mean_runtime_seconds) << '\n';
    if (!out) throw IoError("write failed: report.csv");
  }
  {
    std::ofstream out(path("trials.csv"));
    if (!out) throw IoError("cannot write trials.csv in " + output_dir);
    out << "# psd-sense trials v1\n";
    out << "trial,m_bases,estimator,infidelity,frobenius,residual,iterations,"
           "converged,runtime_seconds\n";
    for (const auto& row : report.trials)
      out << row.trial << ',' << row.m_bases << ',' << row.estimator << ','
          << format_double(row.infidelity) << ','
          << format_double(row.frobenius) << ','
          << format_double(row.residual) << ',' << row.iterations << ','
          << (row.converged ? "true" : "false") << ','
          << format_double(row.runtime_seconds) << '\n';
    if (!out) throw IoError("write failed: trials.csv");
  }
  {
    std::ofstream out(path("config.json"));
    if (!out) throw IoError("cannot write config.json in " + output_dir);
    out << report.config.to_json_text();
  }
  {
    std::ofstream out(path("plot.gp"));
    if (!out) throw IoError("cannot write plot.gp in " + output_dir);
    out << "# gnuplot script: infidelity vs number of Pauli bases\n";
    out << "set datafile separator ','\n";
    out << "set logscale y\n";
    out << "set xlabel 'Pauli bases m'\n";
    out << "set ylabel 'mean infidelity'\n";
    out << "set key outside\n";
    out << "plot \\\n";
    for (std::size_t i = 0; i < report.config.estimators.size(); ++i) {
      const auto& name = report.config.estimators[i];
      out << "  'report.csv' every ::1 using 1:(strcol(2) eq '" << name
          << "' ? column(3) : 1/0) with linespoints title '" << name << "'";
      out << (i + 1 < report.config.estimators.size() ? ", \\\n" : "\n");
    }
  }
}

}  // namespace psdsense
