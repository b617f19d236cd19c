#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "psdsense/analysis.hpp"
#include "psdsense/errors.hpp"
#include "psdsense/harness.hpp"
#include "psdsense/io.hpp"
#include "psdsense/measurement.hpp"
#include "psdsense/rng.hpp"

namespace psdsense {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_config(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DomainError(std::string("config: invalid JSON: ") + e.what());
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory: " + dir);
}

std::string join_path(const std::string& dir, const char* name) {
  return (std::filesystem::path(dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write: " + path);
  out << text;
}

SolverConfig solver_from_config(const json& j) {
  SolverConfig cfg;
  if (!j.contains("solver")) return cfg;
  const json& s = j["solver"];
  if (s.contains("max_iterations")) cfg.max_iterations = s["max_iterations"];
  if (s.contains("gradient_tolerance"))
    cfg.gradient_tolerance = s["gradient_tolerance"];
  if (s.contains("acceleration")) cfg.acceleration = s["acceleration"];
  if (s.contains("step_rule")) {
    const std::string rule = s["step_rule"];
    if (rule == "fixed")
      cfg.step_rule = StepRule::fixed;
    else if (rule == "backtracking")
      cfg.step_rule = StepRule::backtracking;
    else
      throw DomainError("solver.step_rule must be 'fixed' or 'backtracking'");
  }
  if (s.contains("seed")) cfg.seed = s["seed"].get<std::uint64_t>();
  return cfg;
}

struct SimulatedInstance {
  HermitianMatrix truth;
  SensingMap map;
  MeasurementRecord record;
  std::vector<std::string> bases;
};

// Shared by `simulate` and `check-lemma3`: draw a state, pick bases, produce
// the (possibly sampled) record.
SimulatedInstance build_instance(const json& cfg, std::uint64_t seed) {
  const int n = cfg.at("n_qubits");
  const int d = 1 << n;
  const int rank = cfg.contains("rank_of_truth")
                       ? cfg["rank_of_truth"].get<int>()
                       : 1;
  const double sigma = cfg.contains("noise_sigma_factor")
                           ? cfg["noise_sigma_factor"].get<double>()
                           : 2.0;
  SimulatedInstance inst;
  inst.truth = rank == 1 ? haar_random_pure_state(d, seed)
                         : random_low_rank_state(d, rank, seed);
  if (cfg.contains("bases"))
    inst.bases = cfg["bases"].get<std::vector<std::string>>();
  else if (cfg.contains("m_bases"))
    inst.bases = random_pauli_basis_set(n, cfg["m_bases"].get<int>(),
                                        derive_seed(seed, {0xb}));
  else
    throw DomainError("config: need either 'bases' or 'm_bases'");
  inst.map = SensingMap::from_pauli_bases(inst.bases, false);
  inst.record = born_probabilities(inst.map, inst.truth);
  const int n_rep = cfg.contains("n_rep") ? cfg["n_rep"].get<int>() : 0;
  if (n_rep > 0)
    inst.record = sample_frequencies(inst.record, n_rep,
                                     derive_seed(seed, {0xf}), sigma);
  return inst;
}

int cmd_simulate(const std::string& config_path,
                 std::optional<std::uint64_t> seed_flag,
                 const std::string& out_dir) {
  json cfg = parse_config(config_path);
  const std::uint64_t seed =
      seed_flag ? *seed_flag
                : (cfg.contains("seed") ? cfg["seed"].get<std::uint64_t>() : 0);
  SimulatedInstance inst = build_instance(cfg, seed);
  ensure_dir(out_dir);
  save_record(join_path(out_dir, "record.csv"), inst.record, inst.map.dim());
  save_operators(join_path(out_dir, "map.txt"), inst.map);
  save_state(join_path(out_dir, "truth.txt"), inst.truth);
  cfg["seed"] = seed;
  write_text(join_path(out_dir, "config.json"), cfg.dump(2) + "\n");
  std::cout << "wrote record.csv, map.txt, truth.txt to " << out_dir << " ("
            << inst.bases.size() << " bases, epsilon "
            << format_double(inst.record.epsilon) << ")\n";
  return 0;
}

int cmd_estimate(const std::string& map_path, const std::string& record_path,
                 const std::string& estimator, double epsilon_flag,
                 bool epsilon_given, double t_flag,
                 const std::string& reference_path, const std::string& out_dir,
                 std::uint64_t seed) {
  SensingMap map = load_sensing_map(map_path);
  RecordFile rec = load_record(record_path);
  if (rec.dim != 0 && rec.dim != map.dim())
    throw DomainError("estimate: record and map dimensions differ");
  SolverConfig solver;
  solver.seed = seed;
  EstimatorInvocation inv;
  inv.epsilon = epsilon_given ? epsilon_flag : rec.record.epsilon;
  inv.fixed_trace = t_flag;
  const EstimatorResult result =
      run_estimator_by_name(estimator, map, rec.record, solver, inv);

  std::optional<HermitianMatrix> reference;
  if (!reference_path.empty()) reference = load_state(reference_path);
  const std::string text =
      serialize_result(result, estimator, solver_config_hash(solver),
                       reference ? &*reference : nullptr);
  std::cout << text;
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    write_text(join_path(out_dir, "result.txt"), text);
  }
  return 0;
}

int cmd_experiment(const std::string& config_path,
                   std::optional<std::uint64_t> seed_flag,
                   const std::string& out_flag) {
  ExperimentConfig cfg =
      ExperimentConfig::from_json_text(read_file(config_path));
  if (seed_flag) cfg.seed = *seed_flag;
  if (!out_flag.empty()) cfg.output_dir = out_flag;
  if (cfg.output_dir.empty())
    throw DomainError("experiment: no output directory (config or --out)");
  ExperimentReport report = run_experiment(cfg);
  emit_outputs(report, cfg.output_dir);
  std::cout << "wrote " << report.rows.size() << " report rows and "
            << report.trials.size() << " trial rows to " << cfg.output_dir
            << "\n";
  return 0;
}

int cmd_rip(const std::string& config_path,
            std::optional<std::uint64_t> seed_flag,
            const std::string& out_dir) {
  json cfg = parse_config(config_path);
  const std::uint64_t seed =
      seed_flag ? *seed_flag
                : (cfg.contains("seed") ? cfg["seed"].get<std::uint64_t>() : 0);
  SensingMap map;
  if (cfg.contains("map_file")) {
    map = load_sensing_map(cfg["map_file"]);
  } else {
    const int n = cfg.at("n_qubits");
    const auto bases = random_pauli_basis_set(n, cfg.at("m_bases").get<int>(),
                                              derive_seed(seed, {0xb}));
    const bool rescale = cfg.contains("rescale") && cfg["rescale"].get<bool>();
    map = SensingMap::from_pauli_bases(bases, rescale);
  }
  const RipEstimate rip = estimate_rip(map, cfg.at("r").get<int>(),
                                       cfg.at("samples").get<int>(), seed);
  const std::string text = serialize_rip(rip);
  std::cout << text;
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    write_text(join_path(out_dir, "rip.txt"), text);
  }
  return 0;
}

int cmd_check_lemma3(const std::string& config_path,
                     std::optional<std::uint64_t> seed_flag,
                     const std::string& out_dir) {
  json cfg = parse_config(config_path);
  const std::uint64_t seed =
      seed_flag ? *seed_flag
                : (cfg.contains("seed") ? cfg["seed"].get<std::uint64_t>() : 0);
  if (!cfg.contains("n_rep") || cfg["n_rep"].get<int>() < 1)
    throw DomainError("check-lemma3: config needs n_rep >= 1");
  SimulatedInstance inst = build_instance(cfg, seed);
  double epsilon = inst.record.epsilon;
  if (cfg.contains("epsilon") && !cfg["epsilon"].is_string())
    epsilon = cfg["epsilon"].get<double>();
  ResidualNorm norm = ResidualNorm::l2;
  if (cfg.contains("norm")) {
    const std::string name = cfg["norm"];
    if (name == "max")
      norm = ResidualNorm::max;
    else if (name != "l2")
      throw DomainError("check-lemma3: norm must be 'l2' or 'max'");
  }
  SolverConfig solver = solver_from_config(cfg);
  const Lemma3Report report =
      lemma3_check(inst.map, inst.record, epsilon, solver, norm);
  const std::string text = serialize_lemma3(report);
  std::cout << text;
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    write_text(join_path(out_dir, "lemma3.txt"), text);
  }
  return report.pass ? 0 : 2;
}

int cmd_check_bounds(std::optional<double> delta_flag,
                     const std::string& config_path,
                     const std::string& out_dir) {
  std::vector<double> deltas;
  if (delta_flag) deltas.push_back(*delta_flag);
  if (!config_path.empty()) {
    json cfg = parse_config(config_path);
    if (cfg.contains("delta")) deltas.push_back(cfg["delta"].get<double>());
    if (cfg.contains("delta_grid"))
      for (double d : cfg["delta_grid"].get<std::vector<double>>())
        deltas.push_back(d);
  }
  if (deltas.empty())
    throw DomainError("check-bounds: need --delta or a config with delta(s)");
  std::ostringstream out;
  out << "delta_4r,c0,c1\n";
  for (double d : deltas) {
    const BoundConstants c = bound_constants(d);
    out << format_double(d) << ',' << format_double(c.c0) << ','
        << format_double(c.c1) << '\n';
  }
  std::cout << out.str();
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    write_text(join_path(out_dir, "bounds.csv"), out.str());
  }
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Compressed-sensing recovery of low-rank PSD matrices "
               "(quantum state tomography)"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed_flag;

  auto add_common = [&](CLI::App* cmd, bool config_required) {
    auto* opt = cmd->add_option("--config", config_path, "JSON config file");
    if (config_required) opt->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t v) { seed_flag = v; },
        "master seed override");
  };

  auto* simulate = app.add_subcommand("simulate", "emit a measurement record");
  add_common(simulate, true);

  auto* estimate =
      app.add_subcommand("estimate", "run one estimator on one record");
  std::string map_path, record_path, estimator_name, reference_path;
  double epsilon_flag = 0.0, t_flag = 1.0;
  estimate->add_option("--map", map_path, "sensing map file")->required();
  estimate->add_option("--record", record_path, "record CSV")->required();
  estimate->add_option("--estimator", estimator_name, "estimator name")
      ->required();
  auto* eps_opt = estimate->add_option("--epsilon", epsilon_flag,
                                       "noise bound (default: from record)");
  estimate->add_option("--t", t_flag,
                       "trace value for constrained_ls_psd (default 1)");
  estimate->add_option("--reference", reference_path,
                       "reference state file for distance metrics");
  add_common(estimate, false);

  auto* experiment =
      app.add_subcommand("experiment", "full sweep from a JSON config");
  add_common(experiment, true);

  auto* rip = app.add_subcommand("rip", "sampled restricted-isometry bound");
  add_common(rip, true);

  auto* lemma3 = app.add_subcommand(
      "check-lemma3", "trace-min vs fixed-trace equivalence check");
  add_common(lemma3, true);

  auto* bounds =
      app.add_subcommand("check-bounds", "error-bound constants c0, c1");
  std::optional<double> delta_flag;
  bounds->add_option_function<double>(
      "--delta", [&](double v) { delta_flag = v; }, "isometry constant");
  add_common(bounds, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (simulate->parsed())
      return cmd_simulate(config_path, seed_flag,
                          out_dir.empty() ? "." : out_dir);
    if (estimate->parsed())
      return cmd_estimate(map_path, record_path, estimator_name, epsilon_flag,
                          eps_opt->count() > 0, t_flag, reference_path,
                          out_dir, seed_flag.value_or(0));
    if (experiment->parsed())
      return cmd_experiment(config_path, seed_flag, out_dir);
    if (rip->parsed()) return cmd_rip(config_path, seed_flag, out_dir);
    if (lemma3->parsed())
      return cmd_check_lemma3(config_path, seed_flag, out_dir);
    if (bounds->parsed())
      return cmd_check_bounds(delta_flag, config_path, out_dir);
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace psdsense
