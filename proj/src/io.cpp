#include "psdsense/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "psdsense/errors.hpp"
#include "psdsense/hash.hpp"

namespace psdsense {

namespace {

constexpr const char* kOperatorsHeader = "# psd-sense operators v1";
constexpr const char* kRecordHeader = "# psd-sense record v1";

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

void write_operator_block(std::ofstream& out, const Eigen::MatrixXcd& m) {
  const int d = static_cast<int>(m.rows());
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j).real()) << ' '
          << format_double(m(i, j).imag());
    }
    out << '\n';
  }
}

struct OperatorFile {
  int dim = 0;
  double scale = 1.0;
  double element_scale = 1.0;
  std::vector<LayoutBlock> layout;
  std::vector<HermitianMatrix> ops;
};

OperatorFile read_operator_file(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != kOperatorsHeader)
    throw IoError(path + ": missing '" + kOperatorsHeader + "' header");
  OperatorFile file;
  int count = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key.empty()) continue;
    if (key == "dim") {
      ls >> file.dim;
    } else if (key == "count") {
      ls >> count;
    } else if (key == "scale") {
      ls >> file.scale;
    } else if (key == "element_scale") {
      ls >> file.element_scale;
    } else if (key == "block") {
      LayoutBlock block;
      ls >> block.label >> block.count;
      file.layout.push_back(block);
    } else if (key == "op") {
      if (file.dim < 1) throw IoError(path + ": op before dim");
      Eigen::MatrixXcd m(file.dim, file.dim);
      for (int i = 0; i < file.dim; ++i) {
        if (!std::getline(in, line))
          throw IoError(path + ": truncated operator entries");
        std::istringstream row(line);
        for (int j = 0; j < file.dim; ++j) {
          double re = 0.0, im = 0.0;
          if (!(row >> re >> im))
            throw IoError(path + ": malformed operator row");
          m(i, j) = std::complex<double>(re, im);
        }
      }
      file.ops.emplace_back(m);
    } else {
      throw IoError(path + ": unknown key '" + key + "'");
    }
  }
  if (file.ops.empty()) throw IoError(path + ": no operators");
  if (count != 0 && count != static_cast<int>(file.ops.size()))
    throw IoError(path + ": operator count mismatch");
  return file;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t layout_hash(const std::vector<LayoutBlock>& layout) {
  std::string acc;
  for (const auto& b : layout) {
    acc += b.label;
    acc += ':';
    acc += std::to_string(b.count);
    acc += ';';
  }
  return fnv1a64(acc);
}

std::uint64_t solver_config_hash(const SolverConfig& config) {
  std::string acc = std::to_string(config.max_iterations) + '|' +
                    format_double(config.gradient_tolerance) + '|' +
                    (config.step_rule == StepRule::backtracking ? "bt" : "fx") +
                    '|' + (config.acceleration ? "acc" : "plain") + '|' +
                    std::to_string(config.seed);
  return fnv1a64(acc);
}

void save_operators(const std::string& path, const SensingMap& map) {
  const auto& ops = map.operators();
  std::ofstream out = open_out(path);
  out << kOperatorsHeader << '\n';
  out << "dim " << map.dim() << '\n';
  out << "count " << map.size() << '\n';
  out << "scale " << format_double(map.scale()) << '\n';
  out << "element_scale " << format_double(map.element_scale()) << '\n';
  for (const auto& block : map.layout())
    out << "block " << block.label << ' ' << block.count << '\n';
  for (std::size_t i = 0; i < ops.size(); ++i) {
    out << "op " << i << '\n';
    write_operator_block(out, ops[i].mat());
  }
  if (!out) throw IoError("write failed: " + path);
}

void save_operators(const std::string& path, const Povm& povm) {
  std::ofstream out = open_out(path);
  out << kOperatorsHeader << '\n';
  const int d = povm.elements.empty() ? 0 : povm.elements.front().dim();
  out << "dim " << d << '\n';
  out << "count " << povm.elements.size() << '\n';
  out << "scale " << format_double(povm.normalization) << '\n';
  out << "element_scale 1\n";
  out << "block " << (povm.label.empty() ? "povm" : povm.label) << ' '
      << povm.elements.size() << '\n';
  for (std::size_t i = 0; i < povm.elements.size(); ++i) {
    out << "op " << i << '\n';
    write_operator_block(out, povm.elements[i].mat());
  }
  if (!out) throw IoError("write failed: " + path);
}

SensingMap load_sensing_map(const std::string& path) {
  OperatorFile file = read_operator_file(path);
  return SensingMap(std::move(file.ops), std::move(file.layout),
                    file.element_scale);
}

Povm load_povm(const std::string& path) {
  OperatorFile file = read_operator_file(path);
  Povm povm;
  povm.elements = std::move(file.ops);
  povm.normalization = file.scale;
  povm.label = file.layout.empty() ? "" : file.layout.front().label;
  validate_povm(povm);
  return povm;
}

void save_state(const std::string& path, const HermitianMatrix& m) {
  std::ofstream out = open_out(path);
  out << kOperatorsHeader << '\n';
  out << "dim " << m.dim() << '\n';
  out << "count 1\n";
  out << "op 0\n";
  write_operator_block(out, m.mat());
  if (!out) throw IoError("write failed: " + path);
}

HermitianMatrix load_state(const std::string& path) {
  OperatorFile file = read_operator_file(path);
  if (file.ops.size() != 1)
    throw IoError(path + ": expected exactly one matrix");
  return file.ops.front();
}

void save_record(const std::string& path, const MeasurementRecord& record,
                 int dim) {
  std::ofstream out = open_out(path);
  out << kRecordHeader << " n_rep=" << record.n_rep
      << " epsilon=" << format_double(record.epsilon) << " d=" << dim
      << " layout_hash=" << hex64(layout_hash(record.layout)) << '\n';
  out << "basis,outcome_index,value\n";
  int offset = 0;
  for (const auto& block : record.layout) {
    for (int i = 0; i < block.count; ++i)
      out << block.label << ',' << i << ','
          << format_double(record.values[offset + i]) << '\n';
    offset += block.count;
  }
  if (!out) throw IoError("write failed: " + path);
}

RecordFile load_record(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind(kRecordHeader, 0) != 0)
    throw IoError(path + ": missing '" + kRecordHeader + "' header");

  RecordFile out;
  std::uint64_t stored_hash = 0;
  {
    std::istringstream hs(line.substr(std::string(kRecordHeader).size()));
    std::string token;
    while (hs >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = token.substr(0, eq);
      const std::string value = token.substr(eq + 1);
      if (key == "n_rep")
        out.record.n_rep = std::stoi(value);
      else if (key == "epsilon")
        out.record.epsilon = std::stod(value);
      else if (key == "d")
        out.dim = std::stoi(value);
      else if (key == "layout_hash")
        stored_hash = std::stoull(value, nullptr, 16);
    }
  }
  if (!std::getline(in, line) || line != "basis,outcome_index,value")
    throw IoError(path + ": missing column header");

  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string basis, index, value;
    if (!std::getline(ls, basis, ',') || !std::getline(ls, index, ',') ||
        !std::getline(ls, value, ','))
      throw IoError(path + ": malformed row '" + line + "'");
    if (out.record.layout.empty() || out.record.layout.back().label != basis)
      out.record.layout.push_back({basis, 0});
    out.record.layout.back().count++;
    values.push_back(std::stod(value));
  }
  out.record.values =
      Eigen::Map<Eigen::VectorXd>(values.data(), values.size());
  if (stored_hash != 0 && stored_hash != layout_hash(out.record.layout))
    throw IoError(path + ": layout hash mismatch");
  return out;
}

std::string serialize_result(const EstimatorResult& result,
                             const std::string& estimator_name,
                             std::uint64_t config_hash,
                             const HermitianMatrix* reference) {
  std::ostringstream out;
  out << "# psd-sense estimate v1\n";
  out << "estimator " << estimator_name << '\n';
  out << "config_hash " << hex64(config_hash) << '\n';
  out << "objective " << format_double(result.objective) << '\n';
  out << "residual " << format_double(result.residual) << '\n';
  out << "iterations " << result.iterations << '\n';
  out << "converged " << (result.converged ? "true" : "false") << '\n';
  out << "renormalized " << (result.renormalized ? "true" : "false") << '\n';
  out << "raw_trace " << format_double(result.diagnostics.raw_trace) << '\n';
  if (reference) {
    out << "frobenius_vs_reference "
        << format_double(frobenius_distance(result.rho_hat, *reference))
        << '\n';
    out << "infidelity_vs_reference "
        << format_double(1.0 - real_inner(*reference, result.rho_hat)) << '\n';
  }
  return out.str();
}

std::string serialize_rip(const RipEstimate& rip) {
  std::ostringstream out;
  out << "# psd-sense rip v1\n";
  out << "r " << rip.r << '\n';
  out << "samples " << rip.samples << '\n';
  out << "delta_lower " << format_double(rip.delta_lower) << '\n';
  out << "min_ratio " << format_double(rip.min_ratio) << '\n';
  out << "max_ratio " << format_double(rip.max_ratio) << '\n';
  out << "note sampled lower bound, not a certificate\n";
  return out.str();
}

std::string serialize_lemma3(const Lemma3Report& report) {
  std::ostringstream out;
  out << "# psd-sense lemma3 v1\n";
  out << "norm " << (report.norm == ResidualNorm::l2 ? "l2" : "max") << '\n';
  out << "feasible " << (report.feasible ? "true" : "false") << '\n';
  out << "t " << format_double(report.t) << '\n';
  out << "solution_distance " << format_double(report.solution_distance)
      << '\n';
  out << "residual_gap " << format_double(report.residual_gap) << '\n';
  out << "trace_gap " << format_double(report.trace_gap) << '\n';
  out << "verdict " << (report.pass ? "PASS" : "FAIL") << '\n';
  if (!report.message.empty()) out << "message " << report.message << '\n';
  return out.str();
}

std::string serialize_uniqueness(const UniquenessReport& report) {
  std::ostringstream out;
  out << "# psd-sense uniqueness v1\n";
  out << "runs " << report.run_labels.size() << '\n';
  out << "max_pairwise_frobenius "
      << format_double(report.max_pairwise_frobenius) << '\n';
  out << "verdict " << (report.pass ? "PASS" : "FAIL") << '\n';
  return out.str();
}

}  // namespace psdsense
