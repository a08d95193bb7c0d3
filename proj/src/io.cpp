#include "bridgesolve/io.hpp"

#include <array>
#include <charconv>
#include <fstream>

#include "json.hpp"

#include "bridgesolve/errors.hpp"

namespace bridgesolve {

using nlohmann::ordered_json;

namespace {

ordered_json column_json(const Batch& x, Eigen::Index column) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.push_back(x(i, column));
  return out;
}

ordered_json config_object(const SolverConfig& config) {
  ordered_json grid = ordered_json::array();
  for (double t : config.grid.times) grid.push_back(t);
  return ordered_json{{"kind", std::string(to_string(config.kind))},
                      {"order", config.order},
                      {"midpoint_ratio", config.midpoint_ratio},
                      {"grid_scheme", std::string(to_string(config.grid.scheme))},
                      {"grid", grid},
                      {"seed", config.seed},
                      {"epsilon_mode", std::string(to_string(config.epsilon_mode))},
                      {"epsilon", config.epsilon},
                      {"churn_ratio", config.churn_ratio},
                      {"nfe", nfe_for_steps(config.kind, config.order, config.grid.steps())}};
}

}  // namespace

std::string format_double(double x) {
  std::array<char, 64> buf{};
  const auto result = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), result.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw std::logic_error("CsvTable: row width differs from header");
  rows_.push_back(std::move(cells));
  return *this;
}

std::string CsvTable::str() const {
  std::string out;
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  emit(header_);
  for (const auto& r : rows_) emit(r);
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::string solver_config_json(const SolverConfig& config) { return config_object(config).dump(2) + "\n"; }

std::string run_record_json(const RunRecord& record, Eigen::Index column, bool record_timing) {
  ordered_json steps = ordered_json::array();
  for (const StepRecord& s : record.steps) {
    ordered_json step{{"from_t", s.from_t},
                      {"to_t", s.to_t},
                      {"nfe_used", s.nfe_used},
                      {"step_kind", std::string(to_string(s.step_kind))}};
    if (s.x_after.size() > 0) step["x_after"] = column_json(s.x_after, column);
    steps.push_back(std::move(step));
  }
  ordered_json doc{{"trajectory", column},
                   {"config", config_object(record.config)},
                   {"steps", steps},
                   {"x_final", column_json(record.x_final, column)},
                   {"total_nfe", record.total_nfe},
                   {"wall_time_ms", record_timing ? record.wall_ms : 0.0}};
  return doc.dump(2) + "\n";
}

std::string trajectory_csv(const RunRecord& record, Eigen::Index column) {
  std::vector<std::string> header{"step_index", "t"};
  for (Eigen::Index i = 0; i < record.x_final.rows(); ++i) header.push_back("x" + std::to_string(i));
  CsvTable table(header);
  for (std::size_t k = 0; k < record.steps.size(); ++k) {
    const StepRecord& s = record.steps[k];
    if (s.x_after.size() == 0) continue;
    std::vector<std::string> cells{std::to_string(k), format_double(s.to_t)};
    for (Eigen::Index i = 0; i < s.x_after.rows(); ++i) cells.push_back(format_double(s.x_after(i, column)));
    table.row(std::move(cells));
  }
  return table.str();
}

}  // namespace bridgesolve
