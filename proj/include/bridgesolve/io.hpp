#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bridgesolve/solvers.hpp"

namespace bridgesolve {

/// Shortest decimal string that parses back to exactly `x`.
std::string format_double(double x);

/// Comma-separated rows with a header line; cells are written verbatim.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& row(std::vector<std::string> cells);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

void write_text_file(const std::filesystem::path& path, const std::string& content);

/// JSON snapshot of a solver configuration.
std::string solver_config_json(const SolverConfig& config);

/// RunRecord for trajectory column `column` as a JSON document. With
/// `record_timing` false the wall time is written as 0.
std::string run_record_json(const RunRecord& record, Eigen::Index column, bool record_timing);

/// Trajectory dump: one row per recorded step (step_index, t, x components).
std::string trajectory_csv(const RunRecord& record, Eigen::Index column);

}  // namespace bridgesolve
