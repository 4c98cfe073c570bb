#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fracwave/config.hpp"
#include "fracwave/forward.hpp"
#include "fracwave/mesh.hpp"

namespace fracwave {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitPrecondition = 3;
inline constexpr int kExitInstability = 4;

/// Maps the exception currently being handled to an exit code and message.
int exit_code_for_current_exception(std::string& message);

struct RunResult {
  std::filesystem::path dir;
  std::vector<std::string> artifacts;  // file names relative to dir, sorted
};

/// FRACWAVE_OUT if set, else [run] output (relative to the config file), else
/// runs/<config stem>.
std::filesystem::path resolve_output_dir(const RunConfig& cfg, const std::filesystem::path& config_path);

/// Executes the configured experiment, writes its CSV artifacts and finally
/// manifest.json into out_dir.
RunResult run_experiment(const RunConfig& cfg, const std::filesystem::path& out_dir);

struct SummaryRow {
  std::string check;
  std::string metric;
  double value = 0.0;
  std::string pass;  // "true", "false" or "" when not applicable
};

/// Aggregates the artifacts of a completed run into summary.csv.
std::vector<SummaryRow> emit_report(const std::filesystem::path& run_dir);

struct SweepParam {
  std::string section;
  std::string key;
  std::vector<std::string> values;
};

/// Parses "section.key=v1,v2,...".
SweepParam parse_sweep_param(const std::string& text);

struct SweepRow {
  std::string value;
  std::filesystem::path dir;
  int exit_code = 0;
  std::string message;
};

/// One run per value in base_dir/<key>=<value>, plus sweep.csv in base_dir.
std::vector<SweepRow> run_sweep(const RunConfig& cfg, const SweepParam& param, const std::filesystem::path& base_dir);

/// Problem described by the [mesh], [time], [coefficients], [initial] and
/// [source] sections.
Problem problem_from_config(const RunConfig& cfg);

/// Random smooth coefficients for the energy ensemble: alpha around a draw
/// in [0.3, 0.8], q around a draw in [0, 2], a in [1, 1.3]; b = c = 0, rho = 1.
Coefficients random_coefficients(const Mesh& mesh, std::uint64_t seed);

/// Random smooth space-time field vanishing on the boundary:
/// sum_j p_j(x) sin(omega_j t + theta_j), two terms.
Field2D random_smooth_field(const Mesh& mesh, const TimeGrid& grid, std::uint64_t seed);

}  // namespace fracwave
