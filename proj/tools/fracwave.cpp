#include <filesystem>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "fracwave/config.hpp"
#include "fracwave/csv.hpp"
#include "fracwave/run.hpp"

namespace fs = std::filesystem;
using namespace fracwave;

namespace {

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (...) {
    std::string message;
    const int code = exit_code_for_current_exception(message);
    std::cerr << "fracwave: " << message << "\n";
    return code;
  }
}

void print_summary(const std::vector<SummaryRow>& rows) {
  std::cout << std::left << std::setw(28) << "check" << std::setw(24) << "metric" << std::setw(26) << "value"
            << "pass\n";
  for (const auto& r : rows) {
    std::cout << std::setw(28) << r.check << std::setw(24) << r.metric << std::setw(26) << format_double(r.value)
              << r.pass << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fracwave: time-fractional damped wave laboratory"};
  app.set_version_flag("--version", std::string(FRACWAVE_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "INI config file")->required();

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Summarise a completed run directory");
  report->add_option("dir", report_dir, "Run directory containing manifest.json")->required();

  std::string sweep_config;
  std::string sweep_param;
  auto* sweep = app.add_subcommand("sweep", "Run a config once per value of one parameter");
  sweep->add_option("config", sweep_config, "INI config file")->required();
  sweep->add_option("--param", sweep_param, "section.key=v1,v2,...")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*run) {
    return guarded([&] {
      const RunConfig cfg = RunConfig::load(config_path);
      const RunResult r = run_experiment(cfg, resolve_output_dir(cfg, config_path));
      std::cout << "wrote " << r.artifacts.size() << " artifacts and manifest.json to " << r.dir.string() << "\n";
      return kExitOk;
    });
  }
  if (*report) {
    return guarded([&] {
      print_summary(emit_report(report_dir));
      return kExitOk;
    });
  }
  return guarded([&] {
    const RunConfig cfg = RunConfig::load(sweep_config);
    const SweepParam param = parse_sweep_param(sweep_param);
    const auto rows = run_sweep(cfg, param, resolve_output_dir(cfg, sweep_config));
    int worst = kExitOk;
    for (const auto& r : rows) {
      std::cout << param.key << "=" << r.value << " -> exit " << r.exit_code;
      if (!r.message.empty()) std::cout << " (" << r.message << ")";
      std::cout << "\n";
      worst = std::max(worst, r.exit_code);
    }
    return worst;
  });
}
