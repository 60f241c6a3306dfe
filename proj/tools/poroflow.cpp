#include "poroflow/bench.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>

using namespace poro;

namespace {

int run(const std::string& path, int jobs, const std::string& out, bool vtk) {
  const RunConfig cfg = load_config(path);
  RunOptions opt;
  opt.jobs = jobs;
  opt.out_dir = out;
  opt.vtk = vtk;
  const RunResult r = run_case(cfg, opt);
  std::size_t points = 0;
  for (const CsvRow& row : r.rows)
    if (row.step == "avg") {
      ++points;
      const std::string point = row.param_name == "none" ? "-" : row.param_name + "=" + row.param_value;
      std::printf("%-28s %-9s %-18s outer %-8s %s\n", row.scheme.c_str(), row.line_search.c_str(), point.c_str(),
                  row.outer_iters.c_str(), row.outcome.c_str());
    }
  std::printf("%zu points, %d failed, rows in %s\n", points, r.failed_points, r.csv_path.c_str());
  return r.failed_points == 0 ? 0 : 2;
}

int rates(const std::string& path) {
  const RunConfig cfg = load_config(path);
  for (const auto& [label, c] : certificates(cfg)) {
    std::printf("%s\n  scheme   %s\n", label.c_str(), to_string(c.kind).c_str());
    if (!c.available) {
      std::printf("  rate     unavailable\n");
      continue;
    }
    std::printf("  formula  %s\n", c.formula.c_str());
    for (const auto& [name, v] : c.ingredients) std::printf("  %-8s %.6g\n", name.c_str(), v);
    std::printf("  rate     %.6g\n  gap      %.6g\n  a post.  %.6g\n", c.rate, c.gap_factor(), c.a_posteriori_factor);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-based splitting schemes for coupled porous media"};
  app.require_subcommand(1);

  std::string config, out = ".";
  int jobs = 1;
  bool vtk = false;
  CLI::App* run_cmd = app.add_subcommand("run", "run every sweep point of a config and write the CSV");
  run_cmd->add_option("config", config, "config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--jobs", jobs, "concurrent sweep points")->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", out, "output directory");
  run_cmd->add_flag("--vtk", vtk, "write VTK fields of the final states");

  std::string rates_config;
  CLI::App* rates_cmd = app.add_subcommand("rates", "print the rate certificates of a config");
  rates_cmd->add_option("config", rates_config, "config file")->required()->check(CLI::ExistingFile);

  CLI::App* self_cmd = app.add_subcommand("selftest", "run the property suite");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return run(config, jobs, out, vtk);
    if (*rates_cmd) return rates(rates_config);
    if (*self_cmd) return selftest(std::cout) == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
