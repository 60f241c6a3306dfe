#pragma once

#include "poroflow/analysis.hpp"
#include "poroflow/mesh.hpp"

#include <optional>
#include <stdexcept>

namespace poro {

enum class CaseKind { poro, visco, thermo, nonlinear, toy_am };
std::string to_string(CaseKind c);

struct ConfigError : std::invalid_argument {
  int line;
  ConfigError(int line, const std::string& what);
};

struct Sweep {
  std::string name;             // E, gamma, nu or policy; empty: single point
  std::vector<double> values;   // E, gamma, nu
  std::vector<InnerPolicy> policies;
  std::size_t size() const { return name.empty() ? 1 : name == "policy" ? policies.size() : values.size(); }
};

struct RunConfig {
  CaseKind case_kind = CaseKind::poro;
  int dim = 2;
  Index mesh_n = 16;
  double dt = 0.1;
  int n_steps = 5;
  double load_rate = 1e9;  // traction = load_rate * t
  FootingOptions footing;

  SplitScheme scheme;
  bool scheme_set = false;  // false: kind follows the case
  bool both_line_search = false;
  bool inner_max_set = false;
  MaterialSpec material;
  WKind nl_law = WKind::nl_compressibility;  // p-Laplacian energy, or linear
  std::optional<double> div_min, div_max;  // L-scheme ranges, default from a monolithic run
  double toy_rho = 0.5;

  Sweep sweep;
  bool reference = true;  // monolithic oracle per step
  std::optional<double> C_Omega;
  std::string csv = "results.csv";
  bool vtk = false;

  SchemeKind scheme_kind() const;
  void validate() const;
};

// key = value lines, # comments, dotted keys; every error names its line.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

struct CsvRow {
  std::string case_name, scheme, line_search, param_name, param_value, step;
  std::string outer_iters, inner_iters;
  double final_energy = 0, empirical_rate = 0, theoretical_rate = 0, aposteriori_max_ratio = 0, wall_ms = 0;
  std::string outcome;
};

std::string csv_header();
std::string to_csv(const std::vector<CsvRow>& rows);

struct RunOptions {
  int jobs = 1;
  std::string out_dir = ".";
  bool vtk = false;
};

struct RunResult {
  std::vector<CsvRow> rows;
  int failed_points = 0;
  std::string csv_path;
};

// Executes every sweep point, writes the CSV (and VTK) into out_dir.
RunResult run_case(const RunConfig& cfg, const RunOptions& opt = {});
// Same without touching the file system.
std::vector<CsvRow> run_rows(const RunConfig& cfg, int jobs = 1);

// Certificates for every sweep point.
std::vector<std::pair<std::string, RateCertificate>> certificates(const RunConfig& cfg);

// Property suite; returns the number of failed checks and prints one line per check.
int selftest(std::ostream& os);

}  // namespace poro
