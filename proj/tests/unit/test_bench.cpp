#include <doctest.h>

#include "poroflow/bench.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace poro;

namespace {

int line_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line;
  }
  return -1;
}

const char* small_poro = R"(case = poro
mesh.n = 4
time.n_steps = 2
)";

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("config defaults") {
  const RunConfig c = parse_config("# empty\n\n");
  CHECK(c.case_kind == CaseKind::poro);
  CHECK(c.dim == 2);
  CHECK(c.scheme_kind() == SchemeKind::fixed_stress);
  CHECK(c.sweep.name.empty());
  CHECK(c.sweep.size() == 1);
  CHECK(c.reference);
  CHECK(parse_config("case = thermo").scheme_kind() == SchemeKind::thermo_extended_fixed_stress);
  CHECK(parse_config("case = nonlinear\nnonlinear.policy = L_opt").scheme_kind() == SchemeKind::nl_fixed_stress_lscheme);
  CHECK(parse_config("case = nonlinear\nnonlinear.policy = N_1").scheme.inner_max == 1);
}

TEST_CASE("config errors name their line") {
  CHECK(line_of("case = poro\nmaterial.nu = 0.7\n") == 2);
  CHECK(line_of("case = poro\n\nmaterial.youngs = 1\n") == 3);
  CHECK(line_of("mesh.n = 4\nmesh.n = 8\n") == 2);
  CHECK(line_of("dim = 4") == 1);
  CHECK(line_of("case = poro\nnot a pair\n") == 2);
  CHECK(line_of("sweep.E = 1e9, 1e10\nsweep.nu = 0.1\n") == 2);
  CHECK(line_of("case = visco\nscheme.kind = undrained\n") == 2);
  CHECK(line_of("case = poro\nsweep.gamma = 0.5, 1\nscheme.kind = undrained\n") > 0);
  try {
    parse_config("material.nu = 0.7");
    FAIL("no error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("material.nu") != std::string::npos);
  }
}

TEST_CASE("sweep parsing") {
  const RunConfig c = parse_config("sweep.E = 1e9, 3e9, 1e10, 1e11\n");
  CHECK(c.sweep.name == "E");
  CHECK(c.sweep.size() == 4);
  CHECK(c.sweep.values[2] == 1e10);
  CHECK(line_of("\nsweep.E = 1e10, 1e9") == 2);
  CHECK(parse_config("case = nonlinear\nsweep.policy = N_max, N_1, L_ex").sweep.size() == 3);
  CHECK(line_of("sweep.nu = 0.1, 0.6") == 1);
}

TEST_CASE("csv output") {
  CHECK(csv_header() ==
        "case,scheme,line_search,param_name,param_value,step,outer_iters,inner_iters,final_energy,empirical_rate,"
        "theoretical_rate,aposteriori_max_ratio,wall_ms,outcome");
  CsvRow r;
  r.case_name = "poro";
  r.empirical_rate = std::numeric_limits<double>::quiet_NaN();
  r.theoretical_rate = std::numeric_limits<double>::infinity();
  const std::string s = to_csv({r});
  CHECK(count_lines(s) == 2);
  CHECK(s.find(",nan,inf,") != std::string::npos);
}

TEST_CASE("run rows") {
  RunConfig c = parse_config(std::string(small_poro) + "sweep.E = 1e9, 1e10\nscheme.line_search = both\n");
  const std::vector<CsvRow> rows = run_rows(c);
  // 2 E values x 2 line searches x (2 steps + summary)
  CHECK(rows.size() == 12);
  int avg = 0;
  for (const CsvRow& r : rows) {
    CHECK(r.outcome == "converged");
    CHECK(r.param_name == "E");
    if (r.step == "avg") {
      ++avg;
      CHECK(r.aposteriori_max_ratio <= 1.0);
      CHECK(r.empirical_rate <= r.theoretical_rate * r.theoretical_rate * (1 + 1e-6));
    }
  }
  CHECK(avg == 4);

  // deterministic apart from timings, also in parallel
  std::vector<CsvRow> again = run_rows(c, 3);
  REQUIRE(again.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    again[i].wall_ms = rows[i].wall_ms;
    CHECK(to_csv({again[i]}) == to_csv({rows[i]}));
  }
}

TEST_CASE("toy rows reproduce rho^4") {
  const std::vector<CsvRow> rows = run_rows(parse_config("case = toy_am\ntoy.rho = 0.5\ntime.n_steps = 3\n"));
  CHECK(rows.size() == 4);
  for (const CsvRow& r : rows) {
    CHECK(r.empirical_rate == doctest::Approx(0.0625).epsilon(1e-5));
    CHECK(r.theoretical_rate == doctest::Approx(0.25));
  }
}

TEST_CASE("certificates") {
  const auto c = certificates(parse_config("sweep.gamma = 0.5, 1\n"));
  REQUIRE(c.size() == 2);
  CHECK_FALSE(c[0].second.available);
  CHECK(c[1].second.available);
  CHECK(certificates(parse_config("case = poro")).front().first == "single point");
}

TEST_CASE("run writes csv and vtk") {
  const auto dir = std::filesystem::temp_directory_path() / "poroflow_bench_test";
  std::filesystem::remove_all(dir);
  RunOptions o;
  o.out_dir = dir.string();
  o.vtk = true;
  const RunResult r = run_case(parse_config(std::string(small_poro) + "output.csv = out.csv\n"), o);
  CHECK(r.failed_points == 0);
  CHECK(std::filesystem::path(r.csv_path).filename() == "out.csv");
  std::ifstream f(r.csv_path);
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(count_lines(ss.str()) == 1 + r.rows.size());
  bool vtk = false;
  for (const auto& e : std::filesystem::directory_iterator(dir)) vtk = vtk || e.path().extension() == ".vtk";
  CHECK(vtk);
  std::filesystem::remove_all(dir);
}
