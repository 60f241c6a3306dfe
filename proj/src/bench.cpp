#include "poroflow/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

namespace poro {

std::string to_string(CaseKind c) {
  switch (c) {
    case CaseKind::poro: return "poro";
    case CaseKind::visco: return "visco";
    case CaseKind::thermo: return "thermo";
    case CaseKind::nonlinear: return "nonlinear";
    case CaseKind::toy_am: return "toy_am";
  }
  return "?";
}

ConfigError::ConfigError(int l, const std::string& what)
    : std::invalid_argument(l > 0 ? "line " + std::to_string(l) + ": " + what : what), line(l) {}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_double(const std::string& v) {
  std::size_t pos = 0;
  double x;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("'" + v + "' is not a number");
  }
  if (pos != v.size() || !std::isfinite(x)) throw std::invalid_argument("'" + v + "' is not a finite number");
  return x;
}

int to_int(const std::string& v) {
  const double x = to_double(v);
  if (x != std::floor(x) || std::abs(x) > 1e9) throw std::invalid_argument("'" + v + "' is not an integer");
  return static_cast<int>(x);
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("'" + v + "' is not a boolean");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw std::invalid_argument("empty list entry");
    out.push_back(item);
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

std::vector<double> sorted_values(const std::string& v, const std::function<void(double)>& check) {
  std::vector<double> out;
  for (const std::string& s : split_list(v)) {
    out.push_back(to_double(s));
    check(out.back());
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    if (!(out[i] > out[i - 1])) throw std::invalid_argument("sweep values must be strictly increasing");
  return out;
}

double positive(const std::string& v) {
  const double x = to_double(v);
  if (!(x > 0)) throw std::invalid_argument("must be positive");
  return x;
}

double nonnegative(const std::string& v) {
  const double x = to_double(v);
  if (x < 0) throw std::invalid_argument("must be nonnegative");
  return x;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> m = [] {
    std::map<std::string, Setter> s;
    s["case"] = [](RunConfig& c, const std::string& v) {
      for (CaseKind k : {CaseKind::poro, CaseKind::visco, CaseKind::thermo, CaseKind::nonlinear, CaseKind::toy_am})
        if (to_string(k) == v) {
          c.case_kind = k;
          return;
        }
      throw std::invalid_argument("unknown case '" + v + "'");
    };
    s["dim"] = [](RunConfig& c, const std::string& v) {
      c.dim = to_int(v);
      if (c.dim != 2 && c.dim != 3) throw std::invalid_argument("dim must be 2 or 3");
    };
    s["mesh.n"] = [](RunConfig& c, const std::string& v) {
      c.mesh_n = to_int(v);
      if (c.mesh_n < 1) throw std::invalid_argument("mesh.n must be at least 1");
    };
    s["time.dt"] = [](RunConfig& c, const std::string& v) { c.dt = positive(v); };
    s["time.n_steps"] = [](RunConfig& c, const std::string& v) {
      c.n_steps = to_int(v);
      if (c.n_steps < 1) throw std::invalid_argument("time.n_steps must be at least 1");
    };
    s["load.magnitude"] = [](RunConfig& c, const std::string& v) { c.load_rate = to_double(v); };
    s["bc.noflow_on_patch"] = [](RunConfig& c, const std::string& v) { c.footing.noflow_on_patch = to_bool(v); };
    s["bc.patch_lo"] = [](RunConfig& c, const std::string& v) { c.footing.patch_lo = to_double(v); };
    s["bc.patch_hi"] = [](RunConfig& c, const std::string& v) { c.footing.patch_hi = to_double(v); };

    s["scheme.kind"] = [](RunConfig& c, const std::string& v) {
      c.scheme.kind = parse_scheme_kind(v);
      c.scheme_set = true;
    };
    s["scheme.gamma"] = [](RunConfig& c, const std::string& v) { c.scheme.gamma = nonnegative(v); };
    s["scheme.line_search"] = [](RunConfig& c, const std::string& v) {
      c.both_line_search = v == "both";
      if (v == "off" || v == "both")
        c.scheme.line_search = LineSearch::off;
      else if (v == "quadratic")
        c.scheme.line_search = LineSearch::quadratic;
      else
        throw std::invalid_argument("scheme.line_search must be off, quadratic or both");
    };
    s["scheme.tol"] = [](RunConfig& c, const std::string& v) { c.scheme.tol_rel = positive(v); };
    s["scheme.max_outer"] = [](RunConfig& c, const std::string& v) {
      c.scheme.max_outer = to_int(v);
      if (c.scheme.max_outer < 1) throw std::invalid_argument("scheme.max_outer must be at least 1");
    };
    s["scheme.block_path"] = [](RunConfig& c, const std::string& v) { c.scheme.block_path = to_bool(v); };

    auto poro = [](double PoroParams::*f) {
      return [f](RunConfig& c, const std::string& v) {
        c.material.poro.*f = to_double(v);
        c.material.poro.validate();
      };
    };
    s["material.E"] = poro(&PoroParams::E);
    s["material.nu"] = poro(&PoroParams::nu);
    s["material.alpha"] = poro(&PoroParams::alpha);
    s["material.M"] = poro(&PoroParams::M);
    s["material.kappa"] = poro(&PoroParams::kappa);

    auto visco = [](double ViscoParams::*f) {
      return [f](RunConfig& c, const std::string& v) {
        c.material.visco.*f = to_double(v);
        c.material.visco.validate();
      };
    };
    s["visco.E_v"] = visco(&ViscoParams::E_v);
    s["visco.nu_v"] = visco(&ViscoParams::nu_v);
    s["visco.mu_v_prime"] = visco(&ViscoParams::mu_v_prime);
    s["visco.lambda_v_prime"] = visco(&ViscoParams::lambda_v_prime);
    s["visco.alpha_v"] = visco(&ViscoParams::alpha_v);

    auto thermo = [](double ThermoParams::*f) {
      return [f](RunConfig& c, const std::string& v) { c.material.thermo.*f = to_double(v); };
    };
    s["thermo.alpha_T"] = thermo(&ThermoParams::alpha_T);
    s["thermo.alpha_phi"] = thermo(&ThermoParams::alpha_phi);
    s["thermo.C_d"] = thermo(&ThermoParams::C_d);
    s["thermo.T0"] = thermo(&ThermoParams::T0);
    s["thermo.kappa_F"] = thermo(&ThermoParams::kappa_F);
    s["thermo.T_patch"] = [](RunConfig& c, const std::string& v) { c.material.T_patch = to_double(v); };

    s["nonlinear.law"] = [](RunConfig& c, const std::string& v) {
      c.nl_law = parse_w_kind(v);
      if (c.nl_law != WKind::linear && c.nl_law != WKind::nl_compressibility)
        throw std::invalid_argument("nonlinear.law must be p_laplacian or linear");
    };
    s["nonlinear.policy"] = [](RunConfig& c, const std::string& v) { c.scheme.policy = parse_inner_policy(v); };
    s["nonlinear.inner_max"] = [](RunConfig& c, const std::string& v) {
      c.scheme.inner_max = to_int(v);
      c.inner_max_set = true;
      if (c.scheme.inner_max < 1) throw std::invalid_argument("nonlinear.inner_max must be at least 1");
    };
    s["nonlinear.inner_tol"] = [](RunConfig& c, const std::string& v) { c.scheme.inner_tol = positive(v); };
    s["nonlinear.inner_line_search"] = [](RunConfig& c, const std::string& v) {
      c.scheme.inner_line_search = to_bool(v);
    };
    s["nonlinear.div_min"] = [](RunConfig& c, const std::string& v) { c.div_min = nonnegative(v); };
    s["nonlinear.div_max"] = [](RunConfig& c, const std::string& v) { c.div_max = nonnegative(v); };

    s["toy.rho"] = [](RunConfig& c, const std::string& v) {
      c.toy_rho = to_double(v);
      if (!(std::abs(c.toy_rho) < 1)) throw std::invalid_argument("toy.rho must satisfy |rho| < 1");
    };

    s["sweep.E"] = [](RunConfig& c, const std::string& v) {
      c.sweep.values = sorted_values(v, [](double x) {
        if (!(x > 0)) throw std::invalid_argument("sweep.E values must be positive");
      });
      c.sweep.name = "E";
    };
    s["sweep.gamma"] = [](RunConfig& c, const std::string& v) {
      c.sweep.values = sorted_values(v, [](double x) {
        if (x < 0) throw std::invalid_argument("sweep.gamma values must be nonnegative");
      });
      c.sweep.name = "gamma";
    };
    s["sweep.nu"] = [](RunConfig& c, const std::string& v) {
      c.sweep.values = sorted_values(v, [](double x) {
        if (!(x >= 0 && x < 0.5)) throw std::invalid_argument("sweep.nu values must lie in [0, 0.5)");
      });
      c.sweep.name = "nu";
    };
    s["sweep.policy"] = [](RunConfig& c, const std::string& v) {
      c.sweep.policies.clear();
      for (const std::string& p : split_list(v)) c.sweep.policies.push_back(parse_inner_policy(p));
      c.sweep.name = "policy";
    };

    s["output.csv"] = [](RunConfig& c, const std::string& v) {
      if (v.empty()) throw std::invalid_argument("output.csv must not be empty");
      c.csv = v;
    };
    s["output.vtk"] = [](RunConfig& c, const std::string& v) { c.vtk = to_bool(v); };
    s["analysis.C_Omega"] = [](RunConfig& c, const std::string& v) { c.C_Omega = positive(v); };
    s["analysis.reference"] = [](RunConfig& c, const std::string& v) { c.reference = to_bool(v); };
    return s;
  }();
  return m;
}

Family family_of(CaseKind c) {
  switch (c) {
    case CaseKind::poro: return Family::poro;
    case CaseKind::visco: return Family::visco;
    case CaseKind::thermo: return Family::thermo;
    case CaseKind::nonlinear: return Family::nonlinear;
    case CaseKind::toy_am: return Family::toy;
  }
  return Family::poro;
}

bool lscheme_policy(InnerPolicy p) { return p == InnerPolicy::L_ex || p == InnerPolicy::L_opt; }

}  // namespace

SchemeKind RunConfig::scheme_kind() const {
  if (scheme_set) return scheme.kind;
  switch (case_kind) {
    case CaseKind::poro: return SchemeKind::fixed_stress;
    case CaseKind::visco: return SchemeKind::visco_fixed_stress;
    case CaseKind::thermo: return SchemeKind::thermo_extended_fixed_stress;
    case CaseKind::nonlinear:
      return lscheme_policy(scheme.policy) ? SchemeKind::nl_fixed_stress_lscheme : SchemeKind::nl_fixed_stress_newton;
    case CaseKind::toy_am: return SchemeKind::alternating;
  }
  return SchemeKind::fixed_stress;
}

void RunConfig::validate() const {
  MaterialSpec m = material;
  m.family = family_of(case_kind);
  if (case_kind != CaseKind::toy_am) {
    m.poro.validate();
    if (m.family == Family::visco) m.visco.validate();
    if (m.family == Family::thermo) m.thermo.validate(m.poro.M);
  }
  if (!(footing.patch_lo >= 0 && footing.patch_lo < footing.patch_hi && footing.patch_hi <= 1))
    throw std::invalid_argument("bc.patch_lo/bc.patch_hi must satisfy 0 <= lo < hi <= 1");
  const SchemeKind k = scheme_kind();
  const bool ok = [&] {
    switch (case_kind) {
      case CaseKind::poro:
        return k == SchemeKind::monolithic || k == SchemeKind::undrained || k == SchemeKind::fixed_stress ||
               k == SchemeKind::alternating;
      case CaseKind::visco:
        return k == SchemeKind::monolithic || k == SchemeKind::visco_undrained || k == SchemeKind::visco_fixed_stress;
      case CaseKind::thermo:
        return k == SchemeKind::monolithic || k == SchemeKind::thermo_undrained_adiabatic ||
               k == SchemeKind::thermo_extended_fixed_stress || k == SchemeKind::thermo_three_block;
      case CaseKind::nonlinear:
        return k == SchemeKind::monolithic || k == SchemeKind::nl_fixed_stress_newton ||
               k == SchemeKind::nl_fixed_stress_lscheme;
      case CaseKind::toy_am: return k == SchemeKind::alternating;
    }
    return false;
  }();
  if (!ok) throw std::invalid_argument("scheme.kind " + to_string(k) + " does not fit case " + to_string(case_kind));
  if (case_kind == CaseKind::nonlinear && scheme_set && k != SchemeKind::monolithic && sweep.name != "policy" &&
      (k == SchemeKind::nl_fixed_stress_lscheme) != lscheme_policy(scheme.policy))
    throw std::invalid_argument("scheme.kind " + to_string(k) + " conflicts with nonlinear.policy " +
                                to_string(scheme.policy));
  if (sweep.name == "policy" && case_kind != CaseKind::nonlinear)
    throw std::invalid_argument("sweep.policy needs case nonlinear");
  if (sweep.name == "gamma" && !is_fixed_stress(k)) throw std::invalid_argument("sweep.gamma needs a fixed-stress scheme");
  if (case_kind == CaseKind::toy_am && !sweep.name.empty())
    throw std::invalid_argument("case toy_am takes no sweep");
  if (div_min && div_max && *div_min > *div_max)
    throw std::invalid_argument("nonlinear.div_min must not exceed nonlinear.div_max");
  if (dim == 3 && mesh_n > 12) throw std::invalid_argument("mesh.n above 12 in 3D exceeds the desk-scale budget");
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::map<std::string, int> seen;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw.substr(0, raw.find('#')));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected key = value");
    const std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(line, "unknown key '" + key + "'");
    if (seen.count(key)) throw ConfigError(line, "duplicate key '" + key + "' (first on line " + std::to_string(seen[key]) + ")");
    if (key.rfind("sweep.", 0) == 0)
      for (const auto& [k, l] : seen)
        if (k.rfind("sweep.", 0) == 0) throw ConfigError(line, "only one sweep per run (" + k + " on line " + std::to_string(l) + ")");
    seen[key] = line;
    try {
      it->second(cfg, value);
    } catch (const std::exception& e) {
      throw ConfigError(line, key + ": " + e.what());
    }
  }
  if (!cfg.inner_max_set && (lscheme_policy(cfg.scheme.policy) || cfg.scheme.policy == InnerPolicy::N_1))
    cfg.scheme.inner_max = 1;
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    // point at the line of the key the message names, if any
    int where = 0;
    std::size_t best = 0;
    const std::string msg = e.what();
    for (const auto& [k, l] : seen)
      if (msg.find(k) != std::string::npos && k.size() > best) {
        best = k.size();
        where = l;
      }
    throw ConfigError(where, msg);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string csv_header() {
  return "case,scheme,line_search,param_name,param_value,step,outer_iters,inner_iters,final_energy,empirical_rate,"
         "theoretical_rate,aposteriori_max_ratio,wall_ms,outcome";
}

namespace {

std::string num(double v, const char* fmt = "%.10g") {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

std::string to_csv(const std::vector<CsvRow>& rows) {
  std::ostringstream os;
  os << csv_header() << '\n';
  for (const CsvRow& r : rows)
    os << r.case_name << ',' << r.scheme << ',' << r.line_search << ',' << r.param_name << ',' << r.param_value << ','
       << r.step << ',' << r.outer_iters << ',' << r.inner_iters << ',' << num(r.final_energy) << ','
       << num(r.empirical_rate) << ',' << num(r.theoretical_rate) << ',' << num(r.aposteriori_max_ratio) << ','
       << num(r.wall_ms, "%.3f") << ',' << r.outcome << '\n';
  return os.str();
}

namespace {

struct Point {
  std::string param_name = "none", param_value = "-";
  RunConfig cfg;
};

std::vector<Point> expand(const RunConfig& cfg) {
  std::vector<Point> pts;
  const std::size_t n = cfg.sweep.size();
  for (std::size_t i = 0; i < n; ++i)
    for (int ls = 0; ls < (cfg.both_line_search ? 2 : 1); ++ls) {
      Point p;
      p.cfg = cfg;
      if (cfg.both_line_search) p.cfg.scheme.line_search = ls ? LineSearch::quadratic : LineSearch::off;
      const std::string& s = cfg.sweep.name;
      if (!s.empty()) {
        p.param_name = s;
        if (s == "policy") {
          p.cfg.scheme.policy = cfg.sweep.policies[i];
          p.param_value = to_string(cfg.sweep.policies[i]);
          if (!cfg.inner_max_set)
            p.cfg.scheme.inner_max = (lscheme_policy(p.cfg.scheme.policy) || p.cfg.scheme.policy == InnerPolicy::N_1)
                                         ? 1 : SplitScheme{}.inner_max;
        } else {
          const double v = cfg.sweep.values[i];
          p.param_value = num(v, "%.6g");
          if (s == "E") p.cfg.material.poro.E = v;
          if (s == "nu") p.cfg.material.poro.nu = v;
          if (s == "gamma") p.cfg.scheme.gamma = v;
        }
      }
      p.cfg.scheme.kind = p.cfg.scheme_kind();
      pts.push_back(std::move(p));
    }
  return pts;
}

MaterialSpec material_of(const RunConfig& c) {
  MaterialSpec m = c.material;
  m.family = family_of(c.case_kind);
  if (m.family == Family::nonlinear) {
    const Lame l = m.poro.lame(c.dim);
    m.law = c.nl_law == WKind::linear ? linear_law(c.dim, l.mu, l.lambda) : p_laplacian_law(c.dim, l.mu, l.lambda);
    m.b = Compressibility{};
    m.b.M = m.poro.M;
  }
  return m;
}

RateCertificate certificate_of(const RunConfig& c) {
  if (c.case_kind == CaseKind::toy_am) return toy_rate(c.toy_rho);
  RateOptions o;
  o.C_Omega = c.C_Omega;
  RateCertificate cert = theoretical_rate(c.scheme.kind, material_of(c), c.dim, c.dt, o);
  if (is_fixed_stress(c.scheme.kind) && c.scheme.gamma != 1.0 && cert.available) {
    // certificates assume the natural stabilization
    cert.available = false;
    cert.rate = cert.a_posteriori_factor = std::numeric_limits<double>::quiet_NaN();
    cert.formula = "none (gamma != 1)";
  }
  return cert;
}

struct PointResult {
  std::vector<CsvRow> rows;
  Solution final_state;
  std::shared_ptr<const Discretization> disc;
  bool failed = false;
};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); }

CsvRow base_row(const Point& p) {
  CsvRow r;
  r.case_name = to_string(p.cfg.case_kind);
  r.scheme = to_string(p.cfg.scheme.kind);
  r.line_search = to_string(p.cfg.scheme.line_search);
  r.param_name = p.param_name;
  r.param_value = p.param_value;
  return r;
}

CsvRow step_row(const Point& p, int step, const IterationReport& rep, const RateCertificate& cert, bool have_ref,
                double wall) {
  CsvRow r = base_row(p);
  r.step = std::to_string(step);
  const bool ok = rep.outcome == Outcome::converged;
  r.outer_iters = ok ? std::to_string(rep.iterations()) : "-1";
  r.inner_iters = std::to_string(rep.inner_total);
  r.final_energy = rep.final_energy();
  r.empirical_rate = have_ref ? empirical_rate(rep) : std::numeric_limits<double>::quiet_NaN();
  r.theoretical_rate = cert.rate;
  r.aposteriori_max_ratio = have_ref && cert.available ? check_a_posteriori(cert, rep).max_ratio
                                                       : std::numeric_limits<double>::quiet_NaN();
  r.wall_ms = wall;
  r.outcome = to_string(rep.outcome);
  return r;
}

CsvRow summary_row(const Point& p, const std::vector<CsvRow>& steps, const RateCertificate& cert) {
  CsvRow r = base_row(p);
  r.step = "avg";
  double outer = 0, inner = 0, emp = 0, post = 0, wall = 0;
  bool ok = true;
  r.outcome = "converged";
  for (const CsvRow& s : steps) {
    if (s.outcome != "converged") {
      if (ok) r.outcome = s.outcome;
      ok = false;
    } else {
      outer += std::stod(s.outer_iters);
    }
    inner += std::stod(s.inner_iters);
    emp = std::isnan(s.empirical_rate) || std::isnan(emp) ? std::numeric_limits<double>::quiet_NaN()
                                                          : std::max(emp, s.empirical_rate);
    post = std::isnan(s.aposteriori_max_ratio) ? post : std::max(post, s.aposteriori_max_ratio);
    wall += s.wall_ms;
  }
  const double n = static_cast<double>(steps.size());
  r.outer_iters = ok ? num(outer / n, "%.2f") : "-1";
  r.inner_iters = num(inner / n, "%.2f");
  r.final_energy = steps.back().final_energy;
  r.empirical_rate = emp;
  r.theoretical_rate = cert.rate;
  r.aposteriori_max_ratio = cert.available && p.cfg.reference ? post : std::numeric_limits<double>::quiet_NaN();
  r.wall_ms = wall;
  return r;
}

PointResult run_toy(const Point& p) {
  PointResult out;
  const RunConfig& c = p.cfg;
  const RateCertificate cert = certificate_of(c);
  for (int k = 1; k <= c.n_steps; ++k) {
    const auto t0 = Clock::now();
    DiscreteEnergy E = build_toy_energy(c.toy_rho);
    E.b = Eigen::Vector2d(1.0, static_cast<double>(k) / c.n_steps);
    Solution star{SpdSolver(E.H).solve(E.b), MatrixXd()};
    Solution x0{VectorXd::Zero(2), MatrixXd()};
    SolveResult r = alternating_minimization(E, {{"x"}, {"y"}}, c.scheme, x0, &star);
    out.rows.push_back(step_row(p, k, r.report, cert, true, ms_since(t0)));
    out.failed = out.failed || r.report.outcome != Outcome::converged;
    out.final_state = r.state;
  }
  out.rows.push_back(summary_row(p, out.rows, cert));
  return out;
}

PointResult run_point(const Point& p, std::shared_ptr<const Discretization> disc) {
  if (p.cfg.case_kind == CaseKind::toy_am) return run_toy(p);
  PointResult out;
  out.disc = disc;
  const RunConfig& c = p.cfg;
  const MaterialSpec mat = material_of(c);
  SplitScheme scheme = c.scheme;
  const RateCertificate cert = certificate_of(c);

  TimeStepOptions o;
  o.n_steps = c.n_steps;
  o.dt = c.dt;
  o.load_rate = c.load_rate;
  o.reference = c.reference && scheme.kind != SchemeKind::monolithic;
  o.stop_on_failure = true;

  const auto t0 = Clock::now();
  if (scheme.kind == SchemeKind::nl_fixed_stress_lscheme) {
    double lo = c.div_min.value_or(0), hi = c.div_max.value_or(0);
    if (!c.div_min || !c.div_max) {
      SplitScheme mono;
      mono.kind = SchemeKind::monolithic;
      TimeStepOptions om = o;
      om.reference = false;
      const auto [l, h] = divergence_range(time_stepper(disc, mat, mono, om), *disc);
      if (!c.div_min) lo = l;
      if (!c.div_max) hi = h;
    }
    set_lscheme_constants(scheme, mat, c.dim, lo, std::max(lo, hi));
  }
  const double setup = ms_since(t0);

  Trajectory tr = time_stepper(disc, mat, scheme, o);
  for (int k = 1; k <= c.n_steps; ++k) {
    if (k <= static_cast<int>(tr.steps.size())) {
      const StepRecord& st = tr.steps[k - 1];
      out.rows.push_back(step_row(p, k, st.result.report, cert, st.reference.has_value(), st.wall_ms + setup / c.n_steps));
    } else {
      CsvRow r = base_row(p);
      r.step = std::to_string(k);
      r.outer_iters = "-1";
      r.inner_iters = "0";
      r.final_energy = r.empirical_rate = r.aposteriori_max_ratio = std::numeric_limits<double>::quiet_NaN();
      r.theoretical_rate = cert.rate;
      r.wall_ms = 0;
      r.outcome = "not_run";
      out.rows.push_back(r);
    }
  }
  out.failed = !tr.ok;
  out.final_state = tr.final_state;
  out.rows.push_back(summary_row(p, out.rows, cert));
  return out;
}

std::shared_ptr<const Discretization> discretization_of(const RunConfig& c) {
  if (c.case_kind == CaseKind::toy_am) return nullptr;
  return make_discretization(tag_footing_boundary(unit_box_mesh(c.dim, c.mesh_n), c.footing));
}

std::vector<PointResult> run_points(const RunConfig& cfg, int jobs) {
  cfg.validate();
  const std::vector<Point> pts = expand(cfg);
  const auto disc = discretization_of(cfg);
  std::vector<PointResult> res(pts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < pts.size();) {
      try {
        res[i] = run_point(pts[i], disc);
      } catch (const std::exception& e) {
        PointResult r;
        r.failed = true;
        for (int k = 1; k <= pts[i].cfg.n_steps + 1; ++k) {
          CsvRow row = base_row(pts[i]);
          row.step = k <= pts[i].cfg.n_steps ? std::to_string(k) : "avg";
          row.outer_iters = "-1";
          row.inner_iters = "0";
          row.final_energy = row.empirical_rate = row.theoretical_rate = row.aposteriori_max_ratio =
              std::numeric_limits<double>::quiet_NaN();
          row.outcome = "error";
          r.rows.push_back(row);
        }
        std::fprintf(stderr, "sweep point %s=%s failed: %s\n", pts[i].param_name.c_str(), pts[i].param_value.c_str(),
                     e.what());
        res[i] = std::move(r);
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(pts.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return res;
}

void write_point_vtk(const std::string& path, const RunConfig& c, const PointResult& r) {
  if (!r.disc) return;
  const Discretization& d = *r.disc;
  DiscreteEnergy E = build_energy(r.disc, material_of(c), StepData::zero(d, material_of(c), c.dt));
  std::vector<VtkField> pts{{"displacement", c.dim, full_displacement(E, r.final_state.x)}};
  std::vector<VtkField> cells;
  const char* names[2] = {"pressure", "temperature"};
  for (Index k = 0; k < r.final_state.p.cols() && k < 2; ++k) cells.push_back({names[k], 1, r.final_state.p.col(k)});
  write_vtk(path, *d.mesh, pts, cells);
}

}  // namespace

std::vector<CsvRow> run_rows(const RunConfig& cfg, int jobs) {
  std::vector<CsvRow> rows;
  for (PointResult& r : run_points(cfg, jobs)) rows.insert(rows.end(), r.rows.begin(), r.rows.end());
  return rows;
}

RunResult run_case(const RunConfig& cfg, const RunOptions& opt) {
  namespace fs = std::filesystem;
  fs::create_directories(opt.out_dir);
  const std::vector<PointResult> res = run_points(cfg, opt.jobs);
  const std::vector<Point> pts = expand(cfg);
  RunResult out;
  for (std::size_t i = 0; i < res.size(); ++i) {
    out.rows.insert(out.rows.end(), res[i].rows.begin(), res[i].rows.end());
    if (res[i].failed) ++out.failed_points;
    if ((opt.vtk || cfg.vtk) && res[i].disc) {
      std::string name = to_string(cfg.case_kind) + "_" + pts[i].param_name + "_" + pts[i].param_value + "_" +
                         to_string(pts[i].cfg.scheme.line_search) + ".vtk";
      write_point_vtk((fs::path(opt.out_dir) / name).string(), pts[i].cfg, res[i]);
    }
  }
  out.csv_path = (fs::path(opt.out_dir) / cfg.csv).string();
  std::ofstream f(out.csv_path);
  if (!f) throw std::runtime_error("cannot write '" + out.csv_path + "'");
  f << to_csv(out.rows);
  return out;
}

std::vector<std::pair<std::string, RateCertificate>> certificates(const RunConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<std::string, RateCertificate>> out;
  for (const Point& p : expand(cfg)) {
    if (p.cfg.both_line_search && p.cfg.scheme.line_search == LineSearch::quadratic) continue;
    out.emplace_back(cfg.sweep.name.empty() ? std::string("single point") : p.param_name + "=" + p.param_value,
                     certificate_of(p.cfg));
  }
  return out;
}

}  // namespace poro
