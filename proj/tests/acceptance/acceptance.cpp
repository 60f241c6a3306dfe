#include "poroflow/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

using namespace poro;

namespace {

struct Outcome_ {
  bool pass = true;
  std::ostringstream detail;
};

std::string fmt(double v, const char* f = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::shared_ptr<const Discretization> footing16() {
  static auto d = make_discretization(tag_footing_boundary(unit_box_mesh(2, 16)));
  return d;
}

SplitScheme scheme(SchemeKind k, bool ls, double gamma = 1.0) {
  SplitScheme s;
  s.kind = k;
  s.gamma = gamma;
  s.line_search = ls ? LineSearch::quadratic : LineSearch::off;
  return s;
}

Trajectory run(const MaterialSpec& m, const SplitScheme& s, bool reference) {
  TimeStepOptions o;
  o.reference = reference;
  o.stop_on_failure = false;
  return time_stepper(footing16(), m, s, o);
}

double avg_outer(const Trajectory& t) {
  double n = 0;
  for (const StepRecord& st : t.steps) n += st.result.report.iterations();
  return n / static_cast<double>(t.steps.size());
}

bool converged(const Trajectory& t) {
  for (const StepRecord& st : t.steps)
    if (st.result.report.outcome != Outcome::converged) return false;
  return !t.steps.empty();
}

// largest per-step empirical error contraction, the square root of the gap factor
double contraction(const Trajectory& t) {
  double m = 0;
  for (const StepRecord& st : t.steps) {
    const double g = empirical_rate(st.result.report);
    if (std::isnan(g)) return g;
    m = std::max(m, std::sqrt(g));
  }
  return m;
}

MaterialSpec poro_with_E(double E) {
  MaterialSpec m;
  m.poro.E = E;
  return m;
}

const double E_values[] = {1e9, 1e10, 1e11, 1e12};

// runs shared by criteria 1 to 3
struct PoroRuns {
  Trajectory t[4][2][2];  // E, scheme (undrained, fixed stress), line search
  RateCertificate c[4][2];
};

const PoroRuns& poro_runs() {
  static const PoroRuns r = [] {
    PoroRuns p;
    const SchemeKind kinds[2] = {SchemeKind::undrained, SchemeKind::fixed_stress};
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 2; ++k) {
        const MaterialSpec m = poro_with_E(E_values[i]);
        p.c[i][k] = theoretical_rate(kinds[k], m, 2, 0.1);
        for (int ls = 0; ls < 2; ++ls) p.t[i][k][ls] = run(m, scheme(kinds[k], ls), true);
      }
    return p;
  }();
  return r;
}

void criterion1(Outcome_& o) {
  const PoroRuns& r = poro_runs();
  double worst = -1;
  std::string where;
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 2; ++k)
      for (int ls = 0; ls < 2; ++ls) {
        const double emp = contraction(r.t[i][k][ls]);
        const double excess = emp - r.c[i][k].rate;
        o.pass = o.pass && converged(r.t[i][k][ls]) && !std::isnan(emp) && excess <= 1e-3;
        if (std::isnan(emp) || excess > worst) {
          worst = excess;
          where = "E=" + fmt(E_values[i]) + " " + (k ? "fixed_stress" : "undrained") + (ls ? "+ls" : "") + " emp " +
                  fmt(emp) + " vs rate " + fmt(r.c[i][k].rate);
        }
      }
  o.detail << "max(empirical - theoretical) " << fmt(worst) << " at " << where;
}

void criterion2(Outcome_& o) {
  const PoroRuns& r = poro_runs();
  double worst = 0;
  int checked = 0, skipped = 0;
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 2; ++k)
      for (int ls = 0; ls < 2; ++ls)
        for (const StepRecord& st : r.t[i][k][ls].steps) {
          if (st.result.report.outcome != Outcome::converged) continue;
          const BoundCheck b = check_a_posteriori(r.c[i][k], st.result.report);
          worst = std::max(worst, b.max_ratio);
          checked += b.checked;
          skipped += b.skipped;
        }
  o.pass = checked > 0 && worst <= 1.05;
  o.detail << "max error / bound " << fmt(worst) << " over " << checked << " iterations (" << skipped
           << " at roundoff level skipped)";
}

void criterion3(Outcome_& o) {
  const PoroRuns& r = poro_runs();
  std::string plain, relaxed;
  for (int i = 0; i < 4; ++i) {
    const double a = avg_outer(r.t[i][1][0]), b = avg_outer(r.t[i][1][1]);
    plain += fmt(a) + (i < 3 ? " " : "");
    relaxed += fmt(b) + (i < 3 ? " " : "");
    if (i > 0 && !(a < avg_outer(r.t[i - 1][1][0]))) o.pass = false;
    for (int k = 0; k < 2; ++k)
      for (std::size_t s = 0; s < r.t[i][k][0].steps.size(); ++s)
        if (r.t[i][k][1].steps[s].result.report.iterations() > r.t[i][k][0].steps[s].result.report.iterations())
          o.pass = false;
  }
  o.detail << "fixed-stress avg outer over E: plain [" << plain << "], relaxed [" << relaxed << "]";
  const MaterialSpec m = poro_with_E(1e10);
  o.detail << "; gamma window relaxed-plain:";
  for (double g : {0.6, 0.7, 0.8}) {
    const double d = avg_outer(run(m, scheme(SchemeKind::fixed_stress, true, g), false)) -
                     avg_outer(run(m, scheme(SchemeKind::fixed_stress, false, g), false));
    o.detail << " " << fmt(g, "%.1f") << ":" << fmt(d);
    if (std::abs(d) > 1) o.pass = false;
  }
}

void criterion4(Outcome_& o) {
  const MaterialSpec m = poro_with_E(1e10);
  bool relaxed_all = true, plain_fails = false;
  std::string fails;
  for (int i = 0; i <= 10; ++i) {
    const double g = i / 10.0;
    if (!converged(run(m, scheme(SchemeKind::fixed_stress, true, g), false))) {
      relaxed_all = false;
      fails += " " + fmt(g, "%.1f");
    }
    if (g < 0.5 && !converged(run(m, scheme(SchemeKind::fixed_stress, false, g), false))) plain_fails = true;
  }
  o.pass = relaxed_all && plain_fails;
  o.detail << "relaxed converges for all gamma: " << (relaxed_all ? "yes" : "no, fails at" + fails)
           << "; plain fails for some gamma < 0.5: " << (plain_fails ? "yes" : "no");
}

void criterion5(Outcome_& o) {
  double worst = -1;
  std::string counts;
  for (double E : E_values) {
    MaterialSpec m = poro_with_E(E);
    m.family = Family::visco;
    const RateCertificate c = theoretical_rate(SchemeKind::visco_fixed_stress, m, 2, 0.1);
    const Trajectory plain = run(m, scheme(SchemeKind::visco_fixed_stress, false), true);
    const Trajectory relaxed = run(m, scheme(SchemeKind::visco_fixed_stress, true), true);
    for (const Trajectory* t : {&plain, &relaxed}) {
      const double emp = contraction(*t);
      worst = std::max(worst, emp - c.rate);
      o.pass = o.pass && converged(*t) && !std::isnan(emp) && emp <= c.rate + 1e-3;
    }
    const double a = avg_outer(plain), b = avg_outer(relaxed);
    o.pass = o.pass && b <= a;
    counts += " " + fmt(a) + "/" + fmt(b);
  }
  o.detail << "max(empirical - theoretical) " << fmt(worst) << "; avg outer plain/relaxed over E:" << counts;
}

void criterion6(Outcome_& o) {
  MaterialSpec m;
  m.family = Family::thermo;
  const RateCertificate ext = theoretical_rate(SchemeKind::thermo_extended_fixed_stress, m, 2, 0.1);
  const RateCertificate ua = theoretical_rate(SchemeKind::thermo_undrained_adiabatic, m, 2, 0.1);
  double emp = 0;
  for (bool ls : {false, true}) {
    const Trajectory t = run(m, scheme(SchemeKind::thermo_extended_fixed_stress, ls), true);
    emp = std::max(emp, contraction(t));
    o.pass = o.pass && converged(t);
  }
  const bool bound_ok = emp <= ext.rate + 1e-3, order_ok = ext.rate <= ua.rate;
  double rise = 0, incr = 0;
  bool three_ok = true;
  for (bool ls : {false, true}) {
    const Trajectory t = run(m, scheme(SchemeKind::thermo_three_block, ls), true);
    three_ok = three_ok && converged(t);
    for (const StepRecord& st : t.steps) {
      const IterationReport& r = st.result.report;
      rise = std::max(rise, r.max_energy_increase() / std::abs(r.final_energy()));
      incr = std::max(incr, (st.result.state.x - st.reference->x).norm() / st.reference->x.norm());
    }
  }
  three_ok = three_ok && rise <= 10 * roundoff_floor && incr <= 1e-6;
  o.pass = o.pass && bound_ok && order_ok && three_ok;
  o.detail << "extended empirical " << fmt(emp) << " vs bound " << fmt(ext.rate) << (bound_ok ? " ok" : " VIOLATED")
           << "; extended rate " << fmt(ext.rate) << " <= adiabatic " << fmt(ua.rate) << (order_ok ? " ok" : " VIOLATED")
           << "; three-block max relative rise " << fmt(rise) << ", distance to monolithic " << fmt(incr);
}

void criterion7(Outcome_& o) {
  MaterialSpec m;
  m.family = Family::nonlinear;
  m.poro.nu = 0.2;
  const Lame l = m.poro.lame(2);
  m.law = p_laplacian_law(2, l.mu, l.lambda);
  m.b.M = m.poro.M;
  const Trajectory base = run(m, scheme(SchemeKind::nl_fixed_stress_newton, false), false);
  const auto [lo, hi] = divergence_range(base, *footing16());

  auto policy_run = [&](InnerPolicy p, bool ls, bool inner_ls, int max_outer) {
    SplitScheme s;
    s.policy = p;
    s.max_outer = max_outer;
    s.line_search = ls ? LineSearch::quadratic : LineSearch::off;
    s.inner_line_search = inner_ls;
    const bool lsch = p == InnerPolicy::L_ex || p == InnerPolicy::L_opt;
    s.kind = lsch ? SchemeKind::nl_fixed_stress_lscheme : SchemeKind::nl_fixed_stress_newton;
    if (lsch || p == InnerPolicy::N_1) s.inner_max = 1;
    if (lsch) set_lscheme_constants(s, m, 2, lo, hi);
    return run(m, s, false);
  };

  const Trajectory L1 = policy_run(InnerPolicy::L_ex, false, false, 200);
  const bool l_ok = converged(L1);
  const double nmax = avg_outer(base), l1 = avg_outer(L1);
  const bool newton_ok = converged(base) && nmax < l1;

  double least = 1e300, most = 0;
  std::string full;
  bool full_ok = true;
  for (InnerPolicy p : {InnerPolicy::N_max, InnerPolicy::N_1, InnerPolicy::L_ex, InnerPolicy::L_opt}) {
    const Trajectory t = policy_run(p, true, true, 2000);
    full_ok = full_ok && converged(t);
    const double a = avg_outer(t);
    least = std::min(least, a);
    most = std::max(most, a);
    full += " " + to_string(p) + ":" + fmt(a);
  }
  full_ok = full_ok && most - least <= 1;
  o.pass = l_ok && newton_ok && full_ok;
  o.detail << "L_1 converged " << (l_ok ? "yes" : "no") << " (avg " << fmt(l1) << "); N_max avg " << fmt(nmax)
           << "; fully relaxed avg outer" << full;
}

void criterion8(Outcome_& o) {
  std::ostringstream log;
  const int failed = selftest(log);
  o.pass = failed == 0;
  std::string last, line;
  std::istringstream in(log.str());
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  o.detail << last;
  if (failed) {
    std::istringstream again(log.str());
    while (std::getline(again, line))
      if (line.rfind("FAIL", 0) == 0) o.detail << "; " << line;
  }
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<void(Outcome_&)>> criteria[] = {
      {"rate bounds of the undrained and fixed-stress splits", criterion1},
      {"a posteriori error bound", criterion2},
      {"iteration trends over E and line search", criterion3},
      {"relaxed fixed stress is robust in gamma", criterion4},
      {"visco certificates and relaxation", criterion5},
      {"thermo certificates and three-block convergence", criterion6},
      {"nonlinear fixed stress policies", criterion7},
      {"property suite", criterion8},
  };
  int failed = 0, k = 0;
  for (const auto& [name, fn] : criteria) {
    ++k;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome_ o;
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += o.pass ? 0 : 1;
    std::cout << "criterion " << k << ": " << (o.pass ? "PASS" : "FAIL") << " | " << name << " | " << o.detail.str()
              << " | " << fmt(s, "%.2f") << " s" << std::endl;
  }
  std::cout << (8 - failed) << "/8 criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
