#include "poroflow/solvers.hpp"

#include "detail.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace poro {

std::string to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::monolithic: return "monolithic";
    case SchemeKind::alternating: return "alternating";
    case SchemeKind::undrained: return "undrained";
    case SchemeKind::fixed_stress: return "fixed_stress";
    case SchemeKind::visco_undrained: return "visco_undrained";
    case SchemeKind::visco_fixed_stress: return "visco_fixed_stress";
    case SchemeKind::thermo_undrained_adiabatic: return "thermo_undrained_adiabatic";
    case SchemeKind::thermo_extended_fixed_stress: return "thermo_extended_fixed_stress";
    case SchemeKind::thermo_three_block: return "thermo_three_block";
    case SchemeKind::nl_fixed_stress_newton: return "nl_fixed_stress_newton";
    case SchemeKind::nl_fixed_stress_lscheme: return "nl_fixed_stress_lscheme";
  }
  return "?";
}

SchemeKind parse_scheme_kind(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(SchemeKind::nl_fixed_stress_lscheme); ++i)
    if (to_string(static_cast<SchemeKind>(i)) == s) return static_cast<SchemeKind>(i);
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

bool is_fixed_stress(SchemeKind k) {
  return k == SchemeKind::fixed_stress || k == SchemeKind::visco_fixed_stress ||
         k == SchemeKind::thermo_extended_fixed_stress || k == SchemeKind::thermo_three_block ||
         k == SchemeKind::nl_fixed_stress_newton || k == SchemeKind::nl_fixed_stress_lscheme;
}

std::string to_string(LineSearch l) { return l == LineSearch::off ? "off" : "quadratic"; }

std::string to_string(InnerPolicy p) {
  switch (p) {
    case InnerPolicy::N_max: return "N_max";
    case InnerPolicy::N_1: return "N_1";
    case InnerPolicy::L_ex: return "L_ex";
    case InnerPolicy::L_opt: return "L_opt";
  }
  return "?";
}

InnerPolicy parse_inner_policy(const std::string& s) {
  for (InnerPolicy p : {InnerPolicy::N_max, InnerPolicy::N_1, InnerPolicy::L_ex, InnerPolicy::L_opt})
    if (to_string(p) == s) return p;
  throw std::invalid_argument("unknown inner policy '" + s + "'");
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::converged: return "converged";
    case Outcome::max_iter: return "max_iter";
    case Outcome::diverged: return "diverged";
  }
  return "?";
}

void SplitScheme::validate() const {
  if (!(gamma >= 0)) throw std::invalid_argument("scheme.gamma must be nonnegative");
  if (!(tol_rel > 0)) throw std::invalid_argument("scheme.tol must be positive");
  if (max_outer < 1) throw std::invalid_argument("scheme.max_outer must be at least 1");
  if (inner_max < 1) throw std::invalid_argument("scheme.inner must be at least 1");
  if (kind == SchemeKind::nl_fixed_stress_lscheme && (L_b < 0 || L_FS < 0 || L_mu < 0 || L_vol < 0))
    throw std::invalid_argument("L-scheme constants must be nonnegative");
}

double IterationReport::max_energy_increase() const {
  double m = 0;
  for (const auto& r : records) m = std::max(m, -r.decrease);
  return m;
}

Solution zero_solution(const DiscreteEnergy& E) {
  Solution z;
  z.x = VectorXd::Zero(E.size());
  if (E.family != Family::toy) z.p = E.pressure(z.x);
  return z;
}

Solution primal_solution(const DiscreteEnergy& E, VectorXd x) {
  Solution z;
  z.x = std::move(x);
  if (E.family != Family::toy) z.p = E.pressure(z.x);
  return z;
}

namespace detail {

VectorXd flatten(const MatrixXd& p) { return Eigen::Map<const VectorXd>(p.data(), p.size()); }

MatrixXd unflatten(const VectorXd& v, Index nc, Index ncomp) { return Eigen::Map<const MatrixXd>(v.data(), nc, ncomp); }

Solution combine(const Solution& a, double wa, const Solution& b, double wb) {
  Solution z;
  z.x = wa * a.x + wb * b.x;
  if (a.p.size() > 0) z.p = wa * a.p + wb * b.p;
  return z;
}

Monitor::Monitor(const DiscreteEnergy& e, const SplitScheme& s, SchemeKind kind, View v, const Solution* o)
    : E(e), scheme(s), view(v), oracle(o) {
  report.kind = kind;
  report.dual = v != View::primal;
}

double Monitor::energy(const Solution& z) const {
  switch (view) {
    case View::primal: return E.eval(z.x);
    case View::dual: return dual_energy(E, z.x, z.p);
    case View::dual_nl: return nonlinear_dual_energy(E, z.x, z.p);
  }
  return 0;
}

double Monitor::difference(const Solution& a, const Solution& b) const {
  switch (view) {
    case View::primal: return E.difference(a.x, b.x);
    case View::dual: return dual_difference(E, a.x, a.p, b.x, b.p);
    case View::dual_nl: return nonlinear_dual_energy(E, a.x, a.p) - nonlinear_dual_energy(E, b.x, b.p);
  }
  return 0;
}

double Monitor::gap(const Solution& z) const {
  if (!oracle) return std::numeric_limits<double>::quiet_NaN();
  switch (view) {
    case View::primal:
      if (E.is_quadratic) {
        const VectorXd d = z.x - oracle->x;
        return 0.5 * d.dot(E.H * d);
      }
      return E.difference(z.x, oracle->x);
    case View::dual: return dual_gap(E, z.x, z.p, oracle->x, oracle->p);
    case View::dual_nl: return difference(z, *oracle);
  }
  return 0;
}

void Monitor::start(const Solution& z0) {
  report.initial_energy = prev_energy_ = energy(z0);
  report.initial_gap = gap(z0);
  report.block_names = l2_norms(E, z0.x, z0.p).names;
}

bool Monitor::record(const Solution& prev, const Solution& cur, double alpha, int inner, double ru, double rp) {
  IterationRecord r;
  r.energy = energy(cur);
  r.decrease = difference(prev, cur);
  r.gap = gap(cur);
  r.alpha = alpha;
  r.inner = inner;
  r.residual_u = ru;
  r.residual_p = rp;
  Solution d = combine(cur, 1.0, prev, -1.0);
  BlockNorms dn = l2_norms(E, d.x, d.p), cn = l2_norms(E, cur.x, cur.p);
  bool finite = std::isfinite(r.energy);
  r.increment = 0;
  for (size_t i = 0; i < dn.values.size(); ++i) {
    const double inc = cn.values[i] > 0 ? dn.values[i] / cn.values[i] : dn.values[i];
    r.block_increments.push_back(inc);
    r.increment = std::max(r.increment, inc);
    finite = finite && std::isfinite(inc);
  }
  report.inner_total += inner;
  report.records.push_back(r);

  const double scale = std::max({std::abs(r.energy), std::abs(report.initial_energy), 1e-300});
  if (r.decrease < -roundoff_floor * scale)
    ++increases_;
  else
    increases_ = 0;

  bool converged = finite && half_increment_ <= scheme.tol_rel;
  half_increment_ = 0;
  for (double inc : r.block_increments) converged = converged && inc <= scheme.tol_rel;
  if (converged) {
    report.outcome = Outcome::converged;
    return done_ = true;
  }
  // absolute block increments against their running minimum
  bool blowup = false;
  if (min_abs_.empty()) min_abs_.assign(dn.values.size(), std::numeric_limits<double>::infinity());
  for (size_t i = 0; i < dn.values.size(); ++i) {
    if (report.records.size() > 10 && min_abs_[i] > 0 && dn.values[i] > 1e3 * min_abs_[i]) blowup = true;
    min_abs_[i] = std::min(min_abs_[i], dn.values[i]);
  }
  const bool nl = view == View::dual_nl;
  if (!finite || blowup || (nl && increases_ >= 5)) {
    report.outcome = Outcome::diverged;
    report.message = !finite ? "non-finite iterate" : (nl && increases_ >= 5) ? "energy increased over 5 iterations"
                                                                               : "increment grew 1e3 times above its minimum";
    return done_ = true;
  }
  return false;
}

double Monitor::relax(const Solution& prev, Solution& half) {
  // the unrelaxed update also has to be small before the run counts as converged
  {
    Solution d = combine(half, 1.0, prev, -1.0);
    BlockNorms dn = l2_norms(E, d.x, d.p), hn = l2_norms(E, half.x, half.p);
    half_increment_ = 0;
    for (size_t i = 0; i < dn.values.size(); ++i)
      half_increment_ = std::max(half_increment_, hn.values[i] > 0 ? dn.values[i] / hn.values[i] : dn.values[i]);
  }
  Solution ext = combine(half, 2.0, prev, -1.0);
  // off the equilibrium manifold the nonlinear dual energy is no merit function; use the primal one
  auto diff = [&](const Solution& a, const Solution& b) {
    return view == View::dual_nl ? E.difference(a.x, b.x) : difference(a, b);
  };
  const double dm = diff(prev, half), dp = diff(ext, half);
  // energy differences at roundoff level carry no curvature information
  const double scale = std::abs(view == View::dual_nl ? E.eval(half.x) : energy(half));
  if (0.5 * (dm + dp) <= roundoff_floor * scale) return 0.0;
  const double alpha = line_search_alpha(dm, 0.0, dp);
  if (alpha == 0.0) return 0.0;
  Solution next = combine(half, 1.0 + alpha, prev, -alpha);
  if (!E.is_quadratic && diff(next, half) > 0) return 0.0;
  half = std::move(next);
  return alpha;
}

IterationReport Monitor::finish() {
  if (!done_) {
    report.outcome = Outcome::max_iter;
    if (report.message.empty()) report.message = "maximum outer iterations reached";
  }
  return report;
}

}  // namespace detail

double line_search_alpha(double e_minus, double e_zero, double e_plus) {
  const double a = 0.5 * (e_plus + e_minus) - e_zero;
  const double b = 0.5 * (e_plus - e_minus);
  if (!(a > 0) || !std::isfinite(a) || !std::isfinite(b)) return 0.0;
  return -b / (2 * a);
}

Relaxed line_search_relax(const DiscreteEnergy& E, const VectorXd& x_prev, const VectorXd& x_half) {
  const VectorXd dx = x_half - x_prev;
  Relaxed r;
  r.x = x_half;
  if (dx.squaredNorm() == 0) return r;
  const VectorXd x_ext = x_half + dx;
  r.alpha = line_search_alpha(E.difference(x_prev, x_half), 0.0, E.difference(x_ext, x_half));
  if (r.alpha == 0.0) return r;
  VectorXd next = x_half + r.alpha * dx;
  if (!E.is_quadratic && E.difference(next, x_half) > 0) {
    r.alpha = 0;
    return r;
  }
  r.x = std::move(next);
  return r;
}

SolveResult solve_monolithic(const DiscreteEnergy& E, const Solution& x0, double tol) {
  SolveResult res;
  res.report.kind = SchemeKind::monolithic;
  SplitScheme dummy;
  detail::Monitor mon(E, dummy, SchemeKind::monolithic, detail::View::primal, nullptr);
  mon.start(x0);
  if (E.is_quadratic) {
    SpdSolver solver(E.H);
    VectorXd x = solver.solve(E.b);
    Solution z = primal_solution(E, std::move(x));
    mon.record(x0, z, 0.0, 1);
    res.state = std::move(z);
    res.report = mon.report;
    res.report.outcome = Outcome::converged;
    return res;
  }
  VectorXd x = x0.x;
  const double g0 = std::max(E.grad(x).norm(), E.grad(VectorXd::Zero(E.size())).norm());
  int it = 0;
  for (; it < 100; ++it) {
    VectorXd g = E.grad(x);
    if (g.norm() <= tol * std::max(g0, 1e-300)) break;
    SpdSolver solver(E.hessian(x));
    VectorXd dx = -solver.solve(g);
    const double slope = g.dot(dx);
    double t = 1.0;
    while (t > 1e-10 && E.difference(x + t * dx, x) > 1e-4 * t * slope) t *= 0.5;
    Solution prev = primal_solution(E, x);
    x += t * dx;
    mon.record(prev, primal_solution(E, x), t, 1);
  }
  res.state = primal_solution(E, x);
  res.report = mon.report;
  res.report.outcome = E.grad(x).norm() <= tol * std::max(g0, 1e-300) ? Outcome::converged : Outcome::max_iter;
  return res;
}

SolveResult alternating_minimization(const DiscreteEnergy& E, const std::vector<std::vector<std::string>>& partition,
                                     const SplitScheme& scheme, const Solution& x0, const Solution* oracle) {
  if (!E.is_quadratic) throw std::invalid_argument("alternating_minimization: quadratic energy required");
  std::vector<std::vector<Index>> idx;
  std::vector<char> covered(E.size(), 0);
  for (const auto& group : partition) {
    std::vector<Index> g;
    for (const auto& name : group) {
      auto it = std::find_if(E.blocks.begin(), E.blocks.end(), [&](const BlockRange& b) { return b.name == name; });
      if (it == E.blocks.end()) throw std::invalid_argument("alternating_minimization: unknown block '" + name + "'");
      for (Index i = it->offset; i < it->offset + it->size; ++i) {
        g.push_back(i);
        covered[i] = 1;
      }
    }
    std::sort(g.begin(), g.end());
    idx.push_back(std::move(g));
  }
  if (std::find(covered.begin(), covered.end(), 0) != covered.end())
    throw std::invalid_argument("alternating_minimization: partition does not cover the energy blocks");

  std::vector<SpdSolver> solvers;
  for (const auto& g : idx) solvers.emplace_back(submatrix(E.H, g, g));

  detail::Monitor mon(E, scheme, scheme.kind, detail::View::primal, oracle);
  Solution z = primal_solution(E, x0.x);
  mon.start(z);
  for (int it = 0; it < scheme.max_outer; ++it) {
    VectorXd x = z.x;
    for (size_t k = 0; k < idx.size(); ++k) {
      VectorXd r = E.b - E.H * x;
      VectorXd dg = solvers[k].solve(gather(r, idx[k]));
      for (size_t i = 0; i < idx[k].size(); ++i) x[idx[k][i]] += dg[i];
    }
    Solution next = primal_solution(E, std::move(x));
    double alpha = 0;
    if (scheme.line_search == LineSearch::quadratic) alpha = mon.relax(z, next);
    const bool stop = mon.record(z, next, alpha, 0);
    z = std::move(next);
    if (stop) break;
  }
  return {z, mon.finish()};
}

SolveResult visco_split(const DiscreteEnergy& E, const SplitScheme& scheme, const Solution& x0,
                        const Solution* oracle) {
  if (E.family != Family::visco) throw std::invalid_argument("visco_split: visco energy required");
  if (is_fixed_stress(scheme.kind)) return fixed_stress_split(E, scheme, x0, {{0}}, oracle);
  return undrained_split(E, scheme, x0, oracle);
}

SolveResult thermo_split(const DiscreteEnergy& E, const SplitScheme& scheme, const Solution& x0,
                         const Solution* oracle) {
  if (E.family != Family::thermo) throw std::invalid_argument("thermo_split: thermo energy required");
  switch (scheme.kind) {
    case SchemeKind::thermo_undrained_adiabatic: return undrained_split(E, scheme, x0, oracle);
    case SchemeKind::thermo_extended_fixed_stress: return fixed_stress_split(E, scheme, x0, {{0, 1}}, oracle);
    case SchemeKind::thermo_three_block: return fixed_stress_split(E, scheme, x0, {{0}, {1}}, oracle);
    default: break;
  }
  throw std::invalid_argument("thermo_split: scheme " + to_string(scheme.kind) + " is not a thermo scheme");
}

SolveResult solve_step(const DiscreteEnergy& E, const SplitScheme& scheme, const Solution& x0,
                       const Solution* oracle) {
  scheme.validate();
  auto need = [&](bool ok) {
    if (!ok)
      throw std::invalid_argument("scheme " + to_string(scheme.kind) + " does not apply to the " +
                                  to_string(E.family) + " family");
  };
  switch (scheme.kind) {
    case SchemeKind::monolithic: return solve_monolithic(E, x0);
    case SchemeKind::alternating: {
      std::vector<std::vector<std::string>> part;
      for (const auto& b : E.blocks) part.push_back({b.name});
      return alternating_minimization(E, part, scheme, x0, oracle);
    }
    case SchemeKind::undrained: need(E.family == Family::poro); return undrained_split(E, scheme, x0, oracle);
    case SchemeKind::fixed_stress:
      need(E.family == Family::poro);
      return fixed_stress_split(E, scheme, x0, {{0}}, oracle);
    case SchemeKind::visco_undrained:
    case SchemeKind::visco_fixed_stress: need(E.family == Family::visco); return visco_split(E, scheme, x0, oracle);
    case SchemeKind::thermo_undrained_adiabatic:
    case SchemeKind::thermo_extended_fixed_stress:
    case SchemeKind::thermo_three_block: need(E.family == Family::thermo); return thermo_split(E, scheme, x0, oracle);
    case SchemeKind::nl_fixed_stress_newton:
    case SchemeKind::nl_fixed_stress_lscheme:
      need(E.family == Family::nonlinear);
      return nonlinear_fixed_stress(E, scheme, x0, oracle);
  }
  throw std::invalid_argument("solve_step: unknown scheme");
}

std::pair<double, double> divergence_range(const Trajectory& traj, const Discretization& d) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  const VectorXd tr = trace_vector(d.dim);
  for (const StepRecord& st : traj.steps) {
    const Solution& z = st.reference ? *st.reference : st.result.state;
    const VectorXd eps = d.strain * z.x.head(d.nu());
    for (Index e = 0; e < d.nc(); ++e) {
      const double v = std::abs(tr.dot(eps.segment(e * d.ns, d.ns)));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (traj.steps.empty()) lo = 0;
  return {lo, hi};
}

void set_lscheme_constants(SplitScheme& s, const MaterialSpec& m, int dim, double div_min, double div_max) {
  if (!(div_min >= 0) || !(div_max >= div_min) || !std::isfinite(div_max))
    throw std::invalid_argument("set_lscheme_constants: 0 <= div_min <= div_max < inf required");
  if (s.policy == InnerPolicy::L_opt) div_min = div_max = div_max / 10;
  const Lame l = m.poro.lame(dim);
  s.L_b = 1 / m.poro.M;
  s.L_FS = m.poro.alpha * m.poro.alpha / (2 * l.mu / dim + 2 * l.lambda * div_min);
  s.L_mu = l.mu;
  s.L_vol = 2 * l.lambda * div_max;
}

Trajectory time_stepper(std::shared_ptr<const Discretization> disc, const MaterialSpec& mat, const SplitScheme& scheme,
                        const TimeStepOptions& opt) {
  if (opt.n_steps < 0 || !(opt.dt > 0)) throw std::invalid_argument("time_stepper: invalid step data");
  Trajectory traj;
  StepData sd = StepData::zero(*disc, mat, opt.dt);
  DiscreteEnergy E0 = build_energy(disc, mat, sd);
  Solution z = zero_solution(E0);
  for (int n = 1; n <= opt.n_steps; ++n) {
    sd.t = n * opt.dt;
    sd.traction = opt.load_rate * sd.t;
    DiscreteEnergy E = build_energy(disc, mat, sd);
    StepRecord rec;
    rec.step = n;
    rec.t = sd.t;
    if (opt.reference) rec.reference = solve_monolithic(E, z).state;
    Solution x0 = is_fixed_stress(scheme.kind) ? z : primal_solution(E, z.x);
    const auto t0 = std::chrono::steady_clock::now();
    rec.result = solve_step(E, scheme, x0, rec.reference ? &*rec.reference : nullptr);
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    const bool failed = rec.result.report.outcome != Outcome::converged;
    z = rec.result.state;
    rec.contents = E.contents(z.x);
    sd.content_prev = rec.contents;
    if (mat.family == Family::visco)
      for (Index e = 0; e < disc->nc(); ++e) sd.eps_v_prev.col(e) = z.x.segment(disc->nu() + e * disc->ns, disc->ns);
    traj.steps.push_back(std::move(rec));
    if (failed) {
      traj.ok = false;
      if (opt.stop_on_failure) break;
    }
  }
  traj.final_state = z;
  return traj;
}

}  // namespace poro
