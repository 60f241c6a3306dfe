#include "poroflow/analysis.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace poro {

namespace {

double factor_of(double r) {
  if (!(r < 1)) return std::numeric_limits<double>::infinity();
  return r / std::sqrt(1 - r * r);
}

RateCertificate finish(RateCertificate c) {
  if (c.available) {
    if (!(c.rate >= 0) || !(c.rate < 1)) throw std::logic_error("rate certificate outside [0, 1)");
    c.a_posteriori_factor = factor_of(c.rate);
  } else {
    c.rate = std::numeric_limits<double>::quiet_NaN();
    c.a_posteriori_factor = std::numeric_limits<double>::quiet_NaN();
  }
  return c;
}

double ratio(double a, double b) { return a == 0.0 ? 0.0 : a / (b + a); }

}  // namespace

RateCertificate theoretical_rate(SchemeKind kind, const MaterialSpec& m, int dim, double dt, const RateOptions& opt) {
  if (!(dt > 0)) throw std::invalid_argument("theoretical_rate: dt must be positive");
  if (opt.C_Omega && !(*opt.C_Omega > 0)) throw std::invalid_argument("theoretical_rate: C_Omega must be positive");
  RateCertificate c;
  c.kind = kind;
  const PoroParams& p = m.poro;
  const Lame l = p.lame(dim);
  const double K = l.K_dr, a2 = p.alpha * p.alpha / K;
  const double poincare = opt.C_Omega ? dt * p.kappa / (*opt.C_Omega * *opt.C_Omega) : 0.0;
  auto need = [&](Family f) {
    if (m.family != f)
      throw std::invalid_argument("theoretical_rate: scheme " + to_string(kind) + " does not apply to the " +
                                  to_string(m.family) + " family");
  };
  c.ingredients = {{"alpha", p.alpha}, {"M", p.M}, {"K_dr", K}, {"dt", dt}, {"kappa_m", p.kappa}};
  switch (kind) {
    case SchemeKind::monolithic:
      c.formula = "0";
      c.rate = 0;
      break;
    case SchemeKind::undrained:
      need(Family::poro);
      c.formula = "(alpha^2/K_dr) / (1/M + alpha^2/K_dr)";
      c.rate = ratio(a2, 1 / p.M);
      break;
    case SchemeKind::fixed_stress:
      need(Family::poro);
      c.formula = opt.C_Omega ? "(alpha^2/K_dr) / (1/M + dt kappa_m/C_Omega^2 + alpha^2/K_dr)"
                              : "(alpha^2/K_dr) / (1/M + alpha^2/K_dr)";
      c.rate = ratio(a2, 1 / p.M + poincare);
      break;
    case SchemeKind::visco_undrained:
    case SchemeKind::visco_fixed_stress: {
      need(Family::visco);
      const ViscoParams& v = m.visco;
      const double Kv = v.lame(dim).K_dr, Kvp = v.K_dr_prime(dim);
      const double A2 = v.alpha_v * v.alpha_v / (Kv + Kvp / dt) + a2;
      c.ingredients.push_back({"alpha_v", v.alpha_v});
      c.ingredients.push_back({"K_dr_v", Kv});
      c.ingredients.push_back({"K_dr_v_prime", Kvp});
      c.ingredients.push_back({"A_K^2", A2});
      const bool fs = kind == SchemeKind::visco_fixed_stress;
      c.formula = fs && opt.C_Omega ? "A_K^2 / (1/M + dt kappa_m/C_Omega^2 + A_K^2)" : "A_K^2 / (1/M + A_K^2)";
      c.rate = ratio(A2, 1 / p.M + (fs ? poincare : 0.0));
      break;
    }
    case SchemeKind::thermo_undrained_adiabatic:
    case SchemeKind::thermo_extended_fixed_stress: {
      need(Family::thermo);
      const ThermoParams& th = m.thermo;
      const Eigen::Vector2d aT(p.alpha, 3 * th.alpha_T * K);
      const double n2 = aT.squaredNorm();
      c.ingredients.push_back({"alpha_T_vec_0", aT[0]});
      c.ingredients.push_back({"alpha_T_vec_1", aT[1]});
      if (kind == SchemeKind::thermo_undrained_adiabatic) {
        const double q = aT.dot(th.MT(p.M) * aT);
        c.ingredients.push_back({"aT' M_T aT", q});
        c.formula = "(|aT|^2/K_dr) / (|aT|^2/(aT' M_T aT) + |aT|^2/K_dr)";
        c.rate = n2 == 0 ? 0.0 : ratio(n2 / K, n2 / q);
      } else {
        Eigen::Matrix2d Q = th.MT_inv(p.M);
        if (opt.C_Omega) {
          const double s = dt / (*opt.C_Omega * *opt.C_Omega);
          Q(0, 0) += s * p.kappa;
          Q(1, 1) += s * th.kappa_F / th.T0;
        }
        const double q = n2 == 0 ? 0.0 : aT.dot(Q * aT) / n2;
        c.ingredients.push_back({"aT' (M_T^-1 + ...) aT / |aT|^2", q});
        c.formula = "(|aT|^2/K_dr) / (aT' (M_T^-1 + dt/C_Omega^2 diag(kappa, kappa_F/T0)) aT / |aT|^2 + |aT|^2/K_dr)";
        c.rate = n2 == 0 ? 0.0 : ratio(n2 / K, q);
      }
      break;
    }
    case SchemeKind::thermo_three_block:
    case SchemeKind::alternating:
    case SchemeKind::nl_fixed_stress_newton:
    case SchemeKind::nl_fixed_stress_lscheme:
      c.available = false;
      c.formula = "none";
      break;
  }
  return finish(c);
}

RateCertificate toy_rate(double rho) {
  if (!(std::abs(rho) < 1)) throw std::invalid_argument("toy_rate: |rho| < 1 required");
  RateCertificate c;
  c.kind = SchemeKind::alternating;
  const double s = 1 - rho * rho;
  c.rate = std::sqrt(abstract_am_certificate({s, s}, {1.0, 1.0}));
  c.formula = "sqrt((1 - sigma_1/L_1)(1 - sigma_2/L_2)), sigma = 1 - rho^2, L = 1";
  c.ingredients = {{"rho", rho}};
  return finish(c);
}

double empirical_rate(const IterationReport& r, std::string* diag) {
  auto fail = [&](const std::string& why) {
    if (diag) *diag = why;
    return std::numeric_limits<double>::quiet_NaN();
  };
  const int n = r.iterations();
  if (n <= 1) return 0.0;
  std::vector<double> gaps{r.initial_gap};
  for (const auto& rec : r.records) gaps.push_back(rec.gap);
  for (double g : gaps)
    if (!std::isfinite(g)) return fail("energy gaps unavailable (no oracle)");
  int last = n;
  for (int i = 1; i <= n; ++i)
    if (gaps[i] <= 0) {
      last = i;
      break;
    }
  if (gaps[last] < 0) return fail("negative energy gap");
  if (gaps[last] == 0) return 0.0;
  const int first = last / 2;
  for (int i = first + 1; i <= last; ++i)
    if (gaps[i] > gaps[i - 1] * (1 + 1e-12)) return fail("energy gaps not monotone");
  if (last == first) return 0.0;
  const double lr = (std::log(gaps[last]) - std::log(gaps[first])) / (last - first);
  return std::exp(lr);
}

double a_posteriori_bound(const RateCertificate& cert, double E_prev, double E_curr) {
  if (E_prev < E_curr) throw std::invalid_argument("a_posteriori_bound: energy increased");
  if (E_prev == E_curr) return 0.0;
  const double f = factor_of(cert.rate);
  if (std::isinf(f)) return f;
  return f * std::sqrt(E_prev - E_curr);
}

double abstract_am_certificate(const std::vector<double>& sigma, const std::vector<double>& L) {
  if (sigma.size() != L.size() || sigma.empty())
    throw std::invalid_argument("abstract_am_certificate: one (sigma, L) pair per block required");
  double r = 1;
  for (size_t k = 0; k < sigma.size(); ++k) {
    if (!(sigma[k] > 0) || !(sigma[k] <= L[k]))
      throw std::invalid_argument("abstract_am_certificate: 0 < sigma_k <= L_k violated");
    r *= 1 - sigma[k] / L[k];
  }
  return r;
}

BoundCheck check_a_posteriori(const RateCertificate& cert, const IterationReport& report) {
  BoundCheck b;
  const double floor = 1e-14 * std::abs(report.initial_gap);
  for (const auto& rec : report.records) {
    if (!std::isfinite(rec.gap)) continue;
    if (rec.gap <= floor) {
      ++b.skipped;
      continue;
    }
    if (rec.decrease <= roundoff_floor * std::abs(rec.energy)) {
      ++b.skipped;
      continue;
    }
    ++b.checked;
    const double bound = factor_of(cert.rate) * std::sqrt(rec.decrease);
    b.max_ratio = std::max(b.max_ratio, std::sqrt(rec.gap) / bound);
  }
  return b;
}

BoundCheck check_a_priori(const RateCertificate& cert, const IterationReport& report) {
  BoundCheck b;
  const double floor = 1e-14 * std::abs(report.initial_gap);
  const double e0 = std::sqrt(std::max(report.initial_gap, 0.0));
  double ri = 1;
  for (const auto& rec : report.records) {
    ri *= cert.rate;
    if (!std::isfinite(rec.gap)) continue;
    if (rec.gap <= floor) {
      ++b.skipped;
      continue;
    }
    ++b.checked;
    const double bound = ri * e0;
    b.max_ratio = std::max(b.max_ratio, bound > 0 ? std::sqrt(rec.gap) / bound : std::numeric_limits<double>::infinity());
  }
  return b;
}

}  // namespace poro
