#include "poroflow/models.hpp"

#include "poroflow/fem.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <stdexcept>

namespace poro {

Lame lame_from_E_nu(double E, double nu, int dim) {
  if (!(E > 0)) throw std::invalid_argument("E must be positive");
  if (!(nu >= 0 && nu < 0.5)) throw std::invalid_argument("nu must lie in [0, 0.5)");
  if (dim != 2 && dim != 3) throw std::invalid_argument("dim must be 2 or 3");
  Lame l;
  l.dim = dim;
  l.mu = E / (2 * (1 + nu));
  l.lambda = E * nu / ((1 + nu) * (1 - 2 * nu));
  l.K_dr = 2 * l.mu / dim + l.lambda;
  return l;
}

std::pair<double, double> E_nu_from_lame(double mu, double lambda) {
  const double nu = lambda / (2 * (lambda + mu));
  return {2 * mu * (1 + nu), nu};
}

void PoroParams::validate() const {
  if (!(E > 0)) throw std::invalid_argument("material.E must be positive");
  if (!(nu >= 0 && nu < 0.5)) throw std::invalid_argument("material.nu must lie in [0, 0.5)");
  if (!(alpha >= 0 && alpha <= 1)) throw std::invalid_argument("material.alpha must lie in [0, 1]");
  if (!(M > 0)) throw std::invalid_argument("material.M must be positive");
  if (!(kappa > 0)) throw std::invalid_argument("material.kappa must be positive");
}

void ViscoParams::validate() const {
  if (!(E_v > 0)) throw std::invalid_argument("visco.E_v must be positive");
  if (!(nu_v >= 0 && nu_v < 0.5)) throw std::invalid_argument("visco.nu_v must lie in [0, 0.5)");
  if (mu_v_prime < 0 || lambda_v_prime < 0) throw std::invalid_argument("visco rate moduli must be nonnegative");
  if (mu_v_prime == 0 && lambda_v_prime == 0) throw std::invalid_argument("visco rate moduli are both zero");
  if (!(alpha_v >= 0 && alpha_v <= 1)) throw std::invalid_argument("visco.alpha_v must lie in [0, 1]");
}

Eigen::Matrix2d ThermoParams::MT_inv(double M) const {
  Eigen::Matrix2d A;
  A << 1 / M, -3 * alpha_phi, -3 * alpha_phi, C_d / T0;
  return A;
}

void ThermoParams::validate(double M) const {
  if (!(C_d > 0 && T0 > 0 && kappa_F > 0)) throw std::invalid_argument("thermo: C_d, T0, kappa_F must be positive");
  if (alpha_T < 0) throw std::invalid_argument("thermo.alpha_T must be nonnegative");
  if (!(MT_inv(M).determinant() > 0)) throw std::invalid_argument("thermo: M_T is not SPD (C_d/T0 - 9 M alpha_phi^2 <= 0)");
}

std::string to_string(WKind k) {
  switch (k) {
    case WKind::linear: return "linear";
    case WKind::nl_compressibility: return "nl_compressibility";
    case WKind::nl_shear: return "nl_shear";
    case WKind::visco_elasto_plastic: return "visco_elasto_plastic";
  }
  return "?";
}

WKind parse_w_kind(const std::string& s) {
  for (WKind k : {WKind::linear, WKind::nl_compressibility, WKind::nl_shear, WKind::visco_elasto_plastic})
    if (to_string(k) == s) return k;
  if (s == "p_laplacian") return WKind::nl_compressibility;
  throw std::invalid_argument("unknown strain energy law '" + s + "'");
}

StrainEnergyLaw linear_law(int dim, double mu, double lambda) {
  StrainEnergyLaw w;
  w.kind = WKind::linear;
  w.dim = dim;
  w.mu = mu;
  w.lambda = lambda;
  return w;
}

StrainEnergyLaw p_laplacian_law(int dim, double mu, double lambda) {
  StrainEnergyLaw w;
  w.kind = WKind::nl_compressibility;
  w.dim = dim;
  w.mu = mu;
  w.lambda = lambda;
  w.l1 = 0;
  w.l2 = lambda;
  return w;
}

namespace {

// integral of s f(s) from 0 to a, with f(s) = f0 + f1 min(s, cap)
double shear_potential(const StrainEnergyLaw& w, double a) {
  double v = 0.5 * w.f0 * a * a;
  if (a <= w.s_cap)
    v += w.f1 * a * a * a / 3;
  else
    v += w.f1 * (w.s_cap * w.s_cap * w.s_cap / 3 + 0.5 * w.s_cap * (a * a - w.s_cap * w.s_cap));
  return v;
}

double shear_f(const StrainEnergyLaw& w, double a) { return w.f0 + w.f1 * std::min(a, w.s_cap); }
double shear_df(const StrainEnergyLaw& w, double a) { return a < w.s_cap ? w.f1 : 0.0; }

double yield_strain(const StrainEnergyLaw& w) { return w.K_yield / (2 * w.mu); }

}  // namespace

void StrainEnergyLaw::validate() const {
  if (dim != 2 && dim != 3) throw std::invalid_argument("strain energy: dim must be 2 or 3");
  switch (kind) {
    case WKind::linear:
      if (!(mu > 0) || lambda < 0) throw std::invalid_argument("linear law: need mu > 0, lambda >= 0");
      break;
    case WKind::nl_compressibility:
      if (!(mu > 0) || l1 < 0 || l2 < 0) throw std::invalid_argument("nl_compressibility: need mu > 0, l1, l2 >= 0");
      break;
    case WKind::nl_shear:
      if (!(f0 > 0) || f1 < 0 || s_cap < 0 || lambda < 0)
        throw std::invalid_argument("nl_shear: need f0 > 0, f1 >= 0, s_cap >= 0, lambda >= 0");
      break;
    case WKind::visco_elasto_plastic:
      if (!(mu > 0) || K_yield < 0 || lambda < 0)
        throw std::invalid_argument("visco_elasto_plastic: need mu > 0, K >= 0, lambda >= 0");
      break;
  }
}

double StrainEnergyLaw::value(const VectorXd& e) const {
  const double tr = e.head(dim).sum();
  switch (kind) {
    case WKind::linear: return mu * e.squaredNorm() + 0.5 * lambda * tr * tr;
    case WKind::nl_compressibility:
      return mu * e.squaredNorm() + 0.5 * l1 * tr * tr + l2 * std::abs(tr) * tr * tr / 3;
    case WKind::nl_shear: return shear_potential(*this, e.norm()) + 0.5 * lambda * tr * tr;
    case WKind::visco_elasto_plastic: {
      VectorXd ed = e - tr / dim * trace_vector(dim);
      const double a = ed.norm(), K = 2 * mu / dim + lambda;
      return mu * a * a + K_yield * std::max(a - yield_strain(*this), 0.0) + 0.5 * K * tr * tr;
    }
  }
  return 0;
}

VectorXd StrainEnergyLaw::stress(const VectorXd& e) const {
  const double tr = e.head(dim).sum();
  const VectorXd m = trace_vector(dim);
  switch (kind) {
    case WKind::linear: return 2 * mu * e + lambda * tr * m;
    case WKind::nl_compressibility: return 2 * mu * e + (l1 * tr + l2 * std::abs(tr) * tr) * m;
    case WKind::nl_shear: return shear_f(*this, e.norm()) * e + lambda * tr * m;
    case WKind::visco_elasto_plastic: {
      VectorXd ed = e - tr / dim * m;
      const double a = ed.norm(), K = 2 * mu / dim + lambda;
      VectorXd sd = 2 * mu * ed;
      if (2 * mu * a > K_yield) sd += K_yield / a * ed;
      return sd + K * tr * m;
    }
  }
  return VectorXd::Zero(e.size());
}

MatrixXd StrainEnergyLaw::hessian(const VectorXd& e) const {
  const int ns = static_cast<int>(e.size());
  const double tr = e.head(dim).sum();
  const VectorXd m = trace_vector(dim);
  const MatrixXd I = MatrixXd::Identity(ns, ns);
  switch (kind) {
    case WKind::linear: return 2 * mu * I + lambda * m * m.transpose();
    case WKind::nl_compressibility: return 2 * mu * I + (l1 + 2 * l2 * std::abs(tr)) * m * m.transpose();
    case WKind::nl_shear: {
      const double a = e.norm();
      MatrixXd H = shear_f(*this, a) * I + lambda * m * m.transpose();
      if (a > 0) H += shear_df(*this, a) / a * e * e.transpose();
      return H;
    }
    case WKind::visco_elasto_plastic: {
      const MatrixXd P = I - m * m.transpose() / dim;
      VectorXd ed = P * e;
      const double a = ed.norm(), K = 2 * mu / dim + lambda;
      MatrixXd H = 2 * mu * P + K * m * m.transpose();
      if (2 * mu * a > K_yield) H += K_yield / a * P - K_yield / (a * a * a) * ed * ed.transpose();
      return H;
    }
  }
  return I;
}

double StrainEnergyLaw::bulk_modulus(const VectorXd& e) const {
  const VectorXd m = trace_vector(dim);
  return 1.0 / m.dot(hessian(e).ldlt().solve(m));
}

double min_hessian_eigenvalue(const StrainEnergyLaw& law, double scale, int samples, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> U(-1, 1);
  const int ns = strain_size(law.dim);
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    VectorXd e(ns);
    for (int k = 0; k < ns; ++k) e[k] = U(gen);
    e *= scale * std::abs(U(gen)) / std::max(e.norm(), 1e-300);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(law.hessian(e));
    lo = std::min(lo, es.eigenvalues().minCoeff());
  }
  return lo;
}

double Compressibility::b(double p) const {
  switch (kind) {
    case BKind::linear: return p / M;
    case BKind::tanh: return b_scale * std::tanh(p / p_scale);
    case BKind::user: return b_user(p);
  }
  return 0;
}

double Compressibility::b_prime(double p) const {
  switch (kind) {
    case BKind::linear: return 1 / M;
    case BKind::tanh: {
      const double c = std::cosh(p / p_scale);
      return b_scale / (p_scale * c * c);
    }
    case BKind::user: return db_user(p);
  }
  return 0;
}

double Compressibility::b_inverse(double r) const {
  switch (kind) {
    case BKind::linear: return M * r;
    case BKind::tanh:
      if (std::abs(r) >= b_scale) throw std::domain_error("compressibility: value outside the range of b");
      return p_scale * std::atanh(r / b_scale);
    case BKind::user: {
      // safeguarded Newton on b(p) = r
      double lo = -1, hi = 1;
      while (b(lo) > r) lo *= 2;
      while (b(hi) < r) hi *= 2;
      double p = 0.5 * (lo + hi);
      for (int it = 0; it < 200; ++it) {
        const double g = b(p) - r;
        if (g > 0) hi = p; else lo = p;
        const double d = b_prime(p);
        double pn = d > 0 ? p - g / d : 0.5 * (lo + hi);
        if (!(pn > lo && pn < hi)) pn = 0.5 * (lo + hi);
        if (std::abs(pn - p) <= 1e-15 * std::max(1.0, std::abs(p))) return pn;
        p = pn;
      }
      return p;
    }
  }
  return 0;
}

double Compressibility::B(double p) const {
  switch (kind) {
    case BKind::linear: return 0.5 * p * p / M;
    case BKind::tanh: {
      const double x = std::abs(p / p_scale);
      return b_scale * p_scale * (x + std::log1p(std::exp(-2 * x)) - std::log(2.0));
    }
    case BKind::user: {
      const int n = 64;
      const double h = p / n;
      double s = b(0) + b(p);
      for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * b(i * h);
      return s * h / 3;
    }
  }
  return 0;
}

double Compressibility::B_conjugate(double r) const {
  // Fenchel conjugate identity: B*(r) = r b^-1(r) - B(b^-1(r))
  if (kind == BKind::linear) return 0.5 * M * r * r;
  const double p = b_inverse(r);
  return r * p - B(p);
}

BValue compressibility(const Compressibility& law, double p) { return {law.b(p), law.b_prime(p)}; }

std::string to_string(ViscosityKind k) {
  switch (k) {
    case ViscosityKind::newtonian: return "newtonian";
    case ViscosityKind::carreau: return "carreau";
    case ViscosityKind::cross: return "cross";
    case ViscosityKind::power: return "power";
    case ViscosityKind::forchheimer: return "forchheimer";
  }
  return "?";
}

void ViscosityLaw::validate() const {
  if (!(kappa > 0)) throw std::invalid_argument("viscosity law: kappa must be positive");
  switch (kind) {
    case ViscosityKind::newtonian:
    case ViscosityKind::forchheimer:
      if (!(nu_inf > 0) || F < 0) throw std::invalid_argument("viscosity law: need nu_inf > 0, F >= 0");
      break;
    case ViscosityKind::carreau:
    case ViscosityKind::cross:
      if (!(nu_inf > 0 && nu_0 > nu_inf && K_f > 0 && r > 1 && r < 2))
        throw std::invalid_argument("viscosity law: need 0 < nu_inf < nu_0, K_f > 0, r in (1,2)");
      break;
    case ViscosityKind::power:
      if (!(K_f > 0 && r > 1 && r < 2)) throw std::invalid_argument("power law: need K_f > 0, r in (1,2)");
      break;
  }
}

double ViscosityLaw::viscosity(double s) const {
  s = std::abs(s);
  switch (kind) {
    case ViscosityKind::newtonian:
    case ViscosityKind::forchheimer: return nu_inf;
    case ViscosityKind::carreau: return nu_inf + (nu_0 - nu_inf) / std::pow(1 + K_f * s * s, (2 - r) / 2);
    case ViscosityKind::cross: return nu_inf + (nu_0 - nu_inf) / (1 + K_f * std::pow(s, 2 - r));
    case ViscosityKind::power: return s > 0 ? 1 / (K_f * std::pow(s, 2 - r)) : std::numeric_limits<double>::infinity();
  }
  return 0;
}

Dissipation fluid_dissipation(const ViscosityLaw& law, double q) {
  if (q < 0) throw std::invalid_argument("fluid_dissipation: q must be nonnegative");
  const double ki = 1 / law.kappa;
  Dissipation d;
  switch (law.kind) {
    case ViscosityKind::newtonian:
      d.density = ki * law.nu_inf * q * q / 2;
      d.derivative = ki * law.nu_inf * q;
      break;
    case ViscosityKind::forchheimer:
      d.density = 0.5 * law.nu_inf * ki * q * q + 0.5 * law.F * q * q * q;
      d.derivative = law.nu_inf * ki * q + 1.5 * law.F * q * q;
      break;
    case ViscosityKind::carreau:
      d.density = ki * (law.nu_inf * q * q / 2 +
                        (law.nu_0 - law.nu_inf) / (law.K_f * law.r) * (std::pow(1 + law.K_f * q * q, law.r / 2) - 1));
      d.derivative = ki * q * law.viscosity(q);
      break;
    case ViscosityKind::power:
      d.density = ki * std::pow(q, law.r) / (law.K_f * law.r);
      d.derivative = q > 0 ? ki * q * law.viscosity(q) : 0.0;
      break;
    case ViscosityKind::cross: {
      // composite 5-point Gauss-Legendre on [0, q]
      static const double x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                  0.9061798459386640};
      static const double w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                                  0.2369268850561891};
      const int panels = 64;
      const double h = q / panels;
      double s = 0;
      for (int p = 0; p < panels; ++p)
        for (int k = 0; k < 5; ++k) {
          const double t = h * (p + 0.5 * (x[k] + 1));
          s += 0.5 * h * w[k] * t * law.viscosity(t);
        }
      d.density = ki * s;
      d.derivative = ki * q * law.viscosity(q);
      break;
    }
  }
  return d;
}

}  // namespace poro
