#pragma once

#include "poroflow/linalg.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace poro {

struct Lame {
  double mu = 0;
  double lambda = 0;
  double K_dr = 0;
  int dim = 2;
};

Lame lame_from_E_nu(double E, double nu, int dim);
// inverse map, returns (E, nu)
std::pair<double, double> E_nu_from_lame(double mu, double lambda);

struct PoroParams {
  double E = 1e10;
  double nu = 0.2;
  double alpha = 1.0;
  double M = 1e11;
  double kappa = 1e-13;  // conductivity: permeability / fluid viscosity

  void validate() const;
  Lame lame(int dim) const { return lame_from_E_nu(E, nu, dim); }
};

struct ViscoParams {
  double E_v = 1e10;
  double nu_v = 0.3;
  double mu_v_prime = 0;
  double lambda_v_prime = 1e9;
  double alpha_v = 0.8;

  void validate() const;
  Lame lame(int dim) const { return lame_from_E_nu(E_v, nu_v, dim); }
  double K_dr_prime(int dim) const { return 2 * mu_v_prime / dim + lambda_v_prime; }
};

struct ThermoParams {
  double alpha_T = 3e-5;
  double alpha_phi = 1e-5;
  double C_d = 2.6e6;
  double T0 = 300;
  double kappa_F = 2.0;

  // [[1/M, -3 alpha_phi], [-3 alpha_phi, C_d/T0]]
  Eigen::Matrix2d MT_inv(double M) const;
  Eigen::Matrix2d MT(double M) const { return MT_inv(M).inverse(); }
  void validate(double M) const;
};

// Scalar function with derivative, used for l(s) and f(s) style laws.
enum class WKind { linear, nl_compressibility, nl_shear, visco_elasto_plastic };

std::string to_string(WKind k);
WKind parse_w_kind(const std::string& s);

// Strain energy densities on Mandel strain vectors.
struct StrainEnergyLaw {
  WKind kind = WKind::linear;
  int dim = 2;
  double mu = 1;
  double lambda = 0;
  double l1 = 0, l2 = 0;               // l(s) = l1 s + l2 |s| s
  double f0 = 0, f1 = 0, s_cap = 0;    // f(s) = f0 + f1 min(s, s_cap)
  double K_yield = 0;                  // deviatoric switch at 2 mu |eps_d| = K_yield

  double value(const VectorXd& eps) const;
  VectorXd stress(const VectorXd& eps) const;
  MatrixXd hessian(const VectorXd& eps) const;
  // I : H^-1 : I, drained bulk modulus of the linearization
  double bulk_modulus(const VectorXd& eps) const;
  void validate() const;
};

StrainEnergyLaw linear_law(int dim, double mu, double lambda);
StrainEnergyLaw p_laplacian_law(int dim, double mu, double lambda);  // mu |eps|^2 + lambda/3 |tr eps|^3

// smallest eigenvalue of the Hessian over sampled strains of magnitude <= scale
double min_hessian_eigenvalue(const StrainEnergyLaw& law, double scale, int samples, unsigned seed = 1);

enum class BKind { linear, tanh, user };

struct Compressibility {
  BKind kind = BKind::linear;
  double M = 1e11;                    // linear: b = p / M
  double b_scale = 1, p_scale = 1;    // tanh: b = b_scale tanh(p / p_scale)
  std::function<double(double)> b_user, db_user;

  double b(double p) const;
  double b_prime(double p) const;
  double b_inverse(double r) const;
  double B(double p) const;            // integral of b from 0 to p
  double B_conjugate(double r) const;  // integral of b^-1 from 0 to r
};

struct BValue {
  double b = 0;
  double b_prime = 0;
};
BValue compressibility(const Compressibility& law, double p);

enum class ViscosityKind { newtonian, carreau, cross, power, forchheimer };

std::string to_string(ViscosityKind k);

struct ViscosityLaw {
  ViscosityKind kind = ViscosityKind::newtonian;
  double nu_0 = 2e-3;
  double nu_inf = 1e-3;
  double K_f = 1;
  double r = 1.5;
  double F = 0;       // Forchheimer number
  double kappa = 1;   // permeability

  double viscosity(double s) const;
  void validate() const;
};

struct Dissipation {
  double density = 0;
  double derivative = 0;
};

// Density per unit volume at flux magnitude q >= 0.
Dissipation fluid_dissipation(const ViscosityLaw& law, double q);

}  // namespace poro
