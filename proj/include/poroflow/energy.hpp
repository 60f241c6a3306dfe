#pragma once

#include "poroflow/fem.hpp"
#include "poroflow/models.hpp"

#include <memory>

namespace poro {

enum class Family { poro, visco, thermo, nonlinear, toy };

std::string to_string(Family f);

// Operators on the footing mesh restricted to free dofs.
struct Discretization {
  std::shared_ptr<const Mesh> mesh;
  int dim = 2;
  int ns = 3;
  FeSpace u_space, q_space, p_space;
  std::vector<Index> u_free;
  std::vector<Index> flux_free[2];  // fluid, heat
  SparseMatrix strain;              // (nc ns) x nu
  SparseMatrix div[2];              // nc x nflux
  SparseMatrix rt0_mass[2];         // kappa = 1
  SparseMatrix u_mass;
  VectorXd vol;
  VectorXd unit_load;               // downward unit traction on the patch
  VectorXd heat_patch;              // -1 on free heat facets of the patch

  Index nu() const { return static_cast<Index>(u_free.size()); }
  Index nc() const { return mesh->n_cells(); }
  Index nflux(int k) const { return static_cast<Index>(flux_free[k].size()); }
};

std::shared_ptr<const Discretization> make_discretization(Mesh mesh);

struct MaterialSpec {
  Family family = Family::poro;
  PoroParams poro;
  ViscoParams visco;
  ThermoParams thermo;
  StrainEnergyLaw law;      // nonlinear family; mu, lambda filled from poro
  Compressibility b;        // nonlinear family
  double T_patch = 10.0;    // prescribed patch temperature (thermo scenario)

  int n_contents() const { return family == Family::thermo ? 2 : 1; }
  void validate(int dim) const;
};

struct StepData {
  double dt = 0.1;
  double t = 0;
  MatrixXd content_prev;   // nc x ncomp: theta^{n-1} (and S^{n-1})
  MatrixXd source;         // nc x ncomp, empty: zero
  MatrixXd eps_v_prev;     // ns x nc, visco only
  double traction = 0;     // downward traction on the patch

  static StepData zero(const Discretization& d, const MaterialSpec& m, double dt);
};

// E(x) = 1/2 x'Hx - b'x + c0 for quadratic families; generic nonlinear terms otherwise.
// State x = [X | Q_0 | Q_1], X = u (plus eps_v per cell for visco).
struct DiscreteEnergy {
  Family family = Family::poro;
  std::vector<BlockRange> blocks;
  bool is_quadratic = true;
  std::shared_ptr<const Discretization> disc;
  MaterialSpec material;
  double dt = 0.1;

  Index nX = 0;
  Index ncomp = 1;
  Index nq[2] = {0, 0};
  Index q_offset[2] = {0, 0};

  // cell data
  Index nxi = 0;
  MatrixXd Cloc;            // nxi x nxi
  MatrixXd Aloc;            // nxi x ncomp
  Eigen::Matrix2d W = Eigen::Matrix2d::Zero();     // top-left ncomp block used
  Eigen::Matrix2d Winv = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d Sloc = Eigen::Matrix2d::Zero();  // Aloc' Cloc^-1 Aloc
  double kinv[2] = {1, 1};  // RT0 mass scaling per content
  MatrixXd ctilde;          // nc x ncomp

  SparseMatrix Sxi;         // (nc nxi) x nX
  SparseMatrix Chat;        // (ncomp nc) x nX, integrated coupling
  SparseMatrix Hm;          // nX x nX
  VectorXd F;               // mechanics load
  VectorXd g[2];            // Darcy load per content
  SparseMatrix Mk[2];       // kinv * rt0 mass
  SparseMatrix G;           // [Chat | dt D_0 | dt D_1], rows k nc + e
  SparseMatrix Wbar;        // W (x) diag(1/|e|)

  SparseMatrix H;
  VectorXd b;
  double c0 = 0;

  Index size() const { return nX + nq[0] + nq[1]; }
  const Discretization& d() const { return *disc; }

  double eval(const VectorXd& x) const;
  VectorXd grad(const VectorXd& x) const;
  SparseMatrix hessian(const VectorXd& x) const;  // constant for quadratic families
  // E(a) - E(b) evaluated without cancellation in the constant and linear parts
  double difference(const VectorXd& a, const VectorXd& b) const;

  VectorXd mech(const VectorXd& x) const { return x.head(nX); }
  VectorXd flux(const VectorXd& x, int k) const { return x.segment(q_offset[k], nq[k]); }
  // r_e = ctilde_e - ((Chat X)_e + dt (D Q)_e) / |e|, nc x ncomp
  MatrixXd content_residual(const VectorXd& x) const;
  // post-processed pressure (and temperature), nc x ncomp
  MatrixXd pressure(const VectorXd& x) const;
  // updated contents theta^n (and S^n), nc x ncomp
  MatrixXd contents(const VectorXd& x) const;
  // cellwise Mandel strains of u, ns x nc
  MatrixXd strains(const VectorXd& x) const;
};

DiscreteEnergy build_poro_energy(std::shared_ptr<const Discretization> d, const PoroParams& p, const StepData& s);
DiscreteEnergy build_visco_energy(std::shared_ptr<const Discretization> d, const PoroParams& p,
                                  const ViscoParams& v, const StepData& s);
DiscreteEnergy build_thermo_energy(std::shared_ptr<const Discretization> d, const PoroParams& p,
                                   const ThermoParams& th, const StepData& s, double T_patch = 0);
DiscreteEnergy build_nonlinear_energy(std::shared_ptr<const Discretization> d, const StrainEnergyLaw& law,
                                      const Compressibility& b, const PoroParams& p, const StepData& s);
DiscreteEnergy build_energy(std::shared_ptr<const Discretization> d, const MaterialSpec& m, const StepData& s);
// f(x, y) = x^2/2 + y^2/2 + rho x y
DiscreteEnergy build_toy_energy(double rho);

// sqrt(1/2 x'Hx); nonlinear families linearize at `at`
double energy_norm(const DiscreteEnergy& E, const VectorXd& x, const VectorXd* at = nullptr);

// Dual energy at dual-feasible states (X, Q, P).
double dual_energy(const DiscreteEnergy& E, const VectorXd& x, const MatrixXd& p);
// 1/2 (z - z*)' Hd (z - z*) with Hd = diag(Hm, |e| W^-1, dt M); equals the dual gap for feasible z, z* optimal
double dual_gap(const DiscreteEnergy& E, const VectorXd& x, const MatrixXd& p, const VectorXd& xs, const MatrixXd& ps);
double dual_difference(const DiscreteEnergy& E, const VectorXd& xa, const MatrixXd& pa, const VectorXd& xb,
                       const MatrixXd& pb);

struct BlockNorms {
  std::vector<std::string> names;
  std::vector<double> values;
};
// L2 norms of the named fields: u, eps_v, q, j, p, T
BlockNorms l2_norms(const DiscreteEnergy& E, const VectorXd& x, const MatrixXd& p);

// Expand free mechanics dofs of X into a full nodal displacement vector.
VectorXd full_displacement(const DiscreteEnergy& E, const VectorXd& x);

}  // namespace poro
