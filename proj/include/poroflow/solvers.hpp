#pragma once

#include "poroflow/energy.hpp"

#include <limits>
#include <optional>

namespace poro {

enum class SchemeKind {
  monolithic,
  alternating,
  undrained,
  fixed_stress,
  visco_undrained,
  visco_fixed_stress,
  thermo_undrained_adiabatic,
  thermo_extended_fixed_stress,
  thermo_three_block,
  nl_fixed_stress_newton,
  nl_fixed_stress_lscheme,
};

std::string to_string(SchemeKind k);
SchemeKind parse_scheme_kind(const std::string& s);
bool is_fixed_stress(SchemeKind k);

enum class LineSearch { off, quadratic };
std::string to_string(LineSearch l);

// Inner policies of the nonlinear fixed-stress split.
enum class InnerPolicy { N_max, N_1, L_ex, L_opt };
std::string to_string(InnerPolicy p);
InnerPolicy parse_inner_policy(const std::string& s);

struct SplitScheme {
  SchemeKind kind = SchemeKind::fixed_stress;
  double gamma = 1.0;
  LineSearch line_search = LineSearch::off;
  double tol_rel = 1e-6;
  int max_outer = 2000;
  bool block_path = false;  // block minimization instead of the stabilized-equation form

  // nonlinear inner solvers
  InnerPolicy policy = InnerPolicy::N_max;
  int inner_max = 50;         // cap for N_max and L_m (m)
  double inner_tol = 1e-5;    // |r^j| / |r^0|
  bool inner_line_search = false;
  double L_b = 0, L_FS = 0;   // L-scheme flow constants
  double L_mu = 0, L_vol = 0; // L = 2 L_mu I + L_vol I (x) I

  void validate() const;
};

// Energy differences below this fraction of |E| are treated as roundoff.
inline constexpr double roundoff_floor = 1e-12;

enum class Outcome { converged, max_iter, diverged };
std::string to_string(Outcome o);

struct IterationRecord {
  double energy = 0;
  double decrease = 0;   // E^{i-1} - E^i
  double gap = std::numeric_limits<double>::quiet_NaN();  // E^i - E*, oracle required
  double increment = 0;  // max relative L2 block increment
  std::vector<double> block_increments;
  double alpha = 0;
  int inner = 0;
  double residual_u = std::numeric_limits<double>::quiet_NaN();
  double residual_p = std::numeric_limits<double>::quiet_NaN();
};

struct IterationReport {
  SchemeKind kind = SchemeKind::monolithic;
  bool dual = false;  // energies are dual energies
  std::vector<std::string> block_names;
  double initial_energy = 0;
  double initial_gap = std::numeric_limits<double>::quiet_NaN();
  std::vector<IterationRecord> records;
  Outcome outcome = Outcome::max_iter;
  int inner_total = 0;
  std::string message;

  int iterations() const { return static_cast<int>(records.size()); }
  double final_energy() const { return records.empty() ? initial_energy : records.back().energy; }
  double max_energy_increase() const;  // largest -decrease, 0 if monotone
};

// State with post-processed (or dual) pressures, nc x ncomp.
struct Solution {
  VectorXd x;
  MatrixXd p;
};

struct SolveResult {
  Solution state;
  IterationReport report;
};

Solution zero_solution(const DiscreteEnergy& E);
Solution primal_solution(const DiscreteEnergy& E, VectorXd x);

SolveResult solve_monolithic(const DiscreteEnergy& E, const Solution& x0, double tol = 1e-10);

// Cyclic exact block minimization over groups of named blocks.
SolveResult alternating_minimization(const DiscreteEnergy& E, const std::vector<std::vector<std::string>>& partition,
                                     const SplitScheme& scheme, const Solution& x0, const Solution* oracle = nullptr);

SolveResult undrained_split(const DiscreteEnergy& E, const SplitScheme& scheme, const Solution& x0,
                            const Solution* oracle = nullptr);
// components: ordered flow groups, e.g. {{0}} (poro), {{0,1}} (extended), {{0},{1}} (three-block)
SolveResult fixed_stress_split(const DiscreteEnergy& E, const SplitScheme& scheme, const Solution& x0,
                               const std::vector<std::vector<int>>& groups, const Solution* oracle = nullptr);
SolveResult visco_split(const DiscreteEnergy& E, const SplitScheme& scheme, const Solution& x0,
                        const Solution* oracle = nullptr);
SolveResult thermo_split(const DiscreteEnergy& E, const SplitScheme& scheme, const Solution& x0,
                         const Solution* oracle = nullptr);
SolveResult nonlinear_fixed_stress(const DiscreteEnergy& E, const SplitScheme& scheme, const Solution& x0,
                                   const Solution* oracle = nullptr);

// Dispatch on scheme.kind.
SolveResult solve_step(const DiscreteEnergy& E, const SplitScheme& scheme, const Solution& x0,
                       const Solution* oracle = nullptr);

// Quadratic fit through samples at alpha = -1, 0, 1; returns the minimizer or 0.
double line_search_alpha(double e_minus, double e_zero, double e_plus);
struct Relaxed {
  double alpha = 0;
  VectorXd x;
};
// samples E at x_prev, x_half, x_half + dx and relaxes about x_half
Relaxed line_search_relax(const DiscreteEnergy& E, const VectorXd& x_prev, const VectorXd& x_half);

// Generalized dual energy of the nonlinear family.
double nonlinear_dual_energy(const DiscreteEnergy& E, const VectorXd& x, const MatrixXd& p);

struct StepRecord {
  int step = 0;
  double t = 0;
  SolveResult result;
  std::optional<Solution> reference;
  MatrixXd contents;
  double wall_ms = 0;  // split solve only
};

struct Trajectory {
  std::vector<StepRecord> steps;
  Solution final_state;
  bool ok = true;
};

struct TimeStepOptions {
  int n_steps = 5;
  double dt = 0.1;
  double load_rate = 1e9;     // traction = load_rate * t
  bool reference = false;     // monolithic oracle per step
  bool stop_on_failure = true;
};

Trajectory time_stepper(std::shared_ptr<const Discretization> disc, const MaterialSpec& mat, const SplitScheme& scheme,
                        const TimeStepOptions& opt);

// min and max of |div u| over cells and steps
std::pair<double, double> divergence_range(const Trajectory& traj, const Discretization& d);
// L_b = 1/M, L_FS = alpha^2/(2mu/d + 2 lambda dmin), L = 2mu I + 2 lambda dmax I (x) I;
// L_opt uses dmin = dmax = dmax/10
void set_lscheme_constants(SplitScheme& s, const MaterialSpec& m, int dim, double div_min, double div_max);

}  // namespace poro
