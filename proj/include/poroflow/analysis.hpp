#pragma once

#include "poroflow/solvers.hpp"

#include <optional>

namespace poro {

// Certified contraction of the energy-norm error per outer iteration.
struct RateCertificate {
  SchemeKind kind = SchemeKind::fixed_stress;
  double rate = 0;                 // error norm factor, energy gap factor is rate^2
  double a_posteriori_factor = 0;  // rate / sqrt(1 - rate^2)
  std::string formula;
  std::vector<std::pair<std::string, double>> ingredients;
  bool available = true;           // false: no closed-form certificate for this scheme

  double gap_factor() const { return rate * rate; }
};

struct RateOptions {
  std::optional<double> C_Omega;  // empty: the dt kappa / C_Omega^2 term is dropped
};

RateCertificate theoretical_rate(SchemeKind kind, const MaterialSpec& m, int dim, double dt, const RateOptions& opt = {});
// Toy energy x^2/2 + y^2/2 + rho x y under two-block minimization.
RateCertificate toy_rate(double rho);

// Geometric mean of energy-gap ratios over the last half of the history; 0 for one-iteration convergence,
// NaN with a diagnostic when gaps are unavailable or not monotone.
double empirical_rate(const IterationReport& report, std::string* diagnostic = nullptr);

// rate / sqrt(1 - rate^2) * sqrt(E_prev - E_curr); +inf for rate >= 1
double a_posteriori_bound(const RateCertificate& cert, double E_prev, double E_curr);

// product of (1 - sigma_k / L_k)
double abstract_am_certificate(const std::vector<double>& sigma, const std::vector<double>& L);

struct BoundCheck {
  double max_ratio = 0;  // max over iterations of error / bound
  int checked = 0;
  int skipped = 0;       // iterations at roundoff level
};
// sqrt(gap_i) against the a posteriori bound from the recorded energy decrease
BoundCheck check_a_posteriori(const RateCertificate& cert, const IterationReport& report);
// sqrt(gap_i) against rate^i sqrt(gap_0)
BoundCheck check_a_priori(const RateCertificate& cert, const IterationReport& report);

}  // namespace poro
