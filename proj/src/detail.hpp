#pragma once

#include "poroflow/solvers.hpp"

#include <vector>

namespace poro::detail {

enum class View { primal, dual, dual_nl };

// Records iterations, applies the stopping rule and divergence detection.
class Monitor {
public:
  Monitor(const DiscreteEnergy& E, const SplitScheme& s, SchemeKind kind, View view, const Solution* oracle);

  double energy(const Solution& z) const;
  double difference(const Solution& a, const Solution& b) const;  // E(a) - E(b)
  double gap(const Solution& z) const;

  void start(const Solution& z0);
  // true when the run should stop
  bool record(const Solution& prev, const Solution& cur, double alpha, int inner,
              double ru = std::numeric_limits<double>::quiet_NaN(),
              double rp = std::numeric_limits<double>::quiet_NaN());
  // relaxes `half` in place along half - prev; returns alpha
  double relax(const Solution& prev, Solution& half);
  IterationReport finish();

  const DiscreteEnergy& E;
  const SplitScheme& scheme;
  View view;
  const Solution* oracle;
  IterationReport report;

private:
  std::vector<double> min_abs_;
  int increases_ = 0;
  double half_increment_ = 0;
  bool done_ = false;
  double prev_energy_ = 0;
};

Solution combine(const Solution& a, double wa, const Solution& b, double wb);
VectorXd flatten(const MatrixXd& p);  // column-major, k nc + e
MatrixXd unflatten(const VectorXd& v, Index nc, Index ncomp);

}  // namespace poro::detail
