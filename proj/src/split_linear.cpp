#include "poroflow/solvers.hpp"

#include "detail.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <memory>
#include <stdexcept>

namespace poro {

namespace {

using detail::flatten;

SparseMatrix diag(const VectorXd& v) {
  SparseMatrix A(v.size(), v.size());
  std::vector<Triplet> t;
  for (Index i = 0; i < v.size(); ++i) t.emplace_back(i, i, v[i]);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

// Pressure update of one flow group with the mechanics frozen in the stabilized form
//   (W^-1 + gamma S)_JJ P_J + dt D Q_J / |e| = h_J,   M Q_J = g_J + D' P_J
class FlowStep {
public:
  FlowStep(const DiscreteEnergy& E, std::vector<int> J, double gamma) : E_(E), J_(std::move(J)), gamma_(gamma) {
    const Index nj = static_cast<Index>(J_.size());
    MatrixXd Gm(nj, nj);
    for (Index a = 0; a < nj; ++a)
      for (Index b = 0; b < nj; ++b) Gm(a, b) = E.Winv(J_[a], J_[b]) + gamma * E.Sloc(J_[a], J_[b]);
    Ginv_ = Gm.inverse();

    const VectorXd ivol = E.d().vol.cwiseInverse();
    std::vector<Index> off{0};
    for (int k : J_) off.push_back(off.back() + E.nq[k]);
    std::vector<Triplet> t;
    auto add = [&](const SparseMatrix& A, Index r0, Index c0) {
      for (Index c = 0; c < A.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(A, c); it; ++it) t.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
    };
    for (Index a = 0; a < nj; ++a) {
      add(E.Mk[J_[a]], off[a], off[a]);
      for (Index b = 0; b < nj; ++b) {
        const SparseMatrix& Da = E.d().div[J_[a]];
        const SparseMatrix& Db = E.d().div[J_[b]];
        add(SparseMatrix(E.dt * Da.transpose() * diag(Ginv_(a, b) * ivol) * Db), off[a], off[b]);
      }
    }
    SparseMatrix A(off.back(), off.back());
    A.setFromTriplets(t.begin(), t.end());
    solver_.compute(A);
    off_ = off;
  }

  // Updates the fluxes of the group in x and the pressures in P.
  void apply(const VectorXd& xi_coupling, VectorXd& x, MatrixXd& P, const MatrixXd& Pref) const {
    const Discretization& d = E_.d();
    const Index nc = d.nc(), nj = static_cast<Index>(J_.size());
    MatrixXd h(nc, nj);
    for (Index a = 0; a < nj; ++a) {
      const int k = J_[a];
      VectorXd hk = E_.ctilde.col(k) - xi_coupling.segment(k * nc, nc).cwiseQuotient(d.vol);
      for (Index l = 0; l < E_.ncomp; ++l) {
        const bool inJ = std::find(J_.begin(), J_.end(), l) != J_.end();
        if (inJ)
          hk += gamma_ * E_.Sloc(k, l) * Pref.col(l);
        else
          hk -= E_.Winv(k, l) * P.col(l) + gamma_ * E_.Sloc(k, l) * (P.col(l) - Pref.col(l));
      }
      h.col(a) = hk;
    }
    MatrixXd Gh = h * Ginv_.transpose();
    VectorXd rhs(off_.back());
    for (Index a = 0; a < nj; ++a)
      rhs.segment(off_[a], E_.nq[J_[a]]) = E_.g[J_[a]] + d.div[J_[a]].transpose() * VectorXd(Gh.col(a));
    const VectorXd Q = solver_.solve(rhs);
    MatrixXd r(nc, nj);
    for (Index a = 0; a < nj; ++a) {
      const int k = J_[a];
      const VectorXd Qk = Q.segment(off_[a], E_.nq[k]);
      x.segment(E_.q_offset[k], E_.nq[k]) = Qk;
      r.col(a) = h.col(a) - E_.dt * (d.div[k] * Qk).cwiseQuotient(d.vol);
    }
    MatrixXd PJ = r * Ginv_.transpose();
    for (Index a = 0; a < nj; ++a) P.col(J_[a]) = PJ.col(a);
  }

private:
  const DiscreteEnergy& E_;
  std::vector<int> J_;
  double gamma_;
  MatrixXd Ginv_;
  std::vector<Index> off_;
  SpdSolver solver_;
};

// Same update as FlowStep with gamma = 1, posed as a saddle point problem in (Q_J, P_J)
// with the cell stresses sigma = C xi - A P held fixed.
class BlockFlowStep {
public:
  BlockFlowStep(const DiscreteEnergy& E, std::vector<int> J) : E_(E), J_(std::move(J)) {
    const Discretization& d = E.d();
    const Index nc = d.nc(), nj = static_cast<Index>(J_.size());
    std::vector<Index> qoff{0};
    for (int k : J_) qoff.push_back(qoff.back() + E.nq[k]);
    const Index nqj = qoff.back();
    std::vector<Triplet> t;
    for (Index a = 0; a < nj; ++a) {
      const int k = J_[a];
      const SparseMatrix& M = E.Mk[k];
      const SparseMatrix& D = d.div[k];
      for (Index c = 0; c < M.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(M, c); it; ++it) t.emplace_back(qoff[a] + it.row(), qoff[a] + it.col(), it.value());
      for (Index c = 0; c < D.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(D, c); it; ++it) {
          t.emplace_back(qoff[a] + it.col(), nqj + a * nc + it.row(), -it.value());
          t.emplace_back(nqj + a * nc + it.row(), qoff[a] + it.col(), E.dt * it.value());
        }
      for (Index b = 0; b < nj; ++b) {
        const double gkl = E.Winv(k, J_[b]) + E.Sloc(k, J_[b]);
        for (Index e = 0; e < nc; ++e) t.emplace_back(nqj + a * nc + e, nqj + b * nc + e, d.vol[e] * gkl);
      }
    }
    SparseMatrix A(nqj + nj * nc, nqj + nj * nc);
    A.setFromTriplets(t.begin(), t.end());
    A.makeCompressed();
    lu_.analyzePattern(A);
    lu_.factorize(A);
    if (lu_.info() != Eigen::Success) throw std::runtime_error("block flow step: factorization failed");
    qoff_ = qoff;
    CinvA_ = E.Cloc.ldlt().solve(E.Aloc);
  }

  // sigma: nxi x nc cell stresses
  void apply(const MatrixXd& sigma, VectorXd& x, MatrixXd& P) const {
    const Discretization& d = E_.d();
    const Index nc = d.nc(), nj = static_cast<Index>(J_.size()), nqj = qoff_.back();
    const MatrixXd pred = sigma.transpose() * CinvA_;  // nc x ncomp, A' C^-1 sigma
    VectorXd rhs = VectorXd::Zero(nqj + nj * nc);
    for (Index a = 0; a < nj; ++a) {
      const int k = J_[a];
      rhs.segment(qoff_[a], E_.nq[k]) = E_.g[k];
      VectorXd hk = E_.ctilde.col(k) - pred.col(k);
      for (Index l = 0; l < E_.ncomp; ++l)
        if (std::find(J_.begin(), J_.end(), l) == J_.end()) hk -= (E_.Winv(k, l) + E_.Sloc(k, l)) * P.col(l);
      rhs.segment(nqj + a * nc, nc) = d.vol.cwiseProduct(hk);
    }
    const VectorXd y = lu_.solve(rhs);
    for (Index a = 0; a < nj; ++a) {
      const int k = J_[a];
      x.segment(E_.q_offset[k], E_.nq[k]) = y.segment(qoff_[a], E_.nq[k]);
      P.col(k) = y.segment(nqj + a * nc, nc);
    }
  }

private:
  const DiscreteEnergy& E_;
  std::vector<int> J_;
  std::vector<Index> qoff_;
  MatrixXd CinvA_;
  Eigen::SparseLU<SparseMatrix> lu_;
};

// xi = Sxi X per cell, sigma_e = C xi_e - A P_e
MatrixXd cell_stresses(const DiscreteEnergy& E, const VectorXd& X, const MatrixXd& P) {
  const VectorXd xi = E.Sxi * X;
  const MatrixXd Xi = Eigen::Map<const MatrixXd>(xi.data(), E.nxi, E.d().nc());
  return E.Cloc * Xi - E.Aloc * P.transpose();
}

void check_linear(const DiscreteEnergy& E, const char* who) {
  if (E.family == Family::toy || E.family == Family::nonlinear || !E.is_quadratic)
    throw std::invalid_argument(std::string(who) + ": linear poromechanics energy required");
}

std::vector<std::string> mechanics_names(const DiscreteEnergy& E) {
  std::vector<std::string> m;
  for (const auto& b : E.blocks)
    if (b.name == "u" || b.name == "eps_v") m.push_back(b.name);
  return m;
}

std::vector<std::string> flow_names(const DiscreteEnergy& E) {
  std::vector<std::string> m;
  for (const auto& b : E.blocks)
    if (b.name == "q" || b.name == "j") m.push_back(b.name);
  return m;
}

}  // namespace

SolveResult undrained_split(const DiscreteEnergy& E, const SplitScheme& scheme, const Solution& x0,
                            const Solution* oracle) {
  check_linear(E, "undrained_split");
  if (scheme.block_path) return alternating_minimization(E, {mechanics_names(E), flow_names(E)}, scheme, x0, oracle);

  SpdSolver mech(SparseMatrix(E.Hm + SparseMatrix(E.Chat.transpose() * E.Wbar * E.Chat)));
  std::vector<int> all;
  for (int k = 0; k < E.ncomp; ++k) all.push_back(k);
  FlowStep flow(E, all, 0.0);

  detail::Monitor mon(E, scheme, scheme.kind, detail::View::primal, oracle);
  Solution z = primal_solution(E, x0.x);
  mon.start(z);
  for (int it = 0; it < scheme.max_outer; ++it) {
    VectorXd x = z.x;
    const VectorXd X0 = x.head(E.nX);
    const VectorXd rhs = E.F + E.Chat.transpose() * (E.Wbar * (E.Chat * X0) + flatten(z.p));
    x.head(E.nX) = mech.solve(rhs);
    MatrixXd P = z.p;
    flow.apply(E.Chat * x.head(E.nX), x, P, P);
    Solution next{std::move(x), std::move(P)};
    double alpha = 0;
    if (scheme.line_search == LineSearch::quadratic) alpha = mon.relax(z, next);
    const bool stop = mon.record(z, next, alpha, 0);
    z = std::move(next);
    if (stop) break;
  }
  return {z, mon.finish()};
}

SolveResult fixed_stress_split(const DiscreteEnergy& E, const SplitScheme& scheme, const Solution& x0,
                               const std::vector<std::vector<int>>& groups, const Solution* oracle) {
  check_linear(E, "fixed_stress_split");
  std::vector<int> seen(E.ncomp, 0);
  for (const auto& J : groups) {
    if (J.empty()) throw std::invalid_argument("fixed_stress_split: empty flow group");
    for (int k : J) {
      if (k < 0 || k >= E.ncomp || seen[k]) throw std::invalid_argument("fixed_stress_split: invalid flow groups");
      seen[k] = 1;
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw std::invalid_argument("fixed_stress_split: flow groups must cover every content");
  if (scheme.block_path && scheme.gamma != 1.0)
    throw std::invalid_argument("fixed_stress_split: the block path is defined for gamma = 1");

  SpdSolver mech(E.Hm);
  std::vector<std::unique_ptr<FlowStep>> flows;
  std::vector<std::unique_ptr<BlockFlowStep>> blocks;
  for (const auto& J : groups) {
    if (scheme.block_path)
      blocks.push_back(std::make_unique<BlockFlowStep>(E, J));
    else
      flows.push_back(std::make_unique<FlowStep>(E, J, scheme.gamma));
  }

  // dual-feasible start from the given pressures
  Solution z;
  z.p = x0.p.size() > 0 ? x0.p : E.pressure(x0.x);
  if (z.p.rows() != E.d().nc() || z.p.cols() != E.ncomp) throw DimensionError("fixed_stress_split: pressure size");
  z.x = VectorXd::Zero(E.size());
  z.x.head(E.nX) = mech.solve(E.F + E.Chat.transpose() * flatten(z.p));
  for (int k = 0; k < E.ncomp; ++k) {
    SpdSolver mk(E.Mk[k]);
    z.x.segment(E.q_offset[k], E.nq[k]) = mk.solve(E.g[k] + E.d().div[k].transpose() * VectorXd(z.p.col(k)));
  }

  detail::Monitor mon(E, scheme, scheme.kind, detail::View::dual, oracle);
  mon.start(z);
  for (int it = 0; it < scheme.max_outer; ++it) {
    VectorXd x = z.x;
    MatrixXd P = z.p;
    if (scheme.block_path) {
      const MatrixXd sigma = cell_stresses(E, x.head(E.nX), P);
      for (const auto& b : blocks) b->apply(sigma, x, P);
    } else {
      const VectorXd coupling = E.Chat * x.head(E.nX);
      for (const auto& f : flows) f->apply(coupling, x, P, z.p);
    }
    x.head(E.nX) = mech.solve(E.F + E.Chat.transpose() * flatten(P));
    Solution next{std::move(x), std::move(P)};
    double alpha = 0;
    if (scheme.line_search == LineSearch::quadratic) alpha = mon.relax(z, next);
    const bool stop = mon.record(z, next, alpha, 0);
    z = std::move(next);
    if (stop) break;
  }
  return {z, mon.finish()};
}

}  // namespace poro
