#include "poroflow/solvers.hpp"

#include "detail.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace poro {

double nonlinear_dual_energy(const DiscreteEnergy& E, const VectorXd& x, const MatrixXd& p) {
  const Discretization& d = E.d();
  const MatrixXd eps = E.strains(x);
  const StrainEnergyLaw& W = E.material.law;
  double v = 0;
  for (Index e = 0; e < d.nc(); ++e) {
    const VectorXd s = eps.col(e);
    v += d.vol[e] * (W.stress(s).dot(s) - W.value(s) + E.material.b.B(p(e, 0)) - E.ctilde(e, 0) * p(e, 0));
  }
  const VectorXd q = E.flux(x, 0);
  return v + 0.5 * E.dt * q.dot(E.Mk[0] * q);
}

namespace {

SparseMatrix cell_block_operator(const DiscreteEnergy& E, const std::vector<MatrixXd>& blocks) {
  const Discretization& d = E.d();
  const Index ns = d.ns;
  std::vector<Triplet> t;
  for (Index e = 0; e < d.nc(); ++e)
    for (Index i = 0; i < ns; ++i)
      for (Index j = 0; j < ns; ++j)
        if (blocks[e](i, j) != 0.0) t.emplace_back(e * ns + i, e * ns + j, d.vol[e] * blocks[e](i, j));
  SparseMatrix C(d.nc() * ns, d.nc() * ns);
  C.setFromTriplets(t.begin(), t.end());
  SparseMatrix K = SparseMatrix(d.strain.transpose() * C * d.strain);
  K.makeCompressed();
  return K;
}

struct InnerResult {
  int iterations = 0;
  double residual = 0;
};

class NonlinearSplit {
public:
  NonlinearSplit(const DiscreteEnergy& E, const SplitScheme& s)
      : E_(E), s_(s), d_(E.d()), law_(E.material.law), b_(E.material.b), lscheme_(s.kind == SchemeKind::nl_fixed_stress_lscheme) {
    if (lscheme_) {
      const MatrixXd L = isotropic_stiffness(d_.dim, s.L_mu, s.L_vol);
      L_mech_.compute(cell_block_operator(E, std::vector<MatrixXd>(d_.nc(), L)));
    }
    M_.compute(E.Mk[0]);
  }

  VectorXd coupling(const VectorXd& u) const { return (E_.Chat * u).cwiseQuotient(d_.vol); }

  VectorXd mech_residual(const VectorXd& u, const MatrixXd& p) const {
    const MatrixXd eps = strains(u);
    VectorXd sig(d_.nc() * d_.ns);
    for (Index e = 0; e < d_.nc(); ++e) sig.segment(e * d_.ns, d_.ns) = d_.vol[e] * law_.stress(eps.col(e));
    return d_.strain.transpose() * sig - E_.F - E_.Chat.transpose() * VectorXd(p.col(0));
  }

  double mech_potential(const VectorXd& u, const MatrixXd& p) const {
    const MatrixXd eps = strains(u);
    double v = 0;
    for (Index e = 0; e < d_.nc(); ++e) v += d_.vol[e] * law_.value(eps.col(e));
    return v - E_.F.dot(u) - VectorXd(p.col(0)).dot(E_.Chat * u);
  }

  // natural flow residual b(p) + coupling + dt div q / |e| - theta~, plus stabilization
  VectorXd flow_residual(const VectorXd& c, const VectorXd& q, const VectorXd& p, const VectorXd& L,
                         const VectorXd& p_anchor) const {
    VectorXd r = c + E_.dt * (d_.div[0] * q).cwiseQuotient(d_.vol) - E_.ctilde.col(0);
    for (Index e = 0; e < d_.nc(); ++e) r[e] += b_.b(p[e]) + L[e] * (p[e] - p_anchor[e]);
    return r;
  }

  double vol_norm(const VectorXd& r) const { return std::sqrt(r.cwiseAbs2().dot(d_.vol)); }

  VectorXd darcy_flux(const VectorXd& p) const { return M_.solve(E_.g[0] + d_.div[0].transpose() * p); }

  // Flow subproblem with the mechanics frozen at u_prev and stabilization anchored at p_prev.
  InnerResult flow(const VectorXd& u_prev, VectorXd& q, VectorXd& p, int max_it, double tol) const {
    const Index nc = d_.nc();
    const VectorXd c = coupling(u_prev);
    const MatrixXd eps = strains(u_prev);
    const VectorXd p_anchor = p;
    VectorXd L(nc);
    const double alpha = E_.material.poro.alpha;
    for (Index e = 0; e < nc; ++e)
      L[e] = lscheme_ ? s_.L_FS : alpha * alpha / law_.bulk_modulus(eps.col(e));

    VectorXd R = flow_residual(c, q, p, L, p_anchor);
    const double r0 = vol_norm(R);
    InnerResult res{0, r0};
    if (lscheme_ && !L_flow_ready_) {
      L_flow_.compute(flow_matrix(VectorXd::Constant(nc, s_.L_b + s_.L_FS)));
      L_flow_ready_ = true;
    }
    while (res.iterations < max_it) {
      VectorXd J(nc);
      for (Index e = 0; e < nc; ++e) J[e] = lscheme_ ? s_.L_b + s_.L_FS : b_.b_prime(p[e]) + L[e];
      const VectorXd Rq = E_.Mk[0] * q - E_.g[0] - d_.div[0].transpose() * p;
      const VectorXd rhs = -Rq - d_.div[0].transpose() * R.cwiseQuotient(J);
      VectorXd dq;
      if (lscheme_) {
        dq = L_flow_.solve(rhs);
      } else {
        SpdSolver S(flow_matrix(J));
        dq = S.solve(rhs);
      }
      const VectorXd dp = (-R - E_.dt * (d_.div[0] * dq).cwiseQuotient(d_.vol)).cwiseQuotient(J);
      q += dq;
      p += dp;
      ++res.iterations;
      R = flow_residual(c, q, p, L, p_anchor);
      res.residual = vol_norm(R);
      if (res.residual <= tol * r0 || r0 == 0.0) break;
    }
    return res;
  }

  // Mechanics subproblem with the pressure frozen.
  InnerResult mechanics(VectorXd& u, const MatrixXd& p, int max_it, double tol, bool line_search) const {
    VectorXd R = mech_residual(u, p);
    const double r0 = R.norm();
    InnerResult res{0, r0};
    while (res.iterations < max_it) {
      VectorXd du;
      if (lscheme_) {
        du = -L_mech_.solve(R);
      } else {
        const MatrixXd eps = strains(u);
        std::vector<MatrixXd> H(d_.nc());
        for (Index e = 0; e < d_.nc(); ++e) H[e] = law_.hessian(eps.col(e));
        SpdSolver S(cell_block_operator(E_, H));
        du = -S.solve(R);
      }
      VectorXd half = u + du;
      if (line_search) {
        const double f0 = mech_potential(half, p);
        const double a = line_search_alpha(mech_potential(u, p) - f0, 0.0, mech_potential(half + du, p) - f0);
        if (a != 0.0) {
          VectorXd next = half + a * du;
          if (mech_potential(next, p) <= f0) half = std::move(next);
        }
      }
      u = std::move(half);
      ++res.iterations;
      R = mech_residual(u, p);
      res.residual = R.norm();
      if (res.residual <= tol * r0 || r0 == 0.0) break;
    }
    return res;
  }

  MatrixXd strains(const VectorXd& u) const {
    const VectorXd e = d_.strain * u;
    return Eigen::Map<const MatrixXd>(e.data(), d_.ns, d_.nc());
  }

private:
  SparseMatrix flow_matrix(const VectorXd& J) const {
    VectorXd w = (J.cwiseProduct(d_.vol)).cwiseInverse() * E_.dt;
    SparseMatrix Dw = d_.div[0];
    Dw = w.asDiagonal() * Dw;
    SparseMatrix A = E_.Mk[0] + SparseMatrix(d_.div[0].transpose() * Dw);
    A.makeCompressed();
    return A;
  }

  const DiscreteEnergy& E_;
  const SplitScheme& s_;
  const Discretization& d_;
  const StrainEnergyLaw& law_;
  const Compressibility& b_;
  bool lscheme_;
  SpdSolver L_mech_, M_;
  mutable SpdSolver L_flow_;
  mutable bool L_flow_ready_ = false;
};

}  // namespace

SolveResult nonlinear_fixed_stress(const DiscreteEnergy& E, const SplitScheme& scheme, const Solution& x0,
                                   const Solution* oracle) {
  if (E.family != Family::nonlinear) throw std::invalid_argument("nonlinear_fixed_stress: nonlinear energy required");
  if (scheme.kind != SchemeKind::nl_fixed_stress_newton && scheme.kind != SchemeKind::nl_fixed_stress_lscheme)
    throw std::invalid_argument("nonlinear_fixed_stress: scheme must be a nonlinear fixed-stress kind");
  const bool lscheme = scheme.kind == SchemeKind::nl_fixed_stress_lscheme;
  if (lscheme && !(scheme.L_mu > 0 && 2 * scheme.L_mu + E.d().dim * scheme.L_vol > 0))
    throw std::invalid_argument("nonlinear_fixed_stress: L tensor must be positive definite");

  NonlinearSplit split(E, scheme);
  const int inner_max = scheme.policy == InnerPolicy::N_1 ? 1 : scheme.inner_max;
  const Index nX = E.nX;

  // compatible start: exact mechanics for the given pressure, Darcy flux from it
  Solution z;
  z.p = x0.p.size() > 0 ? x0.p : E.pressure(x0.x);
  VectorXd u = x0.x.head(nX);
  {
    SplitScheme exact = scheme;
    exact.kind = SchemeKind::nl_fixed_stress_newton;
    NonlinearSplit newton(E, exact);
    newton.mechanics(u, z.p, 100, 1e-12, false);
  }
  z.x = VectorXd::Zero(E.size());
  z.x.head(nX) = u;
  z.x.segment(E.q_offset[0], E.nq[0]) = split.darcy_flux(z.p.col(0));

  detail::Monitor mon(E, scheme, scheme.kind, detail::View::dual_nl, oracle);
  mon.start(z);
  const VectorXd zero_L = VectorXd::Zero(E.d().nc());
  for (int it = 0; it < scheme.max_outer; ++it) {
    VectorXd uk = z.x.head(nX);
    VectorXd q = z.x.segment(E.q_offset[0], E.nq[0]);
    VectorXd p = z.p.col(0);
    const InnerResult rf = split.flow(uk, q, p, inner_max, scheme.inner_tol);
    MatrixXd P(p.size(), 1);
    P.col(0) = p;
    const InnerResult rm = split.mechanics(uk, P, inner_max, scheme.inner_tol, scheme.inner_line_search);
    Solution next;
    next.x = VectorXd::Zero(E.size());
    next.x.head(nX) = uk;
    next.x.segment(E.q_offset[0], E.nq[0]) = q;
    next.p = std::move(P);
    double alpha = 0;
    if (scheme.line_search == LineSearch::quadratic) alpha = mon.relax(z, next);
    const VectorXd unx = next.x.head(nX);
    const double ru = split.mech_residual(unx, next.p).norm();
    const double rp = split.vol_norm(split.flow_residual(split.coupling(unx), next.x.segment(E.q_offset[0], E.nq[0]),
                                                         next.p.col(0), zero_L, zero_L));
    const bool stop = mon.record(z, next, alpha, rf.iterations + rm.iterations, ru, rp);
    z = std::move(next);
    if (stop) break;
  }
  IterationReport rep = mon.finish();
  if (rep.outcome == Outcome::diverged && lscheme) {
    std::ostringstream os;
    os << rep.message << " (L_b=" << scheme.L_b << ", L_FS=" << scheme.L_FS << ", L_mu=" << scheme.L_mu
       << ", L_vol=" << scheme.L_vol << ")";
    rep.message = os.str();
  }
  return {z, rep};
}

}  // namespace poro
