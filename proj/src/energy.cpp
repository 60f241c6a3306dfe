#include "poroflow/energy.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace poro {

std::string to_string(Family f) {
  switch (f) {
    case Family::poro: return "poro";
    case Family::visco: return "visco";
    case Family::thermo: return "thermo";
    case Family::nonlinear: return "nonlinear";
    case Family::toy: return "toy_am";
  }
  return "?";
}

namespace {

std::vector<Index> iota(Index n) {
  std::vector<Index> v(n);
  for (Index i = 0; i < n; ++i) v[i] = i;
  return v;
}

SparseMatrix sparse_from(Index r, Index c, const std::vector<Triplet>& t) {
  SparseMatrix A(r, c);
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();
  return A;
}

SparseMatrix block_diagonal(const std::vector<const SparseMatrix*>& parts) {
  Index n = 0;
  for (auto* p : parts) n += static_cast<Index>(p->rows());
  std::vector<Triplet> t;
  Index off = 0;
  for (auto* p : parts) {
    for (Index k = 0; k < p->outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(*p, k); it; ++it) t.emplace_back(off + it.row(), off + it.col(), it.value());
    off += static_cast<Index>(p->rows());
  }
  return sparse_from(n, n, t);
}

}  // namespace

std::shared_ptr<const Discretization> make_discretization(Mesh mesh) {
  auto d = std::make_shared<Discretization>();
  d->mesh = std::make_shared<const Mesh>(std::move(mesh));
  const Mesh& m = *d->mesh;
  d->dim = m.dim;
  d->ns = strain_size(m.dim);
  d->u_space = make_space(m, SpaceKind::vectorP1, static_cast<unsigned>(Field::displacement));
  d->q_space = make_space(m, SpaceKind::RT0);
  d->p_space = make_space(m, SpaceKind::P0);
  d->u_free = d->u_space.free_dofs();
  const Field essential[2] = {Field::flux, Field::entropy_flux};
  for (int k = 0; k < 2; ++k)
    for (Index f = 0; f < m.n_facets(); ++f)
      if (!(m.facets[f].boundary() && m.facets[f].has(essential[k]))) d->flux_free[k].push_back(f);

  const std::vector<Index> cells = iota(m.n_cells());
  d->strain = submatrix(assemble_strain_operator(d->u_space), iota(m.n_cells() * d->ns), d->u_free);
  SparseMatrix D = assemble_mixed_div(d->p_space, d->q_space);
  SparseMatrix M = assemble_rt0_mass(d->q_space, 1.0);
  for (int k = 0; k < 2; ++k) {
    d->div[k] = submatrix(D, cells, d->flux_free[k]);
    d->rt0_mass[k] = submatrix(M, d->flux_free[k], d->flux_free[k]);
  }
  d->u_mass = submatrix(assemble_mass(d->u_space), d->u_free, d->u_free);
  d->vol = m.volumes;
  Vec3 down = Vec3::Zero();
  down[m.dim - 1] = -1.0;
  d->unit_load = gather(traction_load(d->u_space, down), d->u_free);
  d->heat_patch = VectorXd::Zero(d->nflux(1));
  for (Index i = 0; i < d->nflux(1); ++i) {
    const Facet& f = m.facets[d->flux_free[1][i]];
    if (f.boundary() && f.load && f.has(Field::temperature)) d->heat_patch[i] = -1.0;
  }
  return d;
}

void MaterialSpec::validate(int dim) const {
  poro.validate();
  if (family == Family::visco) visco.validate();
  if (family == Family::thermo) thermo.validate(poro.M);
  if (family == Family::nonlinear) {
    StrainEnergyLaw w = law;
    w.dim = dim;
    w.validate();
  }
}

StepData StepData::zero(const Discretization& d, const MaterialSpec& m, double dt) {
  StepData s;
  s.dt = dt;
  s.content_prev = MatrixXd::Zero(d.nc(), m.n_contents());
  if (m.family == Family::visco) s.eps_v_prev = MatrixXd::Zero(d.ns, d.nc());
  return s;
}

namespace {

DiscreteEnergy skeleton(std::shared_ptr<const Discretization> d, Family fam, Index ncomp, Index nX,
                        const StepData& s) {
  if (!(s.dt > 0)) throw std::invalid_argument("time step must be positive");
  DiscreteEnergy E;
  E.family = fam;
  E.disc = d;
  E.dt = s.dt;
  E.ncomp = ncomp;
  E.nX = nX;
  E.nq[0] = d->nflux(0);
  E.nq[1] = ncomp > 1 ? d->nflux(1) : 0;
  E.q_offset[0] = nX;
  E.q_offset[1] = nX + E.nq[0];
  if (s.content_prev.rows() != d->nc() || s.content_prev.cols() != ncomp)
    throw DimensionError("step data: content array does not match the mesh");
  E.ctilde = s.content_prev;
  if (s.source.size() > 0) E.ctilde += s.dt * s.source;
  for (Index k = 0; k < ncomp; ++k) E.g[k] = VectorXd::Zero(E.nq[k]);
  return E;
}

// Assembles Hm, Chat, G, H, b, c0 from the cell data.
void assemble_quadratic(DiscreteEnergy& E) {
  const Discretization& d = *E.disc;
  const Index nc = d.nc(), nxi = E.nxi, ncomp = E.ncomp;
  std::vector<Triplet> tc, ta;
  for (Index e = 0; e < nc; ++e) {
    const double v = d.vol[e];
    for (Index i = 0; i < nxi; ++i) {
      for (Index j = 0; j < nxi; ++j)
        if (E.Cloc(i, j) != 0.0) tc.emplace_back(e * nxi + i, e * nxi + j, v * E.Cloc(i, j));
      for (Index k = 0; k < ncomp; ++k)
        if (E.Aloc(i, k) != 0.0) ta.emplace_back(k * nc + e, e * nxi + i, v * E.Aloc(i, k));
    }
  }
  SparseMatrix Cbig = sparse_from(nc * nxi, nc * nxi, tc);
  SparseMatrix Abig = sparse_from(ncomp * nc, nc * nxi, ta);
  E.Hm = SparseMatrix(E.Sxi.transpose() * Cbig * E.Sxi);
  E.Chat = SparseMatrix(Abig * E.Sxi);
  E.Hm.prune(0.0);
  E.Chat.prune(0.0);

  std::vector<Triplet> tg;
  for (Index k = 0; k < E.Chat.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(E.Chat, k); it; ++it) tg.emplace_back(it.row(), it.col(), it.value());
  for (Index k = 0; k < ncomp; ++k) {
    E.Mk[k] = E.kinv[k] * d.rt0_mass[k];
    const SparseMatrix& D = d.div[k];
    for (Index c = 0; c < D.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(D, c); it; ++it)
        tg.emplace_back(k * nc + it.row(), E.q_offset[k] + it.col(), E.dt * it.value());
  }
  E.G = sparse_from(ncomp * nc, E.size(), tg);

  E.Winv.setZero();
  E.Winv.topLeftCorner(ncomp, ncomp) = E.W.topLeftCorner(ncomp, ncomp).inverse();
  MatrixXd CinvA = E.Cloc.ldlt().solve(E.Aloc);
  E.Sloc.setZero();
  E.Sloc.topLeftCorner(ncomp, ncomp) = E.Aloc.transpose() * CinvA;

  std::vector<Triplet> tw;
  for (Index e = 0; e < nc; ++e)
    for (Index k = 0; k < ncomp; ++k)
      for (Index l = 0; l < ncomp; ++l)
        if (E.W(k, l) != 0.0) tw.emplace_back(k * nc + e, l * nc + e, E.W(k, l) / d.vol[e]);
  E.Wbar = sparse_from(ncomp * nc, ncomp * nc, tw);

  if (!E.is_quadratic) return;
  std::vector<const SparseMatrix*> parts{&E.Hm};
  SparseMatrix dtM[2];
  for (Index k = 0; k < ncomp; ++k) {
    dtM[k] = E.dt * E.Mk[k];
    parts.push_back(&dtM[k]);
  }
  E.H = SparseMatrix(block_diagonal(parts) + SparseMatrix(E.G.transpose() * E.Wbar * E.G));
  E.H.makeCompressed();

  VectorXd z(ncomp * nc);
  for (Index k = 0; k < ncomp; ++k) z.segment(k * nc, nc) = d.vol.cwiseProduct(E.ctilde.col(k));
  E.b = VectorXd::Zero(E.size());
  E.b.head(E.nX) = E.F;
  for (Index k = 0; k < ncomp; ++k) E.b.segment(E.q_offset[k], E.nq[k]) = E.dt * E.g[k];
  E.b += E.G.transpose() * (E.Wbar * z);
  double c0 = 0;
  Eigen::MatrixXd Wc = E.W.topLeftCorner(ncomp, ncomp);
  for (Index e = 0; e < nc; ++e) {
    VectorXd c = E.ctilde.row(e).transpose();
    c0 += 0.5 * d.vol[e] * c.dot(Wc * c);
  }
  E.c0 += c0;
}

std::vector<BlockRange> mech_flow_blocks(const DiscreteEnergy& E, Index nu, bool visco) {
  std::vector<BlockRange> b;
  b.push_back({"u", 0, nu});
  if (visco) b.push_back({"eps_v", nu, E.nX - nu});
  b.push_back({"q", E.q_offset[0], E.nq[0]});
  if (E.ncomp > 1) b.push_back({"j", E.q_offset[1], E.nq[1]});
  return b;
}

}  // namespace

DiscreteEnergy build_poro_energy(std::shared_ptr<const Discretization> d, const PoroParams& p, const StepData& s) {
  p.validate();
  DiscreteEnergy E = skeleton(d, Family::poro, 1, d->nu(), s);
  E.material.family = Family::poro;
  E.material.poro = p;
  Lame l = p.lame(d->dim);
  E.nxi = d->ns;
  E.Cloc = isotropic_stiffness(d->dim, l.mu, l.lambda);
  E.Aloc = p.alpha * trace_vector(d->dim);
  E.W(0, 0) = p.M;
  E.kinv[0] = 1 / p.kappa;
  E.Sxi = d->strain;
  E.F = s.traction * d->unit_load;
  E.blocks = mech_flow_blocks(E, d->nu(), false);
  assemble_quadratic(E);
  return E;
}

DiscreteEnergy build_visco_energy(std::shared_ptr<const Discretization> d, const PoroParams& p,
                                  const ViscoParams& v, const StepData& s) {
  p.validate();
  v.validate();
  const Index nc = d->nc(), ns = d->ns, nu = d->nu();
  DiscreteEnergy E = skeleton(d, Family::visco, 1, nu + nc * ns, s);
  E.material.family = Family::visco;
  E.material.poro = p;
  E.material.visco = v;
  Lame l = p.lame(d->dim), lv = v.lame(d->dim);
  MatrixXd C = isotropic_stiffness(d->dim, l.mu, l.lambda);
  MatrixXd Cv = isotropic_stiffness(d->dim, lv.mu, lv.lambda);
  MatrixXd Cvp = 2 * v.mu_v_prime * MatrixXd::Identity(ns, ns) +
                 v.lambda_v_prime * trace_vector(d->dim) * trace_vector(d->dim).transpose();
  E.nxi = 2 * ns;
  E.Cloc.resize(2 * ns, 2 * ns);
  E.Cloc << C, -C, -C, C + Cv + Cvp / s.dt;
  E.Aloc.resize(2 * ns, 1);
  E.Aloc << p.alpha * trace_vector(d->dim), (v.alpha_v - p.alpha) * trace_vector(d->dim);
  E.W(0, 0) = p.M;
  E.kinv[0] = 1 / p.kappa;

  std::vector<Triplet> t;
  for (Index k = 0; k < d->strain.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(d->strain, k); it; ++it) {
      const Index e = it.row() / ns, i = it.row() % ns;
      t.emplace_back(e * 2 * ns + i, it.col(), it.value());
    }
  for (Index e = 0; e < nc; ++e)
    for (Index i = 0; i < ns; ++i) t.emplace_back(e * 2 * ns + ns + i, nu + e * ns + i, 1.0);
  E.Sxi = sparse_from(nc * 2 * ns, E.nX, t);

  E.F = VectorXd::Zero(E.nX);
  E.F.head(nu) = s.traction * d->unit_load;
  if (s.eps_v_prev.size() > 0) {
    if (s.eps_v_prev.rows() != ns || s.eps_v_prev.cols() != nc) throw DimensionError("eps_v history size");
    for (Index e = 0; e < nc; ++e) {
      VectorXd h = Cvp / s.dt * s.eps_v_prev.col(e);
      E.F.segment(nu + e * ns, ns) = d->vol[e] * h;
      E.c0 += 0.5 * d->vol[e] * s.eps_v_prev.col(e).dot(h);
    }
  }
  E.blocks = mech_flow_blocks(E, nu, true);
  assemble_quadratic(E);
  return E;
}

DiscreteEnergy build_thermo_energy(std::shared_ptr<const Discretization> d, const PoroParams& p,
                                   const ThermoParams& th, const StepData& s, double T_patch) {
  p.validate();
  th.validate(p.M);
  DiscreteEnergy E = skeleton(d, Family::thermo, 2, d->nu(), s);
  E.material.family = Family::thermo;
  E.material.poro = p;
  E.material.thermo = th;
  E.material.T_patch = T_patch;
  Lame l = p.lame(d->dim);
  const VectorXd m = trace_vector(d->dim);
  E.nxi = d->ns;
  E.Cloc = isotropic_stiffness(d->dim, l.mu, l.lambda);
  E.Aloc.resize(d->ns, 2);
  E.Aloc << p.alpha * m, 3 * th.alpha_T * l.K_dr * m;
  E.W = th.MT(p.M);
  E.kinv[0] = 1 / p.kappa;
  E.kinv[1] = th.T0 / th.kappa_F;
  E.Sxi = d->strain;
  E.F = s.traction * d->unit_load;
  E.g[1] = T_patch * d->heat_patch;
  E.blocks = mech_flow_blocks(E, d->nu(), false);
  assemble_quadratic(E);
  return E;
}

DiscreteEnergy build_nonlinear_energy(std::shared_ptr<const Discretization> d, const StrainEnergyLaw& law,
                                      const Compressibility& b, const PoroParams& p, const StepData& s) {
  p.validate();
  law.validate();
  if (law.dim != d->dim) throw std::invalid_argument("strain energy law dimension does not match the mesh");
  DiscreteEnergy E = skeleton(d, Family::nonlinear, 1, d->nu(), s);
  E.material.family = Family::nonlinear;
  E.material.poro = p;
  E.material.law = law;
  E.material.b = b;
  E.is_quadratic = false;
  E.nxi = d->ns;
  E.Cloc = law.hessian(VectorXd::Zero(d->ns));
  E.Aloc = p.alpha * trace_vector(d->dim);
  E.W(0, 0) = 1 / b.b_prime(0);
  E.kinv[0] = 1 / p.kappa;
  E.Sxi = d->strain;
  E.F = s.traction * d->unit_load;
  E.blocks = mech_flow_blocks(E, d->nu(), false);
  assemble_quadratic(E);
  return E;
}

DiscreteEnergy build_energy(std::shared_ptr<const Discretization> d, const MaterialSpec& m, const StepData& s) {
  switch (m.family) {
    case Family::poro: return build_poro_energy(d, m.poro, s);
    case Family::visco: return build_visco_energy(d, m.poro, m.visco, s);
    case Family::thermo: return build_thermo_energy(d, m.poro, m.thermo, s, m.T_patch);
    case Family::nonlinear: {
      StrainEnergyLaw w = m.law;
      w.dim = d->dim;
      return build_nonlinear_energy(d, w, m.b, m.poro, s);
    }
    case Family::toy: break;
  }
  throw std::invalid_argument("build_energy: unsupported family");
}

DiscreteEnergy build_toy_energy(double rho) {
  if (!(std::abs(rho) < 1)) throw std::invalid_argument("toy energy needs |rho| < 1");
  DiscreteEnergy E;
  E.family = Family::toy;
  E.nX = 2;
  E.ncomp = 0;
  E.blocks = {{"x", 0, 1}, {"y", 1, 1}};
  std::vector<Triplet> t{{0, 0, 1.0}, {1, 1, 1.0}, {0, 1, rho}, {1, 0, rho}};
  E.H = sparse_from(2, 2, t);
  E.b = VectorXd::Zero(2);
  return E;
}

MatrixXd DiscreteEnergy::content_residual(const VectorXd& x) const {
  const Index nc = d().nc();
  VectorXd Gx = G * x;
  MatrixXd r(nc, ncomp);
  for (Index k = 0; k < ncomp; ++k)
    r.col(k) = ctilde.col(k) - Gx.segment(k * nc, nc).cwiseQuotient(d().vol);
  return r;
}

MatrixXd DiscreteEnergy::pressure(const VectorXd& x) const {
  MatrixXd r = content_residual(x);
  if (family == Family::nonlinear) {
    for (Index e = 0; e < r.rows(); ++e) r(e, 0) = material.b.b_inverse(r(e, 0));
    return r;
  }
  return r * W.topLeftCorner(ncomp, ncomp).transpose();
}

MatrixXd DiscreteEnergy::contents(const VectorXd& x) const {
  const Index nc = d().nc();
  MatrixXd c = ctilde;
  for (Index k = 0; k < ncomp; ++k)
    c.col(k) -= dt * (d().div[k] * flux(x, k)).cwiseQuotient(d().vol);
  (void)nc;
  return c;
}

MatrixXd DiscreteEnergy::strains(const VectorXd& x) const {
  VectorXd e = d().strain * x.head(d().nu());
  return Eigen::Map<const MatrixXd>(e.data(), d().ns, d().nc());
}

double DiscreteEnergy::eval(const VectorXd& x) const {
  if (x.size() != size()) throw DimensionError("energy: state size mismatch");
  if (is_quadratic) return 0.5 * x.dot(H * x) - b.dot(x) + c0;
  const Discretization& dd = d();
  const MatrixXd eps = strains(x);
  double v = 0;
  for (Index e = 0; e < dd.nc(); ++e) v += dd.vol[e] * material.law.value(eps.col(e));
  v -= F.dot(x.head(nX));
  const VectorXd q = flux(x, 0);
  v += 0.5 * dt * q.dot(Mk[0] * q) - dt * g[0].dot(q);
  const MatrixXd r = content_residual(x);
  for (Index e = 0; e < dd.nc(); ++e) v += dd.vol[e] * material.b.B_conjugate(r(e, 0));
  return v;
}

VectorXd DiscreteEnergy::grad(const VectorXd& x) const {
  if (x.size() != size()) throw DimensionError("energy: state size mismatch");
  if (is_quadratic) return H * x - b;
  const Discretization& dd = d();
  const MatrixXd eps = strains(x);
  VectorXd sig(dd.nc() * dd.ns);
  for (Index e = 0; e < dd.nc(); ++e) sig.segment(e * dd.ns, dd.ns) = dd.vol[e] * material.law.stress(eps.col(e));
  VectorXd gr = VectorXd::Zero(size());
  gr.head(nX) = dd.strain.transpose() * sig - F;
  const VectorXd q = flux(x, 0);
  gr.segment(q_offset[0], nq[0]) = dt * (Mk[0] * q - g[0]);
  const MatrixXd p = pressure(x);
  gr -= G.transpose() * VectorXd(p.col(0));
  return gr;
}

SparseMatrix DiscreteEnergy::hessian(const VectorXd& x) const {
  if (is_quadratic) return H;
  const Discretization& dd = d();
  const Index nc = dd.nc(), ns = dd.ns;
  const MatrixXd eps = strains(x);
  std::vector<Triplet> t;
  for (Index e = 0; e < nc; ++e) {
    MatrixXd He = dd.vol[e] * material.law.hessian(eps.col(e));
    for (Index i = 0; i < ns; ++i)
      for (Index j = 0; j < ns; ++j)
        if (He(i, j) != 0.0) t.emplace_back(e * ns + i, e * ns + j, He(i, j));
  }
  SparseMatrix Cb = sparse_from(nc * ns, nc * ns, t);
  SparseMatrix Hm_x = SparseMatrix(dd.strain.transpose() * Cb * dd.strain);
  SparseMatrix dtM = dt * Mk[0];
  SparseMatrix Hx = block_diagonal({&Hm_x, &dtM});
  const MatrixXd p = pressure(x);
  std::vector<Triplet> tw;
  for (Index e = 0; e < nc; ++e) tw.emplace_back(e, e, 1.0 / (dd.vol[e] * material.b.b_prime(p(e, 0))));
  SparseMatrix Wx = sparse_from(nc, nc, tw);
  SparseMatrix out = Hx + SparseMatrix(G.transpose() * Wx * G);
  out.makeCompressed();
  return out;
}

double DiscreteEnergy::difference(const VectorXd& a, const VectorXd& bb) const {
  if (!is_quadratic) return eval(a) - eval(bb);
  const VectorXd d = a - bb;
  return d.dot(0.5 * (H * (a + bb)) - b);
}

double energy_norm(const DiscreteEnergy& E, const VectorXd& x, const VectorXd* at) {
  SparseMatrix H = E.is_quadratic ? E.H : E.hessian(at ? *at : VectorXd(VectorXd::Zero(E.size())));
  const double q = x.dot(H * x);
  if (q < -1e-12 * std::max(1.0, x.squaredNorm() * H.norm())) throw NotSpdError("energy_norm: Hessian not PSD");
  return std::sqrt(std::max(0.5 * q, 0.0));
}

namespace {

double dual_quadratic(const DiscreteEnergy& E, const VectorXd& x, const MatrixXd& p, const VectorXd& y,
                      const MatrixXd& q) {
  const Discretization& d = E.d();
  const Index nc = d.nc();
  const VectorXd X = x.head(E.nX), Y = y.head(E.nX);
  double v = X.dot(E.Hm * Y);
  const Eigen::MatrixXd Wi = E.Winv.topLeftCorner(E.ncomp, E.ncomp);
  for (Index e = 0; e < nc; ++e) v += d.vol[e] * p.row(e).dot(Wi * q.row(e).transpose());
  for (Index k = 0; k < E.ncomp; ++k) v += E.dt * E.flux(x, k).dot(E.Mk[k] * E.flux(y, k));
  return v;
}

double dual_linear(const DiscreteEnergy& E, const MatrixXd& p) {
  double v = 0;
  for (Index k = 0; k < E.ncomp; ++k) v += p.col(k).dot(E.d().vol.cwiseProduct(E.ctilde.col(k)));
  return v;
}

}  // namespace

double dual_energy(const DiscreteEnergy& E, const VectorXd& x, const MatrixXd& p) {
  return 0.5 * dual_quadratic(E, x, p, x, p) - dual_linear(E, p);
}

double dual_gap(const DiscreteEnergy& E, const VectorXd& x, const MatrixXd& p, const VectorXd& xs,
                const MatrixXd& ps) {
  const VectorXd dx = x - xs;
  const MatrixXd dp = p - ps;
  return 0.5 * dual_quadratic(E, dx, dp, dx, dp);
}

double dual_difference(const DiscreteEnergy& E, const VectorXd& xa, const MatrixXd& pa, const VectorXd& xb,
                       const MatrixXd& pb) {
  const VectorXd dx = xa - xb, sx = xa + xb;
  const MatrixXd dp = pa - pb, sp = pa + pb;
  return 0.5 * dual_quadratic(E, dx, dp, sx, sp) - dual_linear(E, dp);
}

BlockNorms l2_norms(const DiscreteEnergy& E, const VectorXd& x, const MatrixXd& p) {
  BlockNorms n;
  if (E.family == Family::toy) {
    n.names = {"x", "y"};
    n.values = {std::abs(x[0]), std::abs(x[1])};
    return n;
  }
  const Discretization& d = E.d();
  const VectorXd u = x.head(d.nu());
  n.names.push_back("u");
  n.values.push_back(std::sqrt(std::max(0.0, u.dot(d.u_mass * u))));
  if (E.family == Family::visco) {
    double s = 0;
    for (Index e = 0; e < d.nc(); ++e) s += d.vol[e] * x.segment(d.nu() + e * d.ns, d.ns).squaredNorm();
    n.names.push_back("eps_v");
    n.values.push_back(std::sqrt(s));
  }
  const char* qn[2] = {"q", "j"};
  const char* pn[2] = {"p", "T"};
  for (Index k = 0; k < E.ncomp; ++k) {
    const VectorXd q = E.flux(x, k);
    n.names.push_back(qn[k]);
    n.values.push_back(std::sqrt(std::max(0.0, q.dot(d.rt0_mass[k] * q))));
  }
  for (Index k = 0; k < E.ncomp; ++k) {
    n.names.push_back(pn[k]);
    n.values.push_back(std::sqrt(p.col(k).cwiseAbs2().dot(d.vol)));
  }
  return n;
}

VectorXd full_displacement(const DiscreteEnergy& E, const VectorXd& x) {
  VectorXd u = VectorXd::Zero(E.d().u_space.dof_count);
  scatter(u, E.d().u_free, x.head(E.d().nu()));
  return u;
}

}  // namespace poro
