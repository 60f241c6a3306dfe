#include "poroflow/linalg.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace poro {

template <typename Scalar>
bool CsrMatrix<Scalar>::valid() const {
  if (nrows < 0 || ncols < 0) return false;
  if (row_offsets.size() != static_cast<size_t>(nrows) + 1) return false;
  if (row_offsets.front() != 0) return false;
  if (static_cast<size_t>(row_offsets.back()) != col_indices.size()) return false;
  if (col_indices.size() != values.size()) return false;
  for (Index i = 0; i < nrows; ++i) {
    if (row_offsets[i + 1] < row_offsets[i]) return false;
    for (Index k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
      if (col_indices[k] < 0 || col_indices[k] >= ncols) return false;
      if (k > row_offsets[i] && col_indices[k] <= col_indices[k - 1]) return false;
    }
  }
  return true;
}

template <typename Scalar>
Scalar CsrMatrix<Scalar>::coeff(Index i, Index j) const {
  auto b = col_indices.begin() + row_offsets[i];
  auto e = col_indices.begin() + row_offsets[i + 1];
  auto it = std::lower_bound(b, e, j);
  if (it == e || *it != j) return Scalar(0);
  return values[it - col_indices.begin()];
}

template <typename Scalar>
DofVector<Scalar>::DofVector(const std::vector<std::pair<std::string, Index>>& layout) {
  Index off = 0;
  for (const auto& [name, n] : layout) {
    if (n <= 0) throw DimensionError("block '" + name + "' has zero length");
    block_map.push_back({name, off, n});
    off += n;
  }
  data = Vector::Zero(off);
}

template <typename Scalar>
bool DofVector<Scalar>::has(const std::string& name) const {
  for (const auto& b : block_map)
    if (b.name == name) return true;
  return false;
}

template <typename Scalar>
const BlockRange& DofVector<Scalar>::range(const std::string& name) const {
  for (const auto& b : block_map)
    if (b.name == name) return b;
  throw DimensionError("no block named '" + name + "'");
}

template <typename Scalar>
bool DofVector<Scalar>::valid() const {
  Index off = 0;
  for (const auto& b : block_map) {
    if (b.size <= 0 || b.offset != off) return false;
    off += b.size;
  }
  return off == data.size();
}

template <typename Scalar>
CsrMatrix<Scalar> csr_from_triplets(Index nrows, Index ncols,
                                    const std::vector<Eigen::Triplet<Scalar, Index>>& t) {
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor, Index> A(nrows, ncols);
  A.setFromTriplets(t.begin(), t.end());
  return to_csr(A);
}

template <typename Scalar>
Eigen::SparseMatrix<Scalar, Eigen::ColMajor, Index> to_eigen(const CsrMatrix<Scalar>& A) {
  Eigen::Map<const Eigen::SparseMatrix<Scalar, Eigen::RowMajor, Index>> m(
      A.nrows, A.ncols, A.nnz(), A.row_offsets.data(), A.col_indices.data(), A.values.data());
  return Eigen::SparseMatrix<Scalar, Eigen::ColMajor, Index>(m);
}

template <typename Scalar, int Options>
CsrMatrix<Scalar> to_csr(const Eigen::SparseMatrix<Scalar, Options, Index>& A) {
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor, Index> R(A);
  R.makeCompressed();
  CsrMatrix<Scalar> C;
  C.nrows = static_cast<Index>(R.rows());
  C.ncols = static_cast<Index>(R.cols());
  C.row_offsets.assign(R.outerIndexPtr(), R.outerIndexPtr() + R.rows() + 1);
  C.col_indices.assign(R.innerIndexPtr(), R.innerIndexPtr() + R.nonZeros());
  C.values.assign(R.valuePtr(), R.valuePtr() + R.nonZeros());
  return C;
}

template <typename Scalar>
DofVector<Scalar> spmv(const CsrMatrix<Scalar>& A, const DofVector<Scalar>& x) {
  if (A.ncols != x.size())
    throw DimensionError("spmv: matrix has " + std::to_string(A.ncols) + " columns, vector " +
                         std::to_string(x.size()));
  typename DofVector<Scalar>::Vector y(A.nrows);
  for (Index i = 0; i < A.nrows; ++i) {
    Scalar s(0);
    for (Index k = A.row_offsets[i]; k < A.row_offsets[i + 1]; ++k)
      s += A.values[k] * x.data[A.col_indices[k]];
    y[i] = s;
  }
  DofVector<Scalar> out(std::move(y));
  if (A.nrows == A.ncols) out.block_map = x.block_map;
  return out;
}

template <typename Scalar>
Scalar quad_form(const CsrMatrix<Scalar>& A, const DofVector<Scalar>& x) {
  if (A.nrows != A.ncols || A.ncols != x.size())
    throw DimensionError("quad_form: dimension mismatch");
  return x.data.dot(spmv(A, x).data);
}

double asymmetry(const SparseMatrix& A) {
  if (A.rows() != A.cols()) return INFINITY;
  SparseMatrix T = A.transpose();
  SparseMatrix Dm = A - T;
  double amax = 0, dmax = 0;
  for (Index k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) amax = std::max(amax, std::abs(it.value()));
  for (Index k = 0; k < Dm.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(Dm, k); it; ++it) dmax = std::max(dmax, std::abs(it.value()));
  return amax > 0 ? dmax / amax : dmax;
}

double asymmetry(const Csr& A) { return asymmetry(to_eigen(A)); }

struct SpdSolver::Impl {
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<Index>> llt;
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
};

SpdSolver::SpdSolver() : impl_(std::make_unique<Impl>()) {}
SpdSolver::SpdSolver(const SparseMatrix& A, SolveOptions opt) : SpdSolver() { compute(A, opt); }
SpdSolver::~SpdSolver() = default;
SpdSolver::SpdSolver(SpdSolver&&) noexcept = default;
SpdSolver& SpdSolver::operator=(SpdSolver&&) noexcept = default;

void SpdSolver::compute(const SparseMatrix& A, SolveOptions opt) {
  if (A.rows() != A.cols()) throw DimensionError("solve_spd: matrix not square");
#ifndef NDEBUG
  if (asymmetry(A) > 1e-12) throw NotSpdError("solve_spd: matrix not symmetric");
#endif
  A_ = A;
  opt_ = opt;
  n_ = static_cast<Index>(A.rows());
  direct_ = opt.method == SolveMethod::direct ||
            (opt.method == SolveMethod::automatic && n_ <= opt.direct_limit);
  if (n_ == 0) return;
  if (direct_) {
    impl_->llt.compute(A_);
    if (impl_->llt.info() != Eigen::Success)
      throw NotSpdError("solve_spd: non-positive pivot in Cholesky factorization");
  } else {
    impl_->cg.setTolerance(opt.tol / 10);
    impl_->cg.setMaxIterations(opt.max_iterations > 0 ? opt.max_iterations : 10 * n_);
    impl_->cg.compute(A_);
  }
}

VectorXd SpdSolver::solve(const VectorXd& b) const {
  if (b.size() != n_) throw DimensionError("solve_spd: right-hand side size mismatch");
  if (n_ == 0) return VectorXd();
  const double bn = b.norm();
  if (bn == 0) return VectorXd::Zero(n_);
  if (direct_) {
    VectorXd x = impl_->llt.solve(b);
    // iterative refinement
    for (int it = 0; it < 2; ++it) {
      VectorXd r = b - A_ * x;
      if (r.norm() <= 1e-13 * bn) break;
      x += impl_->llt.solve(r);
    }
    return x;
  }
  VectorXd x = impl_->cg.solve(b);
  if (impl_->cg.info() != Eigen::Success || (b - A_ * x).norm() > opt_.tol * bn)
    throw NoConvergenceError("solve_spd: CG did not converge in " +
                             std::to_string(impl_->cg.iterations()) + " iterations");
  return x;
}

template <typename Scalar>
DofVector<Scalar> solve_spd(const CsrMatrix<Scalar>& A, const DofVector<Scalar>& b, Scalar tol,
                            SolveOptions opt) {
  if (!(tol > 0)) throw std::invalid_argument("solve_spd: tol must be positive");
  if (A.nrows != A.ncols || A.ncols != b.size()) throw DimensionError("solve_spd: dimension mismatch");
  SparseMatrix Ad = to_eigen(A).template cast<double>();
  opt.tol = static_cast<double>(tol);
  SpdSolver s(Ad, opt);
  VectorXd x = s.solve(b.data.template cast<double>());
  DofVector<Scalar> out(x.cast<Scalar>().eval());
  out.block_map = b.block_map;
  return out;
}

void write_matrix_market(std::ostream& os, const Csr& A) {
  Index nnz = 0;
  for (Index i = 0; i < A.nrows; ++i)
    for (Index k = A.row_offsets[i]; k < A.row_offsets[i + 1]; ++k)
      if (A.col_indices[k] <= i) ++nnz;
  os << "%%MatrixMarket matrix coordinate real symmetric\n";
  os << A.nrows << ' ' << A.ncols << ' ' << nnz << '\n';
  os << std::setprecision(17);
  for (Index i = 0; i < A.nrows; ++i)
    for (Index k = A.row_offsets[i]; k < A.row_offsets[i + 1]; ++k)
      if (A.col_indices[k] <= i) os << i + 1 << ' ' << A.col_indices[k] + 1 << ' ' << A.values[k] << '\n';
}

void write_matrix_market(const std::string& path, const Csr& A) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  write_matrix_market(f, A);
}

SparseMatrix submatrix(const SparseMatrix& A, const std::vector<Index>& rows,
                       const std::vector<Index>& cols) {
  std::vector<Index> rmap(A.rows(), -1), cmap(A.cols(), -1);
  for (size_t i = 0; i < rows.size(); ++i) rmap[rows[i]] = static_cast<Index>(i);
  for (size_t j = 0; j < cols.size(); ++j) cmap[cols[j]] = static_cast<Index>(j);
  std::vector<Triplet> t;
  t.reserve(A.nonZeros());
  for (Index k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
      Index r = rmap[it.row()], c = cmap[it.col()];
      if (r >= 0 && c >= 0) t.emplace_back(r, c, it.value());
    }
  SparseMatrix S(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  S.setFromTriplets(t.begin(), t.end());
  return S;
}

VectorXd gather(const VectorXd& x, const std::vector<Index>& idx) {
  VectorXd v(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) v[i] = x[idx[i]];
  return v;
}

void scatter(VectorXd& x, const std::vector<Index>& idx, const VectorXd& v) {
  for (size_t i = 0; i < idx.size(); ++i) x[idx[i]] = v[i];
}

#define PORO_INSTANTIATE(S)                                                                        \
  template struct CsrMatrix<S>;                                                                    \
  template struct DofVector<S>;                                                                    \
  template CsrMatrix<S> csr_from_triplets(Index, Index, const std::vector<Eigen::Triplet<S, Index>>&); \
  template Eigen::SparseMatrix<S, Eigen::ColMajor, Index> to_eigen(const CsrMatrix<S>&);         \
  template CsrMatrix<S> to_csr(const Eigen::SparseMatrix<S, Eigen::ColMajor, Index>&);            \
  template CsrMatrix<S> to_csr(const Eigen::SparseMatrix<S, Eigen::RowMajor, Index>&);            \
  template DofVector<S> spmv(const CsrMatrix<S>&, const DofVector<S>&);                           \
  template S quad_form(const CsrMatrix<S>&, const DofVector<S>&);                                 \
  template DofVector<S> solve_spd(const CsrMatrix<S>&, const DofVector<S>&, S, SolveOptions);

PORO_INSTANTIATE(double)
PORO_INSTANTIATE(float)

}  // namespace poro
