#pragma once

#include <Eigen/Core>
#include <Eigen/Sparse>

#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace poro {

using Index = int;
using VectorXd = Eigen::VectorXd;
using MatrixXd = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, Index>;
using Triplet = Eigen::Triplet<double, Index>;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NotSpdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Compressed sparse row storage.
template <typename Scalar>
struct CsrMatrix {
  Index nrows = 0;
  Index ncols = 0;
  std::vector<Index> row_offsets{0};
  std::vector<Index> col_indices;
  std::vector<Scalar> values;

  Index nnz() const { return static_cast<Index>(values.size()); }
  bool valid() const;
  Scalar coeff(Index i, Index j) const;
};

struct BlockRange {
  std::string name;
  Index offset = 0;
  Index size = 0;
};

// Coefficient vector partitioned into named contiguous blocks.
template <typename Scalar>
struct DofVector {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector data;
  std::vector<BlockRange> block_map;

  DofVector() = default;
  explicit DofVector(Vector v) : data(std::move(v)) {
    if (data.size() > 0) block_map.push_back({"x", 0, static_cast<Index>(data.size())});
  }
  DofVector(const std::vector<std::pair<std::string, Index>>& layout);

  Index size() const { return static_cast<Index>(data.size()); }
  bool has(const std::string& name) const;
  const BlockRange& range(const std::string& name) const;
  auto block(const std::string& name) {
    const BlockRange& r = range(name);
    return data.segment(r.offset, r.size);
  }
  auto block(const std::string& name) const {
    const BlockRange& r = range(name);
    return data.segment(r.offset, r.size);
  }
  bool valid() const;
};

using Csr = CsrMatrix<double>;
using Dofs = DofVector<double>;

template <typename Scalar>
CsrMatrix<Scalar> csr_from_triplets(Index nrows, Index ncols,
                                    const std::vector<Eigen::Triplet<Scalar, Index>>& t);
template <typename Scalar>
Eigen::SparseMatrix<Scalar, Eigen::ColMajor, Index> to_eigen(const CsrMatrix<Scalar>& A);
template <typename Scalar, int Options>
CsrMatrix<Scalar> to_csr(const Eigen::SparseMatrix<Scalar, Options, Index>& A);

template <typename Scalar>
DofVector<Scalar> spmv(const CsrMatrix<Scalar>& A, const DofVector<Scalar>& x);
template <typename Scalar>
Scalar quad_form(const CsrMatrix<Scalar>& A, const DofVector<Scalar>& x);

// max |A - A^T| over entries, relative to max |A|.
double asymmetry(const Csr& A);
double asymmetry(const SparseMatrix& A);

enum class SolveMethod { automatic, direct, cg };

struct SolveOptions {
  SolveMethod method = SolveMethod::automatic;
  double tol = 1e-12;
  Index max_iterations = 0;      // 0: 10 n
  Index direct_limit = 200000;   // automatic switches to CG above this size
};

// Factorize once, solve many. Direct sparse Cholesky or Jacobi-preconditioned CG.
class SpdSolver {
public:
  SpdSolver();
  explicit SpdSolver(const SparseMatrix& A, SolveOptions opt = {});
  ~SpdSolver();
  SpdSolver(SpdSolver&&) noexcept;
  SpdSolver& operator=(SpdSolver&&) noexcept;

  void compute(const SparseMatrix& A, SolveOptions opt = {});
  VectorXd solve(const VectorXd& b) const;
  Index rows() const { return n_; }
  bool direct() const { return direct_; }

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  SparseMatrix A_;
  SolveOptions opt_;
  Index n_ = 0;
  bool direct_ = true;
};

template <typename Scalar>
DofVector<Scalar> solve_spd(const CsrMatrix<Scalar>& A, const DofVector<Scalar>& b, Scalar tol,
                            SolveOptions opt = {});

// %%MatrixMarket matrix coordinate real symmetric (lower triangle).
void write_matrix_market(std::ostream& os, const Csr& A);
void write_matrix_market(const std::string& path, const Csr& A);

// Principal submatrix and restriction helpers on index lists.
SparseMatrix submatrix(const SparseMatrix& A, const std::vector<Index>& rows,
                       const std::vector<Index>& cols);
VectorXd gather(const VectorXd& x, const std::vector<Index>& idx);
void scatter(VectorXd& x, const std::vector<Index>& idx, const VectorXd& v);

}  // namespace poro
