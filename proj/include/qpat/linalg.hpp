#pragma once

// Sparse systems from 5-point stencils: CSR storage, a banded LU without
// pivoting (the assembled operators are M-matrices or small perturbations of
// them) and Jacobi-preconditioned BiCGSTAB for systems too large for the band.

#include <complex>
#include <memory>
#include <type_traits>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace qpat {

struct LinearSolveConfig {
  enum class Method { automatic, direct_banded, krylov_iterative };
  Method method = Method::automatic;
  double rel_tol = 1e-10;
  int max_iter = 20000;
  /// automatic picks the banded solver up to this many unknowns.
  std::size_t direct_limit = 66049;

  /// Configuration error unless rel_tol is in (0, 1e-4] and max_iter >= 1.
  void validate() const;
};

struct SolveStats {
  std::string method;
  std::size_t unknowns = 0;
  int iterations = 0;
  double rel_residual = 0.0;
};

namespace linalg {

template <class T>
struct CsrMatrix {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col;
  std::vector<T> val;

  explicit CsrMatrix(std::size_t size = 0) : n(size) { row_ptr.reserve(size + 1); }
  /// Rows must be filled in order; call end_row once per row.
  void add(std::size_t j, T v) {
    col.push_back(j);
    val.push_back(v);
  }
  void end_row() { row_ptr.push_back(col.size()); }

  void multiply(const std::vector<T>& x, std::vector<T>& y) const;
  std::size_t bandwidth() const;
};

template <class T>
class BandedLU {
 public:
  /// Factorizes A in place of a band copy; throws a singular error on a
  /// vanishing pivot.
  explicit BandedLU(const CsrMatrix<T>& a);
  void solve(std::vector<T>& b) const;
  std::size_t size() const { return n_; }
  std::size_t bandwidth() const { return bw_; }

 private:
  std::size_t n_ = 0;
  std::size_t bw_ = 0;
  std::size_t w_ = 0;
  std::vector<T> band_;
};

template <class T>
using LinearOperator = std::function<void(const std::vector<T>& in, std::vector<T>& out)>;

/// Right-preconditioned BiCGSTAB on an abstract operator (`precond` may be
/// empty). Returns the number of iterations; x holds the initial guess on
/// entry; the reported residual is recomputed from scratch.
template <class T>
int bicgstab(const LinearOperator<T>& apply, const LinearOperator<T>& precond,
             const std::vector<T>& b, std::vector<T>& x, double rel_tol, int max_iter,
             double* rel_residual);

/// Jacobi-preconditioned BiCGSTAB on a sparse matrix.
template <class T>
int bicgstab(const CsrMatrix<T>& a, const std::vector<T>& b, std::vector<T>& x, double rel_tol,
             int max_iter, double* rel_residual);

template <class T>
double residual_norm(const CsrMatrix<T>& a, const std::vector<T>& x, const std::vector<T>& b);

/// Solver bound to one matrix; the banded factorization is computed once and
/// reused for every right-hand side.
template <class T>
class LinearSolver {
 public:
  LinearSolver(CsrMatrix<T> a, const LinearSolveConfig& cfg);
  std::vector<T> solve(const std::vector<T>& rhs, SolveStats* stats = nullptr) const;
  /// Real matrices applied to complex data: real and imaginary parts separately.
  std::vector<std::complex<double>> solve_complex(const std::vector<std::complex<double>>& rhs,
                                                  SolveStats* stats = nullptr) const
    requires std::is_same_v<T, double>;
  const CsrMatrix<T>& matrix() const { return a_; }
  bool direct() const { return lu_ != nullptr; }

 private:
  CsrMatrix<T> a_;
  LinearSolveConfig cfg_;
  std::shared_ptr<const BandedLU<T>> lu_;
};

}  // namespace linalg
}  // namespace qpat
