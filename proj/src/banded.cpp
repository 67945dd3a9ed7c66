#include <algorithm>
#include <cmath>
#include <cstdio>

#include "qpat/error.hpp"
#include "qpat/linalg.hpp"
#include "qpat/simd/kernels.hpp"

namespace qpat {

namespace {
std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}
}  // namespace

void LinearSolveConfig::validate() const {
  require(rel_tol > 0.0 && rel_tol <= 1e-4, ErrorKind::configuration,
          "rel_tol must lie in (0, 1e-4], got " + sci(rel_tol));
  require(max_iter >= 1, ErrorKind::configuration, "max_iter must be at least 1");
}

namespace linalg {

using cplx = std::complex<double>;

namespace {

void kaxpy(double* y, const double* x, double a, std::size_t n) { simd::active().axpy(y, x, a, n); }
void kaxpy(cplx* y, const cplx* x, cplx a, std::size_t n) { simd::active().caxpy(y, x, a, n); }
double kdotu(const double* x, const double* y, std::size_t n) { return simd::active().dot(x, y, n); }
cplx kdotu(const cplx* x, const cplx* y, std::size_t n) { return simd::active().cdotu(x, y, n); }
double kdotc(const std::vector<double>& x, const std::vector<double>& y) {
  return simd::active().dot(x.data(), y.data(), x.size());
}
cplx kdotc(const std::vector<cplx>& x, const std::vector<cplx>& y) {
  return simd::active().cdotc(x.data(), y.data(), x.size());
}
template <class T>
double norm2(const std::vector<T>& x) {
  return std::sqrt(std::abs(kdotc(x, x)));
}

}  // namespace

template <class T>
void CsrMatrix<T>::multiply(const std::vector<T>& x, std::vector<T>& y) const {
  y.assign(n, T{});
  for (std::size_t i = 0; i < n; ++i) {
    T s{};
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) s += val[p] * x[col[p]];
    y[i] = s;
  }
}

template <class T>
std::size_t CsrMatrix<T>::bandwidth() const {
  std::size_t bw = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
      bw = std::max(bw, col[p] > i ? col[p] - i : i - col[p]);
  return bw;
}

template <class T>
BandedLU<T>::BandedLU(const CsrMatrix<T>& a) : n_(a.n), bw_(a.bandwidth()), w_(2 * bw_ + 1) {
  require(a.row_ptr.size() == n_ + 1, ErrorKind::dimension, "matrix rows incomplete");
  band_.assign(n_ * w_, T{});
  double diag_max = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
      band_[i * w_ + (a.col[p] + bw_ - i)] += a.val[p];
    diag_max = std::max(diag_max, std::abs(band_[i * w_ + bw_]));
  }
  const double tiny = 1e-11 * diag_max;
  for (std::size_t k = 0; k < n_; ++k) {
    T* rowk = band_.data() + k * w_;
    const T pivot = rowk[bw_];
    if (!(std::abs(pivot) > tiny))
      fail(ErrorKind::singular, "vanishing pivot at unknown " + std::to_string(k) +
                                    ": 0 is (numerically) an eigenvalue of the discrete operator;"
                                    " change the potential extension or the grid");
    const std::size_t len = std::min(bw_, n_ - 1 - k);
    for (std::size_t i = k + 1; i <= k + len; ++i) {
      T* rowi = band_.data() + i * w_;
      T& lik = rowi[k + bw_ - i];
      if (lik == T{}) continue;
      lik /= pivot;
      kaxpy(rowi + (k + 1 + bw_ - i), rowk + bw_ + 1, -lik, len);
    }
  }
}

template <class T>
void BandedLU<T>::solve(std::vector<T>& b) const {
  require(b.size() == n_, ErrorKind::dimension, "right-hand side length mismatch");
  for (std::size_t i = 1; i < n_; ++i) {
    const std::size_t j0 = i > bw_ ? i - bw_ : 0;
    b[i] -= kdotu(band_.data() + i * w_ + (j0 + bw_ - i), b.data() + j0, i - j0);
  }
  for (std::size_t i = n_; i-- > 0;) {
    const std::size_t len = std::min(bw_, n_ - 1 - i);
    const T* row = band_.data() + i * w_;
    b[i] = (b[i] - kdotu(row + bw_ + 1, b.data() + i + 1, len)) / row[bw_];
  }
}

template <class T>
double residual_norm(const CsrMatrix<T>& a, const std::vector<T>& x, const std::vector<T>& b) {
  std::vector<T> r;
  a.multiply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  return norm2(r);
}

template <class T>
int bicgstab(const LinearOperator<T>& apply, const LinearOperator<T>& precond,
             const std::vector<T>& b, std::vector<T>& x, double rel_tol, int max_iter,
             double* rel_residual) {
  const std::size_t n = b.size();
  const double bnorm = norm2(b);
  if (x.size() != n) x.assign(n, T{});
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), T{});
    if (rel_residual) *rel_residual = 0.0;
    return 0;
  }
  auto pre = [&](const std::vector<T>& in, std::vector<T>& out) {
    if (precond) {
      precond(in, out);
    } else {
      out = in;
    }
  };
  std::vector<T> r(n), tmp;
  apply(x, tmp);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - tmp[i];
  const std::vector<T> rhat = r;
  std::vector<T> p(n, T{}), v(n, T{}), s(n), t(n), y(n), z(n);
  T rho_old{1}, alpha{1}, omega{1};
  double rel = norm2(r) / bnorm;
  int it = 0;
  while (rel > rel_tol && it < max_iter) {
    ++it;
    const T rho = kdotc(rhat, r);
    if (rho == T{}) break;
    const T beta = (rho / rho_old) * (alpha / omega);
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    pre(p, y);
    apply(y, v);
    const T rv = kdotc(rhat, v);
    if (rv == T{}) break;
    alpha = rho / rv;
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    if (norm2(s) / bnorm <= rel_tol) {
      kaxpy(x.data(), y.data(), alpha, n);
      rel = norm2(s) / bnorm;
      break;
    }
    pre(s, z);
    apply(z, t);
    const double tt = std::abs(kdotc(t, t));
    omega = tt > 0.0 ? kdotc(t, s) / tt : T{};
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * y[i] + omega * z[i];
      r[i] = s[i] - omega * t[i];
    }
    rho_old = rho;
    rel = norm2(r) / bnorm;
    if (omega == T{}) break;
  }
  apply(x, tmp);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = b[i] - tmp[i];
  rel = norm2(tmp) / bnorm;
  if (rel_residual) *rel_residual = rel;
  return it;
}

template <class T>
int bicgstab(const CsrMatrix<T>& a, const std::vector<T>& b, std::vector<T>& x, double rel_tol,
             int max_iter, double* rel_residual) {
  std::vector<T> dinv(a.n, T{1});
  for (std::size_t i = 0; i < a.n; ++i)
    for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
      if (a.col[p] == i && a.val[p] != T{}) dinv[i] = T{1} / a.val[p];
  const LinearOperator<T> apply = [&](const std::vector<T>& in, std::vector<T>& out) {
    a.multiply(in, out);
  };
  const LinearOperator<T> jacobi = [&](const std::vector<T>& in, std::vector<T>& out) {
    out.resize(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = dinv[i] * in[i];
  };
  return bicgstab(apply, jacobi, b, x, rel_tol, max_iter, rel_residual);
}

template <class T>
LinearSolver<T>::LinearSolver(CsrMatrix<T> a, const LinearSolveConfig& cfg)
    : a_(std::move(a)), cfg_(cfg) {
  cfg_.validate();
  const bool use_direct =
      cfg_.method == LinearSolveConfig::Method::direct_banded ||
      (cfg_.method == LinearSolveConfig::Method::automatic && a_.n <= cfg_.direct_limit);
  if (use_direct) lu_ = std::make_shared<const BandedLU<T>>(a_);
}

template <class T>
std::vector<T> LinearSolver<T>::solve(const std::vector<T>& rhs, SolveStats* stats) const {
  require(rhs.size() == a_.n, ErrorKind::dimension, "right-hand side length mismatch");
  const double bnorm = norm2(rhs);
  std::vector<T> x;
  double rel = 0.0;
  int iters = 0;
  bool floor_accepted = false;
  if (lu_) {
    x = rhs;
    lu_->solve(x);
    rel = bnorm > 0.0 ? residual_norm(a_, x, rhs) / bnorm : 0.0;
    // Iterative refinement absorbs the growth of an unpivoted factorization;
    // stop once it no longer gains a factor of two.
    for (int sweep = 0; sweep < 5 && rel > cfg_.rel_tol; ++sweep) {
      std::vector<T> r;
      a_.multiply(x, r);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] = rhs[i] - r[i];
      lu_->solve(r);
      std::vector<T> trial = x;
      for (std::size_t i = 0; i < r.size(); ++i) trial[i] += r[i];
      const double trial_rel = residual_norm(a_, trial, rhs) / bnorm;
      ++iters;
      const bool gained = trial_rel < 0.5 * rel;
      if (trial_rel < rel) {
        x.swap(trial);
        rel = trial_rel;
      }
      if (!gained) break;
    }
    if (rel > cfg_.rel_tol) {
      // Accept the round-off floor: normwise backward error near machine
      // precision on a system that is not numerically singular.
      double anorm = 0.0, xnorm = 0.0, bmax = 0.0;
      for (std::size_t i = 0; i < a_.n; ++i) {
        double s = 0.0;
        for (std::size_t p = a_.row_ptr[i]; p < a_.row_ptr[i + 1]; ++p) s += std::abs(a_.val[p]);
        anorm = std::max(anorm, s);
        xnorm = std::max(xnorm, std::abs(x[i]));
        bmax = std::max(bmax, std::abs(rhs[i]));
      }
      std::vector<T> r;
      a_.multiply(x, r);
      double rmax = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) rmax = std::max(rmax, std::abs(rhs[i] - r[i]));
      const double backward = rmax / (anorm * xnorm + bmax);
      const double growth = anorm * xnorm / bmax;
      if (growth > 1e12 || backward > 1e-12)
        fail(ErrorKind::singular, "banded solve cannot reach relative residual " + sci(cfg_.rel_tol) +
                                      " (got " + sci(rel) + ", |A||x|/|b| = " + sci(growth) +
                                      "): the system is numerically singular, 0 is close to an"
                                      " eigenvalue of the discrete operator");
      floor_accepted = true;
    }
  } else {
    x.assign(a_.n, T{});
    iters = bicgstab(a_, rhs, x, cfg_.rel_tol, cfg_.max_iter, &rel);
  }
  if (stats) {
    stats->method = lu_ ? "direct-banded" : "krylov-iterative";
    stats->unknowns = a_.n;
    stats->iterations = iters;
    stats->rel_residual = std::max(stats->rel_residual, rel);
  }
  if (!(rel <= cfg_.rel_tol) && !floor_accepted)
    fail(ErrorKind::iteration, std::string(lu_ ? "direct" : "BiCGSTAB") +
                                   " solve stopped at relative residual " + sci(rel) +
                                   " (tolerance " + sci(cfg_.rel_tol) + ", " +
                                   std::to_string(iters) + " iterations)");
  return x;
}

template <class T>
std::vector<cplx> LinearSolver<T>::solve_complex(const std::vector<cplx>& rhs, SolveStats* stats) const
  requires std::is_same_v<T, double>
{
  std::vector<double> re(rhs.size()), im(rhs.size());
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    re[i] = rhs[i].real();
    im[i] = rhs[i].imag();
  }
  const auto xr = solve(re, stats);
  const auto xi = solve(im, stats);
  std::vector<cplx> out(rhs.size());
  for (std::size_t i = 0; i < rhs.size(); ++i) out[i] = {xr[i], xi[i]};
  return out;
}

template struct CsrMatrix<double>;
template struct CsrMatrix<cplx>;
template class BandedLU<double>;
template class BandedLU<cplx>;
template class LinearSolver<double>;
template class LinearSolver<cplx>;
template int bicgstab(const LinearOperator<double>&, const LinearOperator<double>&,
                      const std::vector<double>&, std::vector<double>&, double, int, double*);
template int bicgstab(const LinearOperator<cplx>&, const LinearOperator<cplx>&,
                      const std::vector<cplx>&, std::vector<cplx>&, double, int, double*);
template int bicgstab(const CsrMatrix<double>&, const std::vector<double>&, std::vector<double>&,
                      double, int, double*);
template int bicgstab(const CsrMatrix<cplx>&, const std::vector<cplx>&, std::vector<cplx>&, double,
                      int, double*);
template double residual_norm(const CsrMatrix<double>&, const std::vector<double>&,
                              const std::vector<double>&);
template double residual_norm(const CsrMatrix<cplx>&, const std::vector<cplx>&,
                              const std::vector<cplx>&);

}  // namespace linalg
}  // namespace qpat
