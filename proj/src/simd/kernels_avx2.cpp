// Compiled with -mavx2 -mfma on x86-64 only; never called unless the CPU
// reports both features.
#include "qpat/simd/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace qpat::simd {
namespace {

void stencil5(const double* in, double* out, std::size_t n, std::ptrdiff_t sx,
              std::ptrdiff_t sy, double ax, double ay) {
  const __m256d vax = _mm256_set1_pd(ax);
  const __m256d vay = _mm256_set1_pd(ay);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const double* p = in + k;
    const __m256d c = _mm256_loadu_pd(p);
    const __m256d c2 = _mm256_add_pd(c, c);
    const __m256d hx = _mm256_sub_pd(_mm256_add_pd(_mm256_loadu_pd(p - sx), _mm256_loadu_pd(p + sx)), c2);
    const __m256d hy = _mm256_sub_pd(_mm256_add_pd(_mm256_loadu_pd(p - sy), _mm256_loadu_pd(p + sy)), c2);
    _mm256_storeu_pd(out + k, _mm256_add_pd(_mm256_mul_pd(vax, hx), _mm256_mul_pd(vay, hy)));
  }
  for (; k < n; ++k) {
    const double c2 = 2.0 * in[k];
    out[k] = ax * (in[k - sx] + in[k + sx] - c2) + ay * (in[k - sy] + in[k + sy] - c2);
  }
}

void central_diff(const double* in, double* out, std::size_t n, std::ptrdiff_t s, double a) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(in + k + s), _mm256_loadu_pd(in + k - s));
    _mm256_storeu_pd(out + k, _mm256_mul_pd(va, d));
  }
  for (; k < n; ++k) out[k] = a * (in[k + s] - in[k - s]);
}

void axpy(double* y, const double* x, double a, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    _mm256_storeu_pd(y + k, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
    _mm256_storeu_pd(y + k + 4,
                     _mm256_fmadd_pd(va, _mm256_loadu_pd(x + k + 4), _mm256_loadu_pd(y + k + 4)));
  }
  for (; k + 4 <= n; k += 4)
    _mm256_storeu_pd(y + k, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
  for (; k < n; ++k) y[k] += a * x[k];
}

// Two complex numbers per register, laid out [re0 im0 re1 im1].
inline __m256d cmul(__m256d ar, __m256d ai, __m256d x) {
  const __m256d xs = _mm256_permute_pd(x, 0b0101);
  return _mm256_fmaddsub_pd(ar, x, _mm256_mul_pd(ai, xs));
}

void caxpy(cplx* y, const cplx* x, cplx a, std::size_t n) {
  const __m256d ar = _mm256_set1_pd(a.real());
  const __m256d ai = _mm256_set1_pd(a.imag());
  auto* yd = reinterpret_cast<double*>(y);
  const auto* xd = reinterpret_cast<const double*>(x);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d p0 = cmul(ar, ai, _mm256_loadu_pd(xd + 2 * k));
    const __m256d p1 = cmul(ar, ai, _mm256_loadu_pd(xd + 2 * k + 4));
    _mm256_storeu_pd(yd + 2 * k, _mm256_add_pd(_mm256_loadu_pd(yd + 2 * k), p0));
    _mm256_storeu_pd(yd + 2 * k + 4, _mm256_add_pd(_mm256_loadu_pd(yd + 2 * k + 4), p1));
  }
  for (; k + 2 <= n; k += 2) {
    const __m256d p = cmul(ar, ai, _mm256_loadu_pd(xd + 2 * k));
    _mm256_storeu_pd(yd + 2 * k, _mm256_add_pd(_mm256_loadu_pd(yd + 2 * k), p));
  }
  for (; k < n; ++k) {
    const double xr = x[k].real(), xi = x[k].imag();
    y[k] = cplx(y[k].real() + (a.real() * xr - a.imag() * xi),
                y[k].imag() + (a.real() * xi + a.imag() * xr));
  }
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k + 4), _mm256_loadu_pd(y + k + 4), a1);
  }
  for (; k + 4 <= n; k += 4) a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k), a0);
  double s = hsum(_mm256_add_pd(a0, a1));
  for (; k < n; ++k) s += x[k] * y[k];
  return s;
}

// acc1 collects [xr*yr, xi*yr], acc2 collects [xi*yi, xr*yi].
template <bool Conj>
cplx cdot(const cplx* x, const cplx* y, std::size_t n) {
  const auto* xd = reinterpret_cast<const double*>(x);
  const auto* yd = reinterpret_cast<const double*>(y);
  __m256d acc1 = _mm256_setzero_pd(), acc2 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const __m256d xv = _mm256_loadu_pd(xd + 2 * k);
    const __m256d yv = _mm256_loadu_pd(yd + 2 * k);
    const __m256d yr = _mm256_movedup_pd(yv);
    const __m256d yi = _mm256_permute_pd(yv, 0b1111);
    acc1 = _mm256_fmadd_pd(xv, yr, acc1);
    acc2 = _mm256_fmadd_pd(_mm256_permute_pd(xv, 0b0101), yi, acc2);
  }
  alignas(32) double a[4], b[4];
  _mm256_store_pd(a, acc1);
  _mm256_store_pd(b, acc2);
  double sr, si;
  if constexpr (Conj) {
    sr = (a[0] + a[2]) + (b[0] + b[2]);
    si = (b[1] + b[3]) - (a[1] + a[3]);
  } else {
    sr = (a[0] + a[2]) - (b[0] + b[2]);
    si = (a[1] + a[3]) + (b[1] + b[3]);
  }
  for (; k < n; ++k) {
    const double xr = x[k].real(), xi = x[k].imag(), yr = y[k].real(), yi = y[k].imag();
    if constexpr (Conj) {
      sr += xr * yr + xi * yi;
      si += xr * yi - xi * yr;
    } else {
      sr += xr * yr - xi * yi;
      si += xr * yi + xi * yr;
    }
  }
  return {sr, si};
}

constexpr KernelTable kAvx2{"avx2", stencil5, central_diff, axpy, caxpy,
                            dot,    cdot<false>, cdot<true>};

}  // namespace

const KernelTable* avx2_kernels_impl() { return &kAvx2; }

}  // namespace qpat::simd

#endif
