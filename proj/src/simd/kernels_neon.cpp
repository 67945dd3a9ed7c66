// AArch64 only. Advanced SIMD is mandatory on this architecture, so the table
// is always usable when it is compiled in.
#include "qpat/simd/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

namespace qpat::simd {
namespace {

void stencil5(const double* in, double* out, std::size_t n, std::ptrdiff_t sx,
              std::ptrdiff_t sy, double ax, double ay) {
  const float64x2_t vax = vdupq_n_f64(ax);
  const float64x2_t vay = vdupq_n_f64(ay);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const double* p = in + k;
    const float64x2_t c = vld1q_f64(p);
    const float64x2_t c2 = vaddq_f64(c, c);
    const float64x2_t hx = vsubq_f64(vaddq_f64(vld1q_f64(p - sx), vld1q_f64(p + sx)), c2);
    const float64x2_t hy = vsubq_f64(vaddq_f64(vld1q_f64(p - sy), vld1q_f64(p + sy)), c2);
    vst1q_f64(out + k, vaddq_f64(vmulq_f64(vax, hx), vmulq_f64(vay, hy)));
  }
  for (; k < n; ++k) {
    const double c2 = 2.0 * in[k];
    out[k] = ax * (in[k - sx] + in[k + sx] - c2) + ay * (in[k - sy] + in[k + sy] - c2);
  }
}

void central_diff(const double* in, double* out, std::size_t n, std::ptrdiff_t s, double a) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2)
    vst1q_f64(out + k, vmulq_f64(va, vsubq_f64(vld1q_f64(in + k + s), vld1q_f64(in + k - s))));
  for (; k < n; ++k) out[k] = a * (in[k + s] - in[k - s]);
}

void axpy(double* y, const double* x, double a, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) vst1q_f64(y + k, vfmaq_f64(vld1q_f64(y + k), va, vld1q_f64(x + k)));
  for (; k < n; ++k) y[k] += a * x[k];
}

// One complex number per register, [re im].
void caxpy(cplx* y, const cplx* x, cplx a, std::size_t n) {
  const float64x2_t ar = vdupq_n_f64(a.real());
  const float64x2_t ai = {-a.imag(), a.imag()};
  auto* yd = reinterpret_cast<double*>(y);
  const auto* xd = reinterpret_cast<const double*>(x);
  for (std::size_t k = 0; k < n; ++k) {
    const float64x2_t xv = vld1q_f64(xd + 2 * k);
    const float64x2_t xs = vextq_f64(xv, xv, 1);
    const float64x2_t p = vfmaq_f64(vmulq_f64(ar, xv), ai, xs);
    vst1q_f64(yd + 2 * k, vaddq_f64(vld1q_f64(yd + 2 * k), p));
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  float64x2_t a0 = vdupq_n_f64(0.0), a1 = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    a0 = vfmaq_f64(a0, vld1q_f64(x + k), vld1q_f64(y + k));
    a1 = vfmaq_f64(a1, vld1q_f64(x + k + 2), vld1q_f64(y + k + 2));
  }
  for (; k + 2 <= n; k += 2) a0 = vfmaq_f64(a0, vld1q_f64(x + k), vld1q_f64(y + k));
  double s = vaddvq_f64(vaddq_f64(a0, a1));
  for (; k < n; ++k) s += x[k] * y[k];
  return s;
}

template <bool Conj>
cplx cdot(const cplx* x, const cplx* y, std::size_t n) {
  const auto* xd = reinterpret_cast<const double*>(x);
  const auto* yd = reinterpret_cast<const double*>(y);
  // acc1 = [xr*yr, xi*yr], acc2 = [xi*yi, xr*yi]
  float64x2_t acc1 = vdupq_n_f64(0.0), acc2 = vdupq_n_f64(0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const float64x2_t xv = vld1q_f64(xd + 2 * k);
    const float64x2_t yv = vld1q_f64(yd + 2 * k);
    acc1 = vfmaq_laneq_f64(acc1, xv, yv, 0);
    acc2 = vfmaq_laneq_f64(acc2, vextq_f64(xv, xv, 1), yv, 1);
  }
  const double a0 = vgetq_lane_f64(acc1, 0), a1 = vgetq_lane_f64(acc1, 1);
  const double b0 = vgetq_lane_f64(acc2, 0), b1 = vgetq_lane_f64(acc2, 1);
  if constexpr (Conj) return {a0 + b0, b1 - a1};
  return {a0 - b0, a1 + b1};
}

constexpr KernelTable kNeon{"neon", stencil5, central_diff, axpy, caxpy,
                            dot,    cdot<false>, cdot<true>};

}  // namespace

const KernelTable* neon_kernels_impl() { return &kNeon; }

}  // namespace qpat::simd

#endif
