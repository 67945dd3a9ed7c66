#include "qpat/simd/kernels.hpp"

namespace qpat::simd {
namespace {

void stencil5(const double* in, double* out, std::size_t n, std::ptrdiff_t sx,
              std::ptrdiff_t sy, double ax, double ay) {
  for (std::size_t k = 0; k < n; ++k) {
    const double c2 = 2.0 * in[k];
    out[k] = ax * (in[k - sx] + in[k + sx] - c2) + ay * (in[k - sy] + in[k + sy] - c2);
  }
}

void central_diff(const double* in, double* out, std::size_t n, std::ptrdiff_t s,
                  double a) {
  for (std::size_t k = 0; k < n; ++k) out[k] = a * (in[k + s] - in[k - s]);
}

void axpy(double* y, const double* x, double a, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += a * x[k];
}

void caxpy(cplx* y, const cplx* x, cplx a, std::size_t n) {
  const double ar = a.real(), ai = a.imag();
  for (std::size_t k = 0; k < n; ++k) {
    const double xr = x[k].real(), xi = x[k].imag();
    y[k] = cplx(y[k].real() + (ar * xr - ai * xi), y[k].imag() + (ar * xi + ai * xr));
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += x[k] * y[k];
  return s;
}

cplx cdotu(const cplx* x, const cplx* y, std::size_t n) {
  double sr = 0.0, si = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sr += x[k].real() * y[k].real() - x[k].imag() * y[k].imag();
    si += x[k].real() * y[k].imag() + x[k].imag() * y[k].real();
  }
  return {sr, si};
}

cplx cdotc(const cplx* x, const cplx* y, std::size_t n) {
  double sr = 0.0, si = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sr += x[k].real() * y[k].real() + x[k].imag() * y[k].imag();
    si += x[k].real() * y[k].imag() - x[k].imag() * y[k].real();
  }
  return {sr, si};
}

constexpr KernelTable kScalar{"scalar", stencil5, central_diff, axpy, caxpy,
                              dot,      cdotu,    cdotc};

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

}  // namespace qpat::simd
