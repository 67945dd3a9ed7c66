#pragma once

// Data-parallel inner loops used by the stencils, the banded factorization and
// the Krylov solvers. Every kernel has a portable scalar reference version and,
// where the target supports it, a vector version (AVX2+FMA on x86-64, NEON on
// AArch64). The active table is chosen once at first use from the CPU features;
// setting the QPAT_SIMD environment variable to "scalar" forces the reference
// kernels.

#include <complex>
#include <cstddef>
#include <string_view>

namespace qpat::simd {

using cplx = std::complex<double>;

struct KernelTable {
  std::string_view name;

  // out[k] = ax*(in[k-sx] + in[k+sx] - 2 in[k]) + ay*(in[k-sy] + in[k+sy] - 2 in[k])
  void (*stencil5)(const double* in, double* out, std::size_t n, std::ptrdiff_t sx,
                   std::ptrdiff_t sy, double ax, double ay);
  // out[k] = a*(in[k+s] - in[k-s])
  void (*central_diff)(const double* in, double* out, std::size_t n, std::ptrdiff_t s,
                       double a);
  // y[k] += a*x[k]
  void (*axpy)(double* y, const double* x, double a, std::size_t n);
  void (*caxpy)(cplx* y, const cplx* x, cplx a, std::size_t n);
  // sum x[k]*y[k]   (no conjugation for the complex variant)
  double (*dot)(const double* x, const double* y, std::size_t n);
  cplx (*cdotu)(const cplx* x, const cplx* y, std::size_t n);
  // sum conj(x[k])*y[k]
  cplx (*cdotc)(const cplx* x, const cplx* y, std::size_t n);
};

const KernelTable& scalar_kernels();
/// Vector kernels compiled for this target, or nullptr when none were built.
const KernelTable* vector_kernels();
/// True when `vector_kernels()` exists and the running CPU supports it.
bool vector_kernels_usable();

/// The table every library routine dispatches through.
const KernelTable& active();

/// Force a given table (tests and benchmarking). Passing nullptr restores
/// the automatic choice.
void set_active(const KernelTable* table);

}  // namespace qpat::simd
