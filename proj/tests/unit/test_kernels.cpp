#include <doctest.h>

#include <random>
#include <vector>

#include "qpat/simd/kernels.hpp"

using qpat::simd::cplx;
using qpat::simd::KernelTable;

namespace {

std::vector<double> random_doubles(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

std::vector<cplx> random_complex(std::size_t n, unsigned seed) {
  const auto re = random_doubles(n, seed), im = random_doubles(n, seed + 7);
  std::vector<cplx> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = {re[i], im[i]};
  return v;
}

void compare_tables(const KernelTable& a, const KernelTable& b) {
  for (std::size_t n : {0u, 1u, 2u, 3u, 5u, 7u, 8u, 13u, 31u, 64u, 101u}) {
    CAPTURE(n);
    const std::ptrdiff_t sx = 1, sy = 19;
    const auto in = random_doubles(n + 2 * sy + 2, unsigned(n));
    std::vector<double> oa(n + 1, 0.0), ob(n + 1, 0.0);
    a.stencil5(in.data() + sy, oa.data(), n, sx, sy, 3.5, -1.25);
    b.stencil5(in.data() + sy, ob.data(), n, sx, sy, 3.5, -1.25);
    for (std::size_t k = 0; k < n; ++k) CHECK(oa[k] == doctest::Approx(ob[k]).epsilon(1e-14));

    a.central_diff(in.data() + sy, oa.data(), n, sy, 0.7);
    b.central_diff(in.data() + sy, ob.data(), n, sy, 0.7);
    for (std::size_t k = 0; k < n; ++k) CHECK(oa[k] == doctest::Approx(ob[k]).epsilon(1e-14));

    auto ya = random_doubles(n, 99), yb = ya;
    const auto x = random_doubles(n, 5);
    a.axpy(ya.data(), x.data(), -0.3, n);
    b.axpy(yb.data(), x.data(), -0.3, n);
    for (std::size_t k = 0; k < n; ++k) CHECK(ya[k] == doctest::Approx(yb[k]).epsilon(1e-14));

    CHECK(a.dot(x.data(), ya.data(), n) == doctest::Approx(b.dot(x.data(), ya.data(), n)).epsilon(1e-12));

    auto ca = random_complex(n, 3), cb = ca;
    const auto cx = random_complex(n, 4);
    const cplx alpha(0.25, -1.5);
    a.caxpy(ca.data(), cx.data(), alpha, n);
    b.caxpy(cb.data(), cx.data(), alpha, n);
    for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(ca[k] - cb[k]) <= 1e-14 * (1 + std::abs(ca[k])));

    const cplx du_a = a.cdotu(cx.data(), ca.data(), n), du_b = b.cdotu(cx.data(), ca.data(), n);
    const cplx dc_a = a.cdotc(cx.data(), ca.data(), n), dc_b = b.cdotc(cx.data(), ca.data(), n);
    CHECK(std::abs(du_a - du_b) <= 1e-12 * (1 + std::abs(du_b)));
    CHECK(std::abs(dc_a - dc_b) <= 1e-12 * (1 + std::abs(dc_b)));
  }
}

}  // namespace

TEST_CASE("scalar kernels match the textbook definitions") {
  const auto& s = qpat::simd::scalar_kernels();
  const std::vector<cplx> x{{1, 2}, {3, -1}}, y{{0, 1}, {2, 2}};
  CHECK(s.cdotu(x.data(), y.data(), 2) == x[0] * y[0] + x[1] * y[1]);
  CHECK(s.cdotc(x.data(), y.data(), 2) == std::conj(x[0]) * y[0] + std::conj(x[1]) * y[1]);
}

TEST_CASE("vector kernels agree with the scalar reference") {
  const KernelTable* v = qpat::simd::vector_kernels();
  if (v == nullptr || !qpat::simd::vector_kernels_usable()) {
    MESSAGE("no vector kernels on this target; comparing scalar with itself");
    compare_tables(qpat::simd::scalar_kernels(), qpat::simd::scalar_kernels());
    return;
  }
  MESSAGE("vector kernels: " << v->name);
  compare_tables(qpat::simd::scalar_kernels(), *v);
}

TEST_CASE("set_active overrides and restores the dispatch choice") {
  const auto& before = qpat::simd::active();
  qpat::simd::set_active(&qpat::simd::scalar_kernels());
  CHECK(qpat::simd::active().name == "scalar");
  qpat::simd::set_active(nullptr);
  CHECK(qpat::simd::active().name == before.name);
}
