#include <doctest.h>

#include <random>

#include "qpat/grid.hpp"
#include "qpat/simd/kernels.hpp"

using namespace qpat;

namespace {

double max_interior_err(const ScalarField& f, const std::function<double(Vec2)>& exact) {
  double e = 0.0;
  const auto& g = f.grid;
  for (int j = 1; j < g.ny - 1; ++j)
    for (int i = 1; i < g.nx - 1; ++i) e = std::max(e, std::abs(f(i, j) - exact(g.node(i, j))));
  return e;
}

}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(GridSpec::unit_square(4).validate(), Error);
  CHECK_NOTHROW(GridSpec::unit_square(5).validate());
  GridSpec g = GridSpec::unit_square(9);
  g.dx = 0.0;
  CHECK_THROWS_AS(g.validate(), Error);
  try {
    laplacian(ScalarField(GridSpec::unit_square(4)));
    FAIL("expected a dimension error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::dimension);
  }
}

TEST_CASE("laplacian examples") {
  const auto g = GridSpec::unit_square(33);
  const auto quad = ScalarField::from_function(g, [](Vec2 p) { return p.x * p.x + p.y * p.y; });
  CHECK(max_interior_err(laplacian(quad), [](Vec2) { return 4.0; }) < 1e-9);
  const auto cst = ScalarField(g, 3.25);
  CHECK(max_abs(laplacian(cst)) == 0.0);

  const auto g64 = GridSpec::unit_square(65);
  const auto ex = ScalarField::from_function(g64, [](Vec2 p) { return std::exp(p.x); });
  const double e64 = max_interior_err(laplacian(ex), [](Vec2 p) { return std::exp(p.x); });
  CHECK(e64 < 1e-3);

  // second order: halving h divides the error by about four
  const auto g128 = GridSpec::unit_square(129);
  const auto ex2 = ScalarField::from_function(g128, [](Vec2 p) { return std::exp(p.x); });
  const double e128 = max_interior_err(laplacian(ex2), [](Vec2 p) { return std::exp(p.x); });
  CHECK(e64 / e128 >= 3.5);
  CHECK(e64 / e128 <= 4.5);
}

TEST_CASE("gradient examples") {
  const auto g = GridSpec::unit_square(17);
  const auto aff = ScalarField::from_function(g, [](Vec2 p) { return 3 * p.x - 2 * p.y; });
  const auto [gx, gy] = gradient(aff);
  CHECK(max_interior_err(gx, [](Vec2) { return 3.0; }) < 1e-12);
  CHECK(max_interior_err(gy, [](Vec2) { return -2.0; }) < 1e-12);

  const auto [cx, cy] = gradient(ScalarField(g, 1.0));
  CHECK(max_abs(cx) == 0.0);
  CHECK(max_abs(cy) == 0.0);

  const double pi = std::numbers::pi;
  const auto g129 = GridSpec::unit_square(129);
  const auto s = ScalarField::from_function(g129, [&](Vec2 p) { return std::sin(pi * p.x) * std::sin(pi * p.y); });
  const auto [sx, sy] = gradient(s);
  CHECK(max_interior_err(sx, [&](Vec2 p) { return pi * std::cos(pi * p.x) * std::sin(pi * p.y); }) <= 1e-3);
  CHECK(max_interior_err(sy, [&](Vec2 p) { return pi * std::sin(pi * p.x) * std::cos(pi * p.y); }) <= 1e-3);
}

TEST_CASE("complex stencils act componentwise") {
  const auto g = GridSpec::unit_square(21);
  const auto f = ComplexField::from_function(g, [](Vec2 p) { return cplx(std::sin(p.x) * p.y, p.x * p.x * std::cos(p.y)); });
  ScalarField re(g), im(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    re[k] = f[k].real();
    im[k] = f[k].imag();
  }
  const auto lc = laplacian(f);
  const auto lr = laplacian(re), li = laplacian(im);
  const auto [gcx, gcy] = gradient(f);
  const auto [grx, gry] = gradient(re);
  const auto [gix, giy] = gradient(im);
  for (std::size_t k = 0; k < g.size(); ++k) {
    // lanes may group the fused multiply-adds differently, so allow round-off
    CHECK(std::abs(lc[k] - cplx(lr[k], li[k])) <= 1e-12 * (1 + std::abs(lc[k])));
    CHECK(std::abs(gcx[k] - cplx(grx[k], gix[k])) <= 1e-13 * (1 + std::abs(gcx[k])));
    CHECK(std::abs(gcy[k] - cplx(gry[k], giy[k])) <= 1e-13 * (1 + std::abs(gcy[k])));
  }
}

TEST_CASE("stencils are linear and match div grad to second order") {
  const auto g = GridSpec::unit_square(41);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01;
  ScalarField a(g), b(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    a[k] = n01(rng);
    b[k] = n01(rng);
  }
  const double s = 1.7, t = -0.4;
  ScalarField comb(g);
  for (std::size_t k = 0; k < g.size(); ++k) comb[k] = s * a[k] + t * b[k];
  const auto la = laplacian(a), lb = laplacian(b), lc = laplacian(comb);
  const auto [ax, ay] = gradient(a);
  const auto [bx, by] = gradient(b);
  const auto [cx, cy] = gradient(comb);
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(lc[k] == doctest::Approx(s * la[k] + t * lb[k]).epsilon(1e-12).scale(1e3));
    CHECK(cx[k] == doctest::Approx(s * ax[k] + t * bx[k]).epsilon(1e-12).scale(1e2));
    CHECK(cy[k] == doctest::Approx(s * ay[k] + t * by[k]).epsilon(1e-12).scale(1e2));
  }

  // lap f vs div(grad f) on a smooth field, away from the two-node rim
  auto err_at = [](int n) {
    const auto gg = GridSpec::unit_square(n);
    const auto f = ScalarField::from_function(gg, [](Vec2 p) { return std::exp(p.x) * std::cos(2 * p.y); });
    const auto [fx, fy] = gradient(f);
    VectorField v(gg);
    v.x = fx.values;
    v.y = fy.values;
    const auto dg = divergence(v);
    const auto l = laplacian(f);
    double e = 0.0;
    for (int j = 2; j < gg.ny - 2; ++j)
      for (int i = 2; i < gg.nx - 2; ++i) e = std::max(e, std::abs(dg(i, j) - l(i, j)));
    return e;
  };
  const double e1 = err_at(33), e2 = err_at(65);
  CHECK(e1 < 0.05);
  CHECK(e1 / e2 > 3.5);
}

TEST_CASE("bilinear sampling") {
  const auto g = GridSpec::covering({-1, -1}, {1, 2}, 11, 16);
  const auto aff = ScalarField::from_function(g, [](Vec2 p) { return 2 * p.x - p.y + 0.5; });
  const Vec2 c{g.x(3) + 0.5 * g.dx, g.y(4) + 0.5 * g.dy};
  CHECK(sample_bilinear(aff, c) == doctest::Approx(0.25 * (aff(3, 4) + aff(4, 4) + aff(3, 5) + aff(4, 5))));
  for (std::size_t k = 0; k < g.size(); k += 7) CHECK(sample_bilinear(aff, g.node(k)) == aff[k]);
  CHECK(sample_bilinear(aff, g.hi()) == aff(10, 15));

  const auto xy = ScalarField::from_function(GridSpec::unit_square(8), [](Vec2 p) { return p.x * p.y; });
  CHECK(sample_bilinear(xy, {0.3, 0.7}) == doctest::Approx(0.21).epsilon(1e-14));

  try {
    sample_bilinear(xy, {1.01, 0.5});
    FAIL("expected an out-of-range error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::out_of_range);
  }
  CHECK(sample_bilinear_clamped(xy, {2.0, 0.5}) == doctest::Approx(0.5));
}

TEST_CASE("rectangle mask and boundary traces") {
  const auto g = GridSpec::unit_square(9);
  const auto m = DomainMask::rectangle(g);
  CHECK_FALSE(m.satisfies_r0());
  CHECK(m.boundary_nodes().size() == 32);
  CHECK(m.interior_count() == 49);
  CHECK(m.perimeter() == doctest::Approx(4.0));

  const auto ones = boundary_trace(ScalarField(g, 1.0), m);
  for (double v : ones) CHECK(v == 1.0);
  const auto xs = boundary_trace(ScalarField::from_function(g, [](Vec2 p) { return p.x; }), m);
  const auto nodes = m.boundary_nodes();
  for (std::size_t b = 0; b < nodes.size(); ++b) CHECK(xs[b] == g.node(nodes[b]).x);

  // counter-clockwise: angle about the centre increases
  double prev = -10.0;
  for (std::size_t b = 0; b < nodes.size(); ++b) {
    const Vec2 r = g.node(nodes[b]) - m.center();
    const double a = std::atan2(r.y, r.x);
    CHECK(a >= prev);
    prev = a;
  }
  CHECK_THROWS_AS(boundary_trace(ScalarField(GridSpec::unit_square(10)), m), Error);

  CHECK(m.contains({0.5, 0.5}));
  CHECK(m.contains({1.0, 0.3}));
  CHECK_FALSE(m.contains({1.0 + 1e-6, 0.3}));
  const auto hit = m.locate({1.0, 0.5});
  CHECK(hit.lambda >= 0.0);
  CHECK(hit.lambda <= 1.0);
  CHECK(m.outward_normal({0.99, 0.5}) == Vec2{1.0, 0.0});
}

TEST_CASE("disk mask") {
  const auto g = GridSpec::unit_square(65);
  const auto m = DomainMask::disk(g, {0.5, 0.5}, 0.4);
  CHECK(m.satisfies_r0());
  CHECK(m.diameter() == doctest::Approx(0.8));
  const auto f = ScalarField::from_function(g, [](Vec2 p) {
    const double x = p.x - 0.5, y = p.y - 0.5;
    return x * x + y * y;
  });
  const auto tr = boundary_trace(f, m);
  // snapped nodes lie within one cell of the circle, so r^2 is within 2 r h of 0.16
  for (double v : tr) CHECK(std::abs(v - 0.16) <= 2 * 0.4 * g.dx * std::sqrt(2.0) + 1e-12);
  CHECK(m.perimeter() == doctest::Approx(2 * std::numbers::pi * 0.4).epsilon(0.05));
  for (std::size_t k = 0; k < g.size(); ++k)
    if (m.interior(k)) CHECK(m.contains(g.node(k)));
  CHECK_FALSE(m.contains({0.5, 0.95}));
  const auto n = m.boundary_normals();
  for (std::size_t b = 0; b < n.size(); ++b) CHECK(norm(n[b]) == doctest::Approx(1.0));
  CHECK_THROWS_AS(DomainMask::disk(g, {0.5, 0.5}, 0.5), Error);
}

TEST_CASE("fill_invalid extrapolates linear data exactly near valid nodes") {
  const auto g = GridSpec::unit_square(17);
  const auto m = DomainMask::rectangle(g);
  auto f = ScalarField::from_function(g, [](Vec2 p) { return 2 * p.x + 3 * p.y; });
  const auto exact = f;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (!m.interior(k)) f[k] = 1e9;
  fill_invalid(f, m.interior_flags());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const int i = g.col(k), j = g.row(k);
    const bool corner = (i == 0 || i == g.nx - 1) && (j == 0 || j == g.ny - 1);
    if (!corner) CHECK(f[k] == doctest::Approx(exact[k]).epsilon(1e-12));
    CHECK(std::abs(f[k]) < 10.0);
  }
}

TEST_CASE("discrete C1 norm") {
  const auto g = GridSpec::unit_square(11);
  const auto f = ScalarField::from_function(g, [](Vec2 p) { return 0.1 * p.x; });
  CHECK(c1_norm(f) == doctest::Approx(0.1));
  const auto h = ScalarField::from_function(g, [](Vec2 p) { return 5.0 + 0.1 * p.y; });
  CHECK(c1_norm(h) == doctest::Approx(5.1));
}
