#include <doctest.h>

#include <filesystem>

#include "qpat/internal_data.hpp"

using namespace qpat;

namespace {

struct Setup {
  GridSpec g = GridSpec::unit_square(33);
  DomainMask m = DomainMask::disk(g, {0.5, 0.5}, 0.45);
  CGOParams p = CGOParams::from_kappa({3.0, 0.0});
  ScalarField mu = ScalarField::from_function(g, [](Vec2 x) { return 0.5 + 0.2 * x.x * x.y; });
  ComplexField u = ComplexField::from_function(g, [this](Vec2 x) { return std::exp(p.rho_dot(x - Vec2{0.5, 0.5})); });
  BoundaryValues<cplx> trace = boundary_trace(u, m);

  InternalData data() const { return synthesize(mu, u, trace, p, {0.5, 0.5}); }
};

}  // namespace

TEST_CASE("synthesize multiplies nodewise and records metadata") {
  Setup s;
  const auto d = s.data();
  for (std::size_t k = 0; k < d.d.size(); ++k) CHECK(d.d[k] == s.mu[k] * s.u[k]);
  CHECK(d.params.kappa == s.p.kappa);
  CHECK_FALSE(d.provenance.noisy);
  CHECK(d.provenance.label() == "clean");
  CHECK(d.g_min > 0.0);

  auto bad = s.mu;
  bad[5] = 0.0;
  CHECK_THROWS_AS(synthesize(bad, s.u, s.trace, s.p, {0.5, 0.5}), Error);
  CHECK_THROWS_AS(synthesize(s.mu, s.u, BoundaryValues<cplx>(s.trace.size(), 0.0), s.p, {0.5, 0.5}), Error);
}

TEST_CASE("noise has the requested C1 norm and is reproducible") {
  Setup s;
  const auto d = s.data();
  const auto same = add_noise(d, 0.0, 0.05, 7);
  CHECK(same.d.values == d.d.values);
  CHECK_FALSE(same.provenance.noisy);

  const auto a = add_noise(d, 1e-3, 0.05, 7);
  const auto b = add_noise(d, 1e-3, 0.05, 7);
  const auto c = add_noise(d, 1e-3, 0.05, 8);
  CHECK(a.d.values == b.d.values);
  CHECK(a.d.values != c.d.values);
  ComplexField diff(s.g);
  for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = a.d[k] - d.d[k];
  CHECK(c1_norm(diff) == doctest::Approx(1e-3).epsilon(1e-10));
  CHECK(a.provenance.noisy);
  CHECK(a.provenance.seed == 7);

  // doubling the level doubles the perturbation exactly
  const auto two = add_noise(d, 2e-3, 0.05, 7);
  for (std::size_t k = 0; k < diff.size(); ++k)
    CHECK(std::abs((two.d[k] - d.d[k]) - 2.0 * (a.d[k] - d.d[k])) < 1e-15);
  CHECK_THROWS_AS(add_noise(d, -1.0, 0.05, 1), Error);
}

TEST_CASE("smoothed noise is correlated over the requested width") {
  const auto g = GridSpec::unit_square(65);
  const auto rough = smooth_noise(g, 0.5 * g.dx, 3);
  const auto smooth = smooth_noise(g, 6 * g.dx, 3);
  // relative size of first differences drops with the correlation width
  auto ratio = [&](const ComplexField& f) {
    double m = max_abs(f), d = 0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i + 1 < g.nx; ++i) d = std::max(d, std::abs(f(i + 1, j) - f(i, j)));
    return d / m;
  };
  CHECK(ratio(smooth) < 0.3 * ratio(rough));
}

TEST_CASE("boundary mu is d / g on the boundary") {
  Setup s;
  const auto d = s.data();
  const auto b = boundary_mu(d, s.m);
  const auto truth = boundary_trace(s.mu, s.m);
  REQUIRE(b.mu0.size() == truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) CHECK(b.mu0[i] == doctest::Approx(truth[i]).epsilon(1e-13));
  CHECK(b.max_imag < 1e-13);

  auto hazard = d;
  hazard.g[3] = 0.0;
  try {
    boundary_mu(hazard, s.m);
    FAIL("expected a division hazard");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::division_hazard);
    CHECK(std::string(e.what()).find("boundary node") != std::string::npos);
  }
}

TEST_CASE("mu from the phantom coefficients") {
  const auto g = GridSpec::unit_square(9);
  const auto mu = mu_from_phantom(ScalarField(g, 4.0), ScalarField(g, 1.0));
  CHECK(mu[0] == 0.5);
  CHECK_THROWS_AS(mu_from_phantom(ScalarField(g, 0.0), ScalarField(g, 1.0)), Error);
}

TEST_CASE("internal data survive a save/load round trip") {
  Setup s;
  auto d = add_noise(s.data(), 1e-4, 0.05, 11);
  const auto dir = std::filesystem::temp_directory_path() / "qpat_test_internal_data";
  std::filesystem::remove_all(dir);
  save_internal_data(dir, {d, d}, s.m);
  CHECK(std::filesystem::exists(dir / "data1.pfg"));
  CHECK(std::filesystem::exists(dir / "illum0.pfgb"));
  const auto back = load_internal_data(dir, s.m);
  REQUIRE(back.size() == 2);
  for (std::size_t k = 0; k < d.d.size(); ++k) CHECK(back[0].d[k] == d.d[k]);
  for (std::size_t b = 0; b < d.g.size(); ++b) CHECK(back[1].g[b] == d.g[b]);
  CHECK(back[0].params.kperp == d.params.kperp);
  CHECK(back[0].provenance.noisy);
  CHECK(back[0].provenance.seed == 11);
  CHECK(back[0].g_min == d.g_min);
  std::filesystem::remove_all(dir);
}
