#include <doctest.h>

#include <filesystem>

#include "qpat/harness.hpp"
#include "qpat/field_io.hpp"

using namespace qpat;

TEST_CASE("potential recovered from an exponential solution vanishes") {
  const auto g = GridSpec::unit_square(65);
  const auto m = DomainMask::rectangle(g);
  const auto p = CGOParams::from_kappa({3.0, 2.0});
  const auto u = ComplexField::from_function(g, [&](Vec2 x) { return std::exp(p.rho_dot(x)); });
  double umin = 0;
  const auto q = recover_q(u, m, 0.0, &umin);
  CHECK(max_abs(q, m.interior_flags()) < 1e-2);
  CHECK(umin > 0.0);

  auto hole = u;
  hole[g.index(30, 30)] = 0.0;
  try {
    recover_q(hole, m, 1e-10);
    FAIL("expected a vanishing-solution error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::vanishing_solution);
    CHECK(std::string(e.what()).find("(30,30)") != std::string::npos);
  }
}

TEST_CASE("Liouville forward map on constant coefficients") {
  const auto g = GridSpec::unit_square(17);
  const auto l = liouville_forward(ScalarField(g, 4.0), ScalarField(g, 2.0));
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(l.sqrtD[k] == doctest::Approx(2.0));
    CHECK(l.mu[k] == doctest::Approx(1.0));
    CHECK(l.q[k] == doctest::Approx(-0.5));
  }
}

TEST_CASE("sqrt(D) is recovered from q and mu") {
  const auto g = GridSpec::unit_square(65);
  const auto m = DomainMask::disk(g, {0.5, 0.5}, 0.45);
  const auto D = ScalarField::from_function(g, [](Vec2 x) { return 1.0 + 0.3 * x.x * x.y; });
  const auto s = ScalarField::from_function(g, [](Vec2 x) { return 0.6 + 0.2 * x.y; });
  const auto l = liouville_forward(D, s);
  const auto w = recover_sqrtD(l.q, l.mu, boundary_trace(l.sqrtD, m), m);
  CHECK(rel_sup_error(w, l.sqrtD, m.inside_flags()) < 1e-10);
  const auto sig = recover_sigma(l.mu, w);
  CHECK(rel_sup_error(sig, s, m.inside_flags()) < 1e-10);
  CHECK_THROWS_AS(recover_sqrtD(l.q, l.mu, BoundaryValues<double>(m.boundary_nodes().size(), 0.0), m), Error);
}

TEST_CASE("mu from its log-gradient in both modes") {
  const auto g = GridSpec::unit_square(65);
  const auto m = DomainMask::disk(g, {0.5, 0.5}, 0.45);
  auto mu = [](Vec2 x) { return 0.8 + 0.3 * std::sin(3 * x.x) * x.y; };
  GradientCoefficient G;
  G.Gamma = VectorField(g);
  G.valid.assign(g.size(), 1);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 x = g.node(k);
    G.Gamma.set(k, {-0.9 * std::cos(3 * x.x) * x.y / mu(x), -0.3 * std::sin(3 * x.x) / mu(x)});
  }
  const auto truth = ScalarField::from_function(g, mu);
  const auto mu0 = boundary_trace(truth, m);
  double res = 1;
  const auto a = mu_from_gradient(G, mu0, m, MuMode::poisson, {}, &res);
  CHECK(rel_sup_error(a, truth, m.inside_flags()) < 1e-3);
  CHECK(res < 1e-8);
  const auto b = mu_from_gradient(G, mu0, m, MuMode::path);
  CHECK(rel_sup_error(b, truth, m.inside_flags()) < 1e-3);
  CHECK(m.inside(path_anchor(m)));
  CHECK(b[path_anchor(m)] == doctest::Approx(truth[path_anchor(m)]).epsilon(1e-12));
}

TEST_CASE("small round trips on both routes") {
  const MaskSpec ms = MaskSpec::parse("rect");
  const auto ph = make_phantom(PhantomSpec::standard(65, ms));
  const auto dom = ms.build(ph.grid);
  const double k = default_kmag(dom);

  SUBCASE("multi") {
    const auto sim = simulate(ph, ms, Route::multi_data, k);
    const auto r = reconstruct(sim, Route::multi_data, {});
    const auto e = recon_errors(r, sim, ph);
    CHECK(e.mu < 0.02);
    CHECK(e.q < 0.1);
    CHECK(e.D < 0.03);
    CHECK(e.sigma_a < 0.03);
    CHECK(r.route == Route::multi_data);
    CHECK(r.diag.condition_max > 0.0);

    const auto dir = std::filesystem::temp_directory_path() / "qpat_test_recon";
    std::filesystem::remove_all(dir);
    save_recon(dir, r);
    for (const char* f : {"mu.pfg", "q.pfg", "sqrtD.pfg", "D.pfg", "sigma_a.pfg", "manifest.txt", "diagnostics.csv"})
      CHECK(std::filesystem::exists(dir / f));
    const auto back = io::read_pfg_scalar(dir / "D.pfg");
    CHECK(back.values == r.D.values);
    std::filesystem::remove_all(dir);
  }
  SUBCASE("two") {
    const auto sim = simulate(ph, ms, Route::two_data, k, {1.0, 1.0});
    const auto r = reconstruct(sim, Route::two_data, {});
    const auto e = recon_errors(r, sim, ph);
    CHECK(e.mu < 0.02);
    CHECK(e.D < 0.05);
    CHECK(e.sigma_a < 0.05);
    CHECK(r.diag.transport_residual < 5e-2);
  }
}
