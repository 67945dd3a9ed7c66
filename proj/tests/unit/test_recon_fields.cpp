#include <doctest.h>

#include "qpat/recon_fields.hpp"

using namespace qpat;

namespace {

const Vec2 kC{0.5, 0.5};

InternalData exp_data(const GridSpec& g, const CGOParams& p, const std::function<double(Vec2)>& mu) {
  InternalData d;
  d.d = ComplexField::from_function(g, [&](Vec2 x) { return mu(x) * std::exp(p.rho_dot(x - kC)); });
  d.params = p;
  d.center = kC;
  return d;
}

}  // namespace

TEST_CASE("two-data coefficients of an exponential are -mu^2 kperp-hat") {
  const auto g = GridSpec::unit_square(65);
  const auto m = DomainMask::rectangle(g);
  const auto p = CGOParams::from_kappa({4.0, 0.0});
  const auto c = beta_gamma_two(exp_data(g, p, [](Vec2) { return 0.7; }), m);
  const Vec2 e = (1.0 / p.magnitude()) * p.kperp;
  const double kh = p.magnitude() * g.dx;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!m.interior(k)) continue;
    CHECK(norm(c.beta.at(k) + 0.49 * e) < 0.49 * kh * kh);
    CHECK(std::abs(c.gamma[k]) < 1e-9);
  }
  CHECK(c.flatness_gap < 1e-12);
}

TEST_CASE("two-data coefficients satisfy the transport equation for mu") {
  const auto g = GridSpec::unit_square(65);
  const auto m = DomainMask::rectangle(g);
  const auto p = CGOParams::from_kappa({3.0, 3.0});
  auto mu = [](Vec2 x) { return 1.0 + 0.3 * std::sin(2 * x.x) * x.y; };
  const auto c = beta_gamma_two(exp_data(g, p, mu), m);
  const auto muf = ScalarField::from_function(g, mu);
  const double coarse = transport_residual(c, muf);

  const auto g2 = GridSpec::unit_square(129);
  const auto c2 = beta_gamma_two(exp_data(g2, p, mu), DomainMask::rectangle(g2));
  const double fine = transport_residual(c2, ScalarField::from_function(g2, mu));
  CHECK(coarse < 1e-2);
  CHECK(coarse / fine > 3.5);
}

TEST_CASE("coefficients scale with |d|^2 and ignore a constant phase") {
  const auto g = GridSpec::unit_square(33);
  const auto m = DomainMask::rectangle(g);
  const auto p = CGOParams::from_kappa({0.0, 5.0});
  auto d = exp_data(g, p, [](Vec2 x) { return 1.0 + x.x; });
  const auto c = beta_gamma_two(d, m);
  for (auto& v : d.d.values) v *= 2.0 * std::exp(cplx(0, 0.4));
  const auto c4 = beta_gamma_two(d, m);
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(c4.beta.x[k] == doctest::Approx(4.0 * c.beta.x[k]).epsilon(1e-12).scale(1e-12));
    CHECK(c4.gamma[k] == doctest::Approx(4.0 * c.gamma[k]).epsilon(1e-10).scale(1e-10));
  }
}

TEST_CASE("coefficient construction rejects inconsistent inputs") {
  const auto g = GridSpec::unit_square(17);
  const auto m = DomainMask::rectangle(g);
  const auto p = CGOParams::from_kappa({2.0, 0.0});
  auto d = exp_data(g, p, [](Vec2) { return 1.0; });
  d.center = {0.4, 0.5};
  CHECK_THROWS_AS(beta_gamma_two(d, m), Error);

  auto a = exp_data(g, p, [](Vec2) { return 1.0; });
  auto b = exp_data(g, p, [](Vec2) { return 1.0; });
  CHECK_THROWS_AS(beta_gamma_multi({a, b}, m), Error);
  CHECK_THROWS_AS(beta_gamma_multi({a}, m), Error);
}

TEST_CASE("multi-data coefficients give Gamma = -grad log mu") {
  const auto g = GridSpec::unit_square(65);
  const auto m = DomainMask::rectangle(g);
  const auto set = multi_rho_set(4.0);
  auto mu = [](Vec2 x) { return 0.6 + 0.2 * x.x * x.x + 0.1 * x.y; };
  const auto cs = beta_gamma_multi({exp_data(g, set.rho1, mu), exp_data(g, set.rho2, mu)}, m);
  REQUIRE(cs.size() == 2);
  const auto G = assemble_gamma(cs);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!m.interior(k)) continue;
    const Vec2 x = g.node(k);
    const double mv = mu(x);
    const Vec2 want{-(0.4 * x.x) / mv, -0.1 / mv};
    CHECK(norm(G.Gamma.at(k) - want) < 5e-3);
  }
  CHECK(G.condition_max < 10.0);
  CHECK(G.curl_residual < 1e-2);
}

TEST_CASE("assemble_gamma solves the 2x2 systems and reports degeneracy") {
  const auto g = GridSpec::unit_square(17);
  const auto m = DomainMask::rectangle(g);
  VectorField b1(g), b2(g);
  ScalarField g1(g), g2(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    b1.set(k, {2.0, 0.0});
    b2.set(k, {1.0, 1.0});
    g1[k] = 2.0 * 0.3;          // beta_1 . (0.3, -0.2)
    g2[k] = 0.3 - 0.2;
  }
  const auto G = assemble_gamma({TransportCoefficients::from_fields(b1, g1, m), TransportCoefficients::from_fields(b2, g2, m)});
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(norm(G.Gamma.at(k) - Vec2{0.3, -0.2}) < 1e-14);
  CHECK(G.curl_residual < 1e-12);

  // parallel fields at one node
  const std::size_t bad = g.index(8, 8);
  b2.set(bad, {4.0, 0.0});
  try {
    assemble_gamma({TransportCoefficients::from_fields(b1, g1, m), TransportCoefficients::from_fields(b2, g2, m)});
    FAIL("expected a degeneracy error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degeneracy);
    CHECK(std::string(e.what()).find("(8,8)") != std::string::npos);
  }
}

TEST_CASE("curl residual separates gradients from rotations") {
  const auto g = GridSpec::unit_square(33);
  const auto m = DomainMask::rectangle(g);
  VectorField grad(g), rot(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 x = g.node(k);
    grad.set(k, {2 * x.x * x.y, x.x * x.x});   // grad of x^2 y
    rot.set(k, {-x.y, x.x});
  }
  CHECK(curl_residual(grad, m.interior_flags()) < 1e-12);
  CHECK(curl_residual(rot, m.interior_flags()) == doctest::Approx(2.0));
}
