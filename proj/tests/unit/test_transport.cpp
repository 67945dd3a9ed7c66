#include <doctest.h>

#include <sstream>

#include "qpat/transport.hpp"

using namespace qpat;

namespace {

TransportCoefficients constant(const DomainMask& m, Vec2 b, double gam) {
  VectorField beta(m.grid());
  for (std::size_t k = 0; k < beta.x.size(); ++k) beta.set(k, b);
  return TransportCoefficients::from_fields(beta, ScalarField(m.grid(), gam), m);
}

double max_error(const ScalarField& mu, const DomainMask& m, const std::function<double(Vec2)>& f) {
  double e = 0;
  for (std::size_t k = 0; k < mu.size(); ++k)
    if (m.inside(k)) e = std::max(e, std::abs(mu[k] - f(mu.grid.node(k))));
  return e;
}

}  // namespace

TEST_CASE("single path: straight line with constant gamma") {
  const auto g = GridSpec::unit_square(33);
  const auto m = DomainMask::rectangle(g);
  const auto c = constant(m, {0.0, 1.0}, 1.0);
  const auto s = resolve_settings(c, m, {});
  const auto p = trace_characteristic(c.beta, c.gamma, {0.3, 0.25}, m, s, true);
  CHECK(p.status == PathStatus::exited);
  CHECK(p.exit.y == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.exit.x == doctest::Approx(0.3));
  CHECK(p.t_exit == doctest::Approx(0.75).epsilon(1e-10));
  CHECK(p.gamma_integral == doctest::Approx(0.75).epsilon(1e-10));
  CHECK(p.points.size() == p.times.size());
  CHECK(p.points.size() > 2);

  std::ostringstream os;
  write_paths_csv(os, g, {p});
  const auto text = os.str();
  CHECK(text.rfind("node_i,node_j,t,x,y,gamma_sample\r\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(p.points.size() + 1));
}

TEST_CASE("constant field solution is exp((1 - y)) for consistent boundary data") {
  const auto g = GridSpec::unit_square(33);
  const auto m = DomainMask::rectangle(g);
  const auto c = constant(m, {0.0, 1.0}, 1.0);
  auto exact = [](Vec2 x) { return std::exp(1.0 - x.y); };
  const auto mu0 = boundary_trace(ScalarField::from_function(g, exact), m);
  TransportReport rep;
  const auto mu = solve_transport(c, mu0, m, {}, &rep);
  CHECK(max_error(mu, m, exact) < 1e-9);
  CHECK(rep.zeta == doctest::Approx(1.0));
  CHECK(rep.max_exit_time == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("solution is invariant under scaling of beta and gamma") {
  const auto g = GridSpec::unit_square(41);
  const auto m = DomainMask::disk(g, {0.5, 0.5}, 0.45);
  VectorField beta(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 x = g.node(k);
    beta.set(k, {1.0 + 0.2 * x.y, 0.5 + 0.1 * std::sin(3 * x.x)});
  }
  const auto gam = ScalarField::from_function(g, [](Vec2 x) { return 0.3 * x.x - 0.2 * x.y; });
  const auto c = TransportCoefficients::from_fields(beta, gam, m);
  auto scaled = c;
  for (auto& v : scaled.beta.x) v *= 7.3;
  for (auto& v : scaled.beta.y) v *= 7.3;
  for (auto& v : scaled.gamma.values) v *= 7.3;
  const BoundaryValues<double> mu0(m.boundary_nodes().size(), 1.0);
  const auto a = solve_transport(c, mu0, m);
  const auto b = solve_transport(scaled, mu0, m);
  double e = 0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (m.inside(k)) e = std::max(e, std::abs(a[k] - b[k]) / a[k]);
  CHECK(e < 1e-10);
}

TEST_CASE("finer ODE steps converge to a fixed answer") {
  const auto g = GridSpec::unit_square(33);
  const auto m = DomainMask::disk(g, {0.5, 0.5}, 0.45);
  VectorField beta(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 x = g.node(k);
    beta.set(k, {1.0, 0.4 * std::cos(2 * x.x)});
  }
  const auto c = TransportCoefficients::from_fields(beta, ScalarField(g, 0.5), m);
  const BoundaryValues<double> mu0(m.boundary_nodes().size(), 2.0);
  const auto s = resolve_settings(c, m, {});
  auto run = [&](double f) {
    TransportOptions o;
    o.h_ode = s.h_ode * f;
    return solve_transport(c, mu0, m, o);
  };
  const auto a = run(1.0), b = run(0.5), r = run(0.125);
  double ea = 0, eb = 0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (m.inside(k)) {
      ea = std::max(ea, std::abs(a[k] - r[k]));
      eb = std::max(eb, std::abs(b[k] - r[k]));
    }
  CHECK(ea < 1e-4);
  CHECK(eb <= ea);
}

TEST_CASE("exit profile reproduces smooth boundary data") {
  const auto g = GridSpec::unit_square(65);
  const auto m = DomainMask::disk(g, {0.5, 0.5}, 0.45);
  auto f = [](Vec2 x) { return 1.0 + 0.3 * x.x * x.x + 0.2 * x.y; };
  const auto F = ScalarField::from_function(g, f);
  // gamma = -beta.grad log f makes f itself the transport solution
  VectorField beta(g);
  for (std::size_t k = 0; k < g.size(); ++k) beta.set(k, {0.8, 0.6});
  const auto gam = ScalarField::from_function(g, [&](Vec2 x) { return -(0.8 * 0.6 * x.x + 0.6 * 0.2) / f(x); });
  const auto c = TransportCoefficients::from_fields(beta, gam, m);
  const auto mu0 = boundary_trace(F, m);
  const ExitProfile prof(c.beta, c.gamma, m, mu0, resolve_settings(c, m, {}));
  CHECK(prof.sample_count() >= mu0.size());
  for (int a = 0; a < 64; ++a) {
    const double th = 2 * M_PI * a / 64.0;
    const Vec2 n{std::cos(th), std::sin(th)};
    if (dot(n, {0.8, 0.6}) < 0.3) continue;   // only outflow points carry samples
    const Vec2 p = Vec2{0.5, 0.5} + 0.45 * n;
    CHECK(prof(p) == doctest::Approx(f(p)).epsilon(1e-4));
  }
  const auto mu = solve_transport(c, mu0, m);
  CHECK(max_error(mu, m, f) < 1e-4);
}

TEST_CASE("boundary parameters") {
  const auto g = GridSpec::unit_square(17);
  const auto r = DomainMask::rectangle(g);
  CHECK(boundary_param(r, {0.25, 0.0}).segment == 0);
  CHECK(boundary_param(r, {0.25, 0.0}).s == doctest::Approx(0.25));
  CHECK(boundary_param(r, {1.0, 0.6}).segment == 1);
  CHECK(boundary_param(r, {0.3, 1.0}).segment == 2);
  CHECK(boundary_param(r, {0.0, 0.2}).segment == 3);
  const auto d = DomainMask::disk(g, {0.5, 0.5}, 0.4);
  CHECK(boundary_param(d, {0.5, 0.9}).s == doctest::Approx(0.4 * M_PI / 2));
}

TEST_CASE("characteristics that never leave are reported with their nodes") {
  const auto g = GridSpec::unit_square(17);
  const auto m = DomainMask::rectangle(g);
  VectorField beta(g);
  for (std::size_t k = 0; k < g.size(); ++k) beta.set(k, Vec2{0.5, 0.5} - g.node(k));   // sink at the centre
  const auto c = TransportCoefficients::from_fields(beta, ScalarField(g, 0.0), m);
  try {
    solve_transport(c, BoundaryValues<double>(m.boundary_nodes().size(), 1.0), m);
    FAIL("expected a reconstruction-domain error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::reconstruction_domain);
    CHECK(std::string(e.what()).find("(0,0)stalled") != std::string::npos);
  }
  CHECK_THROWS_AS(solve_transport(constant(m, {1, 0}, 0), BoundaryValues<double>(m.boundary_nodes().size(), -1.0), m),
                  Error);
}
