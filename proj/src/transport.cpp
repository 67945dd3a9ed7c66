#include "qpat/transport.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "qpat/field_io.hpp"

namespace qpat {

const char* to_string(PathStatus s) {
  switch (s) {
    case PathStatus::exited: return "exited";
    case PathStatus::max_time_exceeded: return "max-time-exceeded";
    case PathStatus::stalled: return "stalled";
  }
  return "?";
}

namespace {

struct State {
  Vec2 p;
  double i = 0.0;
};

struct Rhs {
  const VectorField& beta;
  ScalarField bx, by;
  const ScalarField& gamma;

  Rhs(const VectorField& b, const ScalarField& g)
      : beta(b), bx(b.grid, b.x), by(b.grid, b.y), gamma(g) {}

  Vec2 b(Vec2 p) const { return {sample_bilinear_clamped(bx, p), sample_bilinear_clamped(by, p)}; }
  double g(Vec2 p) const { return sample_bilinear_clamped(gamma, p); }
};

State rk4(const Rhs& f, State s, double h) {
  const Vec2 k1 = f.b(s.p);
  const double g1 = f.g(s.p);
  const Vec2 p2 = s.p + 0.5 * h * k1;
  const Vec2 k2 = f.b(p2);
  const double g2 = f.g(p2);
  const Vec2 p3 = s.p + 0.5 * h * k2;
  const Vec2 k3 = f.b(p3);
  const double g3 = f.g(p3);
  const Vec2 p4 = s.p + h * k3;
  const Vec2 k4 = f.b(p4);
  const double g4 = f.g(p4);
  return {s.p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), s.i + h / 6.0 * (g1 + 2 * g2 + 2 * g3 + g4)};
}

CharPath trace(const Rhs& f, Vec2 x, const DomainMask& mask, const TraceSettings& s, bool record) {
  CharPath path;
  path.start = x;
  State st{x, 0.0};
  double t = 0.0;
  auto keep = [&](Vec2 p, double tt) {
    if (!record) return;
    path.points.push_back(p);
    path.times.push_back(tt);
    path.gamma_samples.push_back(f.g(p));
  };
  keep(x, 0.0);
  while (true) {
    if (norm(f.b(st.p)) < s.beta_min) {
      path.status = PathStatus::stalled;
      path.exit = st.p;
      path.t_exit = t;
      path.gamma_integral = st.i;
      return path;
    }
    if (t >= s.t_max) {
      path.status = PathStatus::max_time_exceeded;
      path.exit = st.p;
      path.t_exit = t;
      path.gamma_integral = st.i;
      return path;
    }
    const State next = rk4(f, st, s.h_ode);
    if (mask.shape_contains(next.p)) {
      st = next;
      t += s.h_ode;
      keep(st.p, t);
      continue;
    }
    double lo = 0.0, hi = 1.0;
    State in = st;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      const State trial = rk4(f, st, mid * s.h_ode);
      if (mask.shape_contains(trial.p)) {
        lo = mid;
        in = trial;
      } else {
        hi = mid;
      }
    }
    path.status = PathStatus::exited;
    path.exit = in.p;
    path.t_exit = t + lo * s.h_ode;
    path.gamma_integral = in.i;
    path.hit = mask.locate(in.p);
    keep(in.p, path.t_exit);
    return path;
  }
}

}  // namespace


BoundaryParam boundary_param(const DomainMask& mask, Vec2 p) {
  const auto& g = mask.grid();
  if (mask.shape() == MaskShape::disk) {
    const Vec2 r = p - mask.center();
    double th = std::atan2(r.y, r.x);
    if (th < 0.0) th += 2.0 * M_PI;
    return {0, mask.radius() * th};
  }
  const double d[4] = {p.y - g.y0, g.x1() - p.x, g.y1() - p.y, p.x - g.x0};
  const int e = static_cast<int>(std::min_element(d, d + 4) - d);
  switch (e) {
    case 0: return {0, p.x - g.x0};
    case 1: return {1, p.y - g.y0};
    case 2: return {2, g.x1() - p.x};
    default: return {3, g.y1() - p.y};
  }
}

ExitProfile::ExitProfile(const VectorField& beta, const ScalarField& gamma, const DomainMask& mask,
                         const BoundaryValues<double>& mu0, const TraceSettings& settings)
    : mask_(mask) {
  const Rhs f(beta, gamma);
  const auto& g = mask.grid();
  const auto bnodes = mask.boundary_nodes();
  auto add = [&](BoundaryParam bp, double t, double v) {
    segments_[static_cast<std::size_t>(bp.segment)].push_back({bp.s, t, v});
  };
  const double tol = 1e-9 * (g.dx + g.dy);
  for (std::size_t b = 0; b < bnodes.size(); ++b) {
    if (mask.shape() == MaskShape::rectangle) {
      // the nodes sit on the edges themselves; corners serve both edges.
      // Tracing them would let nodes on a characteristic face carry a long
      // path integral against data that need not be consistent with it.
      const Vec2 x = g.node(bnodes[b]);
      if (std::abs(x.y - g.y0) < tol) add({0, x.x - g.x0}, 0.0, mu0[b]);
      if (std::abs(x.x - g.x1()) < tol) add({1, x.y - g.y0}, 0.0, mu0[b]);
      if (std::abs(x.y - g.y1()) < tol) add({2, g.x1() - x.x}, 0.0, mu0[b]);
      if (std::abs(x.x - g.x0) < tol) add({3, g.y1() - x.y}, 0.0, mu0[b]);
      continue;
    }
    const CharPath p = trace(f, g.node(bnodes[b]), mask, settings, false);
    if (p.status != PathStatus::exited) continue;
    add(boundary_param(mask, p.exit), p.t_exit, mu0[b] * std::exp(-p.gamma_integral));
  }
  period_ = mask.shape() == MaskShape::disk ? 2.0 * M_PI * mask.radius() : 0.0;
  radius_ = 5.0 * std::max(g.dx, g.dy);
  for (auto& seg : segments_)
    std::sort(seg.begin(), seg.end(), [](const Sample& a, const Sample& b) { return a.s < b.s; });
  // time scale: the time to cross one cell at the median boundary speed
  std::vector<double> speeds;
  for (std::size_t k : bnodes) speeds.push_back(norm(beta.at(k)));
  std::nth_element(speeds.begin(), speeds.begin() + speeds.size() / 2, speeds.end());
  t_scale_ = std::max(g.dx, g.dy) / std::max(speeds[speeds.size() / 2], 1e-300);
}

std::size_t ExitProfile::sample_count() const {
  std::size_t n = 0;
  for (const auto& seg : segments_) n += seg.size();
  return n;
}

double ExitProfile::operator()(Vec2 p) const {
  const BoundaryParam bp = boundary_param(mask_, p);
  const auto& seg = segments_[static_cast<std::size_t>(bp.segment)];
  require(!seg.empty(), ErrorKind::geometry, "no boundary samples on the exit segment");
  // weighted fit of 1, r, r^2 in arclength and t in path time; the value at
  // r = 0, t = 0 is the boundary value with the band's integration error
  // (roughly proportional to t) regressed out
  constexpr int NB = 4;
  double A[NB][NB] = {}, rhs[NB] = {};
  double wsum = 0.0;
  for (const Sample& smp : seg) {
    double d = smp.s - bp.s;
    if (period_ > 0.0) d -= period_ * std::round(d / period_);
    const double r = d / radius_;
    if (std::abs(r) >= 1.0) continue;
    const double w = std::pow(1.0 - r * r, 4);
    const double tt = smp.t / t_scale_;
    const double phi[NB] = {1.0, r, r * r, tt};
    for (int a = 0; a < NB; ++a) {
      rhs[a] += w * phi[a] * smp.value;
      for (int c = 0; c < NB; ++c) A[a][c] += w * phi[a] * phi[c];
    }
    wsum += w;
  }
  require(wsum > 0.0, ErrorKind::geometry, "no boundary samples near an exit point");
  for (int a = 1; a < NB; ++a) A[a][a] += 1e-10 * wsum;
  double L[NB][NB] = {};
  for (int a = 0; a < NB; ++a) {
    for (int c = 0; c <= a; ++c) {
      double sum = A[a][c];
      for (int k = 0; k < c; ++k) sum -= L[a][k] * L[c][k];
      if (a == c) {
        require(sum > 0.0, ErrorKind::singular, "boundary profile fit is not positive definite");
        L[a][a] = std::sqrt(sum);
      } else {
        L[a][c] = sum / L[c][c];
      }
    }
  }
  double y[NB], x[NB];
  for (int a = 0; a < NB; ++a) {
    double sum = rhs[a];
    for (int k = 0; k < a; ++k) sum -= L[a][k] * y[k];
    y[a] = sum / L[a][a];
  }
  for (int a = NB - 1; a >= 0; --a) {
    double sum = y[a];
    for (int k = a + 1; k < NB; ++k) sum -= L[k][a] * x[k];
    x[a] = sum / L[a][a];
  }
  return x[0];
}

CharPath trace_characteristic(const VectorField& beta, const ScalarField& gamma, Vec2 x,
                              const DomainMask& mask, const TraceSettings& s, bool record) {
  require(beta.grid == mask.grid() && gamma.grid == mask.grid(), ErrorKind::dimension,
          "trace_characteristic: field and mask grids differ");
  require(s.h_ode > 0.0 && s.t_max > 0.0 && s.beta_min >= 0.0, ErrorKind::configuration,
          "trace_characteristic: h_ode and t_max must be positive");
  require(mask.shape_contains(x), ErrorKind::geometry, "trace_characteristic: start point outside the domain");
  const Rhs f(beta, gamma);
  return trace(f, x, mask, s, record);
}

TraceSettings resolve_settings(const TransportCoefficients& c, const DomainMask& mask,
                               const TransportOptions& opt) {
  std::vector<double> mags;
  for (std::size_t k = 0; k < c.valid.size(); ++k)
    if (c.valid[k]) mags.push_back(norm(c.beta.at(k)));
  require(!mags.empty(), ErrorKind::geometry, "transport: no valid nodes");
  const double bmax = *std::max_element(mags.begin(), mags.end());
  const auto mid = mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2);
  std::nth_element(mags.begin(), mid, mags.end());
  const double median = *mid;
  require(bmax > 0.0 && std::isfinite(bmax), ErrorKind::degeneracy, "transport: beta vanishes identically");
  const auto& g = mask.grid();
  TraceSettings s;
  s.h_ode = opt.h_ode.value_or(0.5 * std::min(g.dx, g.dy) / bmax);
  const double ref = median > 0.0 ? median : bmax;
  s.t_max = opt.t_max.value_or(10.0 * mask.diameter() / ref);
  s.beta_min = opt.beta_min.value_or(1e-3 * ref);
  require(s.h_ode > 0.0 && s.t_max > 0.0 && s.beta_min >= 0.0, ErrorKind::configuration,
          "transport: h_ode and t_max must be positive");
  return s;
}

ScalarField solve_transport(const TransportCoefficients& c, const BoundaryValues<double>& mu0,
                            const DomainMask& mask, const TransportOptions& opt, TransportReport* report) {
  const auto& g = mask.grid();
  require(c.beta.grid == g && c.gamma.grid == g, ErrorKind::dimension, "solve_transport: grids differ");
  const auto bnodes = mask.boundary_nodes();
  require(mu0.size() == bnodes.size(), ErrorKind::dimension, "solve_transport: mu0 length differs from the boundary");
  for (double v : mu0)
    if (!(v > 0.0)) fail(ErrorKind::domain, "solve_transport: boundary values must be positive");

  const TraceSettings s = resolve_settings(c, mask, opt);
  const Rhs f(c.beta, c.gamma);
  const ExitProfile fit(c.beta, c.gamma, mask, mu0, s);
  ScalarField mu(g);
  std::vector<std::uint8_t> done(g.size(), 0);
  if (!opt.trace_boundary)
    for (std::size_t b = 0; b < bnodes.size(); ++b) {
      mu[bnodes[b]] = mu0[b];
      done[bnodes[b]] = 1;
    }
  TransportReport rep;
  rep.settings = s;
  std::vector<std::pair<std::size_t, PathStatus>> failed;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!mask.inside(k) || done[k]) continue;
    const CharPath p = trace(f, g.node(k), mask, s, false);
    if (p.status != PathStatus::exited) {
      failed.emplace_back(k, p.status);
      continue;
    }
    const double m0 = fit(p.exit);
    if (!(m0 > 0.0)) fail(ErrorKind::domain, "solve_transport: interpolated boundary value is not positive at an exit point");
    mu[k] = m0 * std::exp(p.gamma_integral);
    done[k] = 1;
    rep.nodes.push_back(k);
    rep.exit_time.push_back(p.t_exit);
    rep.exit_flux.push_back(dot(mask.outward_normal(p.exit), f.b(p.exit)));
    rep.max_exit_time = std::max(rep.max_exit_time, p.t_exit);
  }
  if (!failed.empty()) {
    std::size_t stalled = 0;
    for (const auto& fp : failed) stalled += fp.second == PathStatus::stalled;
    std::string msg = std::to_string(failed.size()) + " characteristic(s) did not reach the boundary (" +
                      std::to_string(stalled) + " stalled, " + std::to_string(failed.size() - stalled) +
                      " max-time-exceeded); nodes:";
    for (std::size_t i = 0; i < std::min<std::size_t>(failed.size(), 20); ++i)
      msg += " (" + std::to_string(g.col(failed[i].first)) + "," + std::to_string(g.row(failed[i].first)) +
             ")" + (failed[i].second == PathStatus::stalled ? "stalled" : "max-time");
    if (failed.size() > 20) msg += " ...";
    fail(ErrorKind::reconstruction_domain, msg);
  }
  fill_invalid(mu, done);

  Vec2 mean;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (c.valid[k]) mean = mean + c.beta.at(k);
  if (norm(mean) > 0.0) {
    const Vec2 e = (1.0 / norm(mean)) * mean;
    double z = INFINITY;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (c.valid[k]) z = std::min(z, dot(c.beta.at(k), e));
    rep.zeta = std::max(0.0, z);
  }
  if (report) *report = std::move(rep);
  return mu;
}

void write_paths_csv(std::ostream& os, const GridSpec& grid, const std::vector<CharPath>& paths) {
  io::CsvWriter w(os);
  w.row({"node_i", "node_j", "t", "x", "y", "gamma_sample"});
  for (const auto& p : paths) {
    const int i = static_cast<int>(std::lround((p.start.x - grid.x0) / grid.dx));
    const int j = static_cast<int>(std::lround((p.start.y - grid.y0) / grid.dy));
    for (std::size_t s = 0; s < p.points.size(); ++s)
      w.row({std::to_string(i), std::to_string(j), io::format_double(p.times[s]), io::format_double(p.points[s].x),
             io::format_double(p.points[s].y), io::format_double(p.gamma_samples[s])});
  }
}

}  // namespace qpat
