#include "qpat/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "qpat/field_io.hpp"

namespace qpat {

const char* to_string(Route r) { return r == Route::two_data ? "two-data" : "multi-data"; }
const char* to_string(MuMode m) { return m == MuMode::poisson ? "poisson" : "path"; }

namespace {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw e.with_stage(name);
  }
}

std::vector<std::uint8_t> rim_free(const GridSpec& g) {
  std::vector<std::uint8_t> v(g.size(), 0);
  for (int j = 1; j + 1 < g.ny; ++j)
    for (int i = 1; i + 1 < g.nx; ++i) v[g.index(i, j)] = 1;
  return v;
}

}  // namespace

ComplexField recover_u(const InternalData& data, const ScalarField& mu, const DomainMask& mask) {
  require(data.d.grid == mu.grid && mu.grid == mask.grid(), ErrorKind::dimension, "recover_u: grids differ");
  ComplexField u(mu.grid);
  for (std::size_t k = 0; k < mu.size(); ++k) {
    if (!mask.inside(k)) continue;
    if (!(mu[k] > 0.0)) fail(ErrorKind::domain, "recover_u: mu must be positive on the domain");
    u[k] = data.d[k] / mu[k];
  }
  return u;
}

ScalarField recover_q(const ComplexField& u, const DomainMask& mask, double u_min, double* min_abs_u) {
  require(u.grid == mask.grid(), ErrorKind::dimension, "recover_q: grids differ");
  const auto lap = laplacian(u);
  ScalarField q(u.grid);
  double umin = INFINITY;
  std::size_t worst = 0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!mask.interior(k)) continue;
    const double a2 = std::norm(u[k]);
    if (std::sqrt(a2) < umin) {
      umin = std::sqrt(a2);
      worst = k;
    }
    q[k] = -std::real(std::conj(u[k]) * lap[k]) / a2;
  }
  if (min_abs_u) *min_abs_u = umin;
  if (!(umin >= u_min)) {
    const auto& g = u.grid;
    fail(ErrorKind::vanishing_solution, "|u| = " + std::to_string(umin) + " below u_min at node (" +
                                            std::to_string(g.col(worst)) + "," + std::to_string(g.row(worst)) + ")");
  }
  fill_invalid(q, mask.interior_flags());
  return q;
}

ScalarField recover_sqrtD(const ScalarField& q, const ScalarField& mu, const BoundaryValues<double>& bc,
                          const DomainMask& mask, const LinearSolveConfig& cfg, SolveStats* stats) {
  for (double v : bc)
    if (!(v > 0.0)) fail(ErrorKind::domain, "recover_sqrtD: boundary values must be positive");
  ScalarField w = solve_shifted(q, mu, bc, mask, cfg, stats);
  for (std::size_t k = 0; k < w.size(); ++k)
    if (mask.inside(k) && !(w[k] > 0.0)) {
      const auto& g = w.grid;
      fail(ErrorKind::model_violation, "recovered sqrt(D) is not positive at node (" + std::to_string(g.col(k)) +
                                           "," + std::to_string(g.row(k)) + ")");
    }
  std::vector<std::uint8_t> inside = mask.inside_flags();
  fill_invalid(w, inside);
  return w;
}

ScalarField recover_sigma(const ScalarField& mu, const ScalarField& sqrtD) {
  require(mu.grid == sqrtD.grid, ErrorKind::dimension, "recover_sigma: grids differ");
  ScalarField s(mu.grid);
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (!(mu[k] > 0.0) || !(sqrtD[k] > 0.0)) fail(ErrorKind::domain, "recover_sigma: inputs must be positive");
    s[k] = mu[k] * sqrtD[k];
  }
  return s;
}

Liouville liouville_forward(const ScalarField& D, const ScalarField& sigma_a) {
  require(D.grid == sigma_a.grid, ErrorKind::dimension, "liouville_forward: grids differ");
  Liouville l;
  l.sqrtD = ScalarField(D.grid);
  for (std::size_t k = 0; k < D.size(); ++k) {
    if (!(D[k] > 0.0)) fail(ErrorKind::domain, "liouville_forward: D must be positive");
    l.sqrtD[k] = std::sqrt(D[k]);
  }
  const auto lap = laplacian(l.sqrtD);
  l.q = ScalarField(D.grid);
  l.mu = ScalarField(D.grid);
  for (std::size_t k = 0; k < D.size(); ++k) {
    l.q[k] = -lap[k] / l.sqrtD[k] - sigma_a[k] / D[k];
    l.mu[k] = sigma_a[k] / l.sqrtD[k];
  }
  fill_invalid(l.q, rim_free(D.grid));
  return l;
}

double liouville_residual(const Liouville& l, const ComplexField& u, const DomainMask& mask) {
  ComplexField v(u.grid);
  for (std::size_t k = 0; k < u.size(); ++k) v[k] = l.sqrtD[k] * u[k];
  const auto lap = laplacian(v);
  double r = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k)
    if (mask.interior(k)) r = std::max(r, std::abs(lap[k] + l.q[k] * v[k]));
  return r;
}

std::size_t path_anchor(const DomainMask& mask) {
  const auto nodes = mask.boundary_nodes();
  const auto& g = mask.grid();
  const double cx = mask.center().x;
  std::size_t best = nodes[0];
  for (std::size_t n : nodes) {
    const int jb = g.row(best), jn = g.row(n);
    if (jn < jb || (jn == jb && std::abs(g.x(g.col(n)) - cx) < std::abs(g.x(g.col(best)) - cx))) best = n;
  }
  return best;
}

ScalarField mu_from_gradient(const GradientCoefficient& G, const BoundaryValues<double>& mu0,
                             const DomainMask& mask, MuMode mode, const LinearSolveConfig& cfg,
                             double* residual) {
  const auto& g = mask.grid();
  require(G.Gamma.grid == g, ErrorKind::dimension, "mu_from_gradient: grids differ");
  const auto bnodes = mask.boundary_nodes();
  require(mu0.size() == bnodes.size(), ErrorKind::dimension, "mu_from_gradient: mu0 length differs from the boundary");
  for (double v : mu0)
    if (!(v > 0.0)) fail(ErrorKind::domain, "mu_from_gradient: boundary values must be positive");
  ScalarField w(g);
  if (mode == MuMode::poisson) {
    // lap w = -div Gamma, i.e. -lap w = div Gamma
    const auto div = divergence(G.Gamma);
    BoundaryValues<double> bc(mu0.size());
    for (std::size_t b = 0; b < mu0.size(); ++b) bc[b] = std::log(mu0[b]);
    SolveStats st;
    w = solve_shifted(ScalarField(g), div, bc, mask, cfg, &st);
    if (residual) *residual = st.rel_residual;
  } else {
    const std::size_t a = path_anchor(mask);
    std::size_t ab = 0;
    while (bnodes[ab] != a) ++ab;
    const int i0 = g.col(a);
    std::vector<std::uint8_t> set(g.size(), 0);
    w[a] = std::log(mu0[ab]);
    set[a] = 1;
    // up the anchor column, then along each row
    for (int j = g.row(a) + 1; j < g.ny && mask.inside(g.index(i0, j)); ++j) {
      const std::size_t k = g.index(i0, j);
      w[k] = w[k - g.nx] - 0.5 * g.dy * (G.Gamma.y[k] + G.Gamma.y[k - g.nx]);
      set[k] = 1;
    }
    for (int j = 0; j < g.ny; ++j) {
      if (!set[g.index(i0, j)]) continue;
      for (int i = i0 + 1; i < g.nx && mask.inside(g.index(i, j)); ++i) {
        const std::size_t k = g.index(i, j);
        w[k] = w[k - 1] - 0.5 * g.dx * (G.Gamma.x[k] + G.Gamma.x[k - 1]);
        set[k] = 1;
      }
      for (int i = i0 - 1; i >= 0 && mask.inside(g.index(i, j)); --i) {
        const std::size_t k = g.index(i, j);
        w[k] = w[k + 1] + 0.5 * g.dx * (G.Gamma.x[k] + G.Gamma.x[k + 1]);
        set[k] = 1;
      }
    }
    for (std::size_t k = 0; k < g.size(); ++k)
      require(!mask.inside(k) || set[k], ErrorKind::geometry, "path integration does not reach every domain node");
    if (residual) *residual = 0.0;
  }
  ScalarField mu(g);
  std::vector<std::uint8_t> inside = mask.inside_flags();
  for (std::size_t k = 0; k < g.size(); ++k)
    if (inside[k]) mu[k] = std::exp(w[k]);
  fill_invalid(mu, inside);
  return mu;
}

namespace {

void finish_chain(ReconResult& r, const std::vector<const InternalData*>& data,
                  const BoundaryValues<double>& sqrtD_boundary, const DomainMask& mask,
                  const PipelineConfig& cfg) {
  std::vector<ComplexField> us;
  stage("recover_u", [&] {
    for (const auto* d : data) us.push_back(recover_u(*d, r.mu, mask));
    return 0;
  });
  r.q = stage("recover_q", [&] {
    ScalarField q(mask.grid());
    r.diag.min_abs_u = INFINITY;
    for (const auto& u : us) {
      const double umax = max_abs(u, mask.interior_flags());
      double umin = 0.0;
      const auto qj = recover_q(u, mask, cfg.u_min_rel * umax, &umin);
      r.diag.min_abs_u = std::min(r.diag.min_abs_u, umin);
      for (std::size_t k = 0; k < q.size(); ++k) q[k] += qj[k] / static_cast<double>(us.size());
    }
    return q;
  });
  SolveStats st;
  r.sqrtD = stage("recover_sqrtD", [&] { return recover_sqrtD(r.q, r.mu, sqrtD_boundary, mask, cfg.linear, &st); });
  r.diag.sqrtD_residual = st.rel_residual;
  r.sigma_a = stage("recover_sigma", [&] { return recover_sigma(r.mu, r.sqrtD); });
  r.D = ScalarField(mask.grid());
  for (std::size_t k = 0; k < r.D.size(); ++k) r.D[k] = r.sqrtD[k] * r.sqrtD[k];
}

}  // namespace

ReconResult run_two_data(const InternalData& data, const BoundaryValues<double>& sqrtD_boundary,
                         const DomainMask& mask, const PipelineConfig& cfg) {
  ReconResult r;
  r.route = Route::two_data;
  const auto coeffs = stage("beta_gamma_two", [&] { return beta_gamma_two(data, mask); });
  r.diag.flatness_gap = coeffs.flatness_gap;
  const auto mu0 = stage("boundary_mu", [&] { return boundary_mu(data, mask); });
  r.diag.mu0_imag = mu0.max_imag;
  TransportReport rep;
  r.mu = stage("solve_transport", [&] { return solve_transport(coeffs, mu0.mu0, mask, cfg.transport, &rep); });
  r.diag.zeta = rep.zeta;
  r.diag.max_exit_time = rep.max_exit_time;
  r.diag.transport_residual = transport_residual(coeffs, r.mu);
  finish_chain(r, {&data}, sqrtD_boundary, mask, cfg);
  return r;
}

ReconResult run_multi_data(const std::vector<InternalData>& data, const BoundaryValues<double>& sqrtD_boundary,
                           const DomainMask& mask, const PipelineConfig& cfg) {
  ReconResult r;
  r.route = Route::multi_data;
  r.mu_mode = cfg.mu_mode;
  const auto coeffs = stage("beta_gamma_multi", [&] { return beta_gamma_multi(data, mask); });
  r.diag.flatness_gap = coeffs[1].flatness_gap;
  const auto G = stage("assemble_gamma", [&] { return assemble_gamma(coeffs, cfg.cond_max); });
  r.diag.condition_max = G.condition_max;
  r.diag.curl_residual = G.curl_residual;
  if (G.curl_residual > cfg.curl_warn)
    r.diag.warnings.push_back("curl(Gamma) = " + io::format_double(G.curl_residual) +
                              " exceeds " + io::format_double(cfg.curl_warn) + ": data may be inconsistent");
  const auto mu0 = stage("boundary_mu", [&] { return boundary_mu(data[1], mask); });
  r.diag.mu0_imag = mu0.max_imag;
  r.mu = stage("mu_from_gradient", [&] {
    return mu_from_gradient(G, mu0.mu0, mask, cfg.mu_mode, cfg.linear, &r.diag.poisson_residual);
  });
  finish_chain(r, {&data[0], &data[1]}, sqrtD_boundary, mask, cfg);
  return r;
}

void save_recon(const std::filesystem::path& dir, const ReconResult& r) {
  std::filesystem::create_directories(dir);
  io::write_pfg(dir / "mu.pfg", r.mu);
  io::write_pfg(dir / "q.pfg", r.q);
  io::write_pfg(dir / "sqrtD.pfg", r.sqrtD);
  io::write_pfg(dir / "D.pfg", r.D);
  io::write_pfg(dir / "sigma_a.pfg", r.sigma_a);
  io::Manifest m;
  m["route"] = to_string(r.route);
  m["mu_mode"] = to_string(r.mu_mode);
  m["warnings"] = std::to_string(r.diag.warnings.size());
  io::write_manifest(dir / "manifest.txt", m);
  std::ofstream os(dir / "diagnostics.csv", std::ios::binary);
  require(static_cast<bool>(os), ErrorKind::io, "cannot write " + (dir / "diagnostics.csv").string());
  io::CsvWriter w(os);
  const auto& d = r.diag;
  w.row({"diagnostic", "value"});
  w.row({"min_abs_u", io::format_double(d.min_abs_u)});
  w.row({"mu0_imag", io::format_double(d.mu0_imag)});
  w.row({"transport_residual", io::format_double(d.transport_residual)});
  w.row({"poisson_residual", io::format_double(d.poisson_residual)});
  w.row({"sqrtD_residual", io::format_double(d.sqrtD_residual)});
  w.row({"curl_residual", io::format_double(d.curl_residual)});
  w.row({"condition_max", io::format_double(d.condition_max)});
  w.row({"flatness_gap", io::format_double(d.flatness_gap)});
  w.row({"zeta", io::format_double(d.zeta)});
  w.row({"max_exit_time", io::format_double(d.max_exit_time)});
  for (const auto& s : d.warnings) w.row({"warning", s});
}

}  // namespace qpat
