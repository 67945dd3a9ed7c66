#include "qpat/cgo.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <string>

#include <fftw3.h>

namespace qpat {

CGOParams CGOParams::from_kappa(Vec2 kappa) {
  CGOParams p{kappa, rot90(kappa)};
  p.validate();
  return p;
}

cplx CGOParams::rho_dot_rho() const {
  const auto r = rho();
  return r[0] * r[0] + r[1] * r[1];
}

void CGOParams::validate() const {
  const double a = norm(kappa), b = norm(kperp);
  require(a > 0.0 && std::isfinite(a), ErrorKind::configuration, "|kappa| must be positive");
  require(std::abs(a - b) <= 1e-12 * a && std::abs(dot(kappa, kperp)) <= 1e-12 * a * a,
          ErrorKind::configuration, "kperp must be orthogonal to kappa with the same length");
}

namespace {

double smoothstep5(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * s * (s * (6.0 * s - 15.0) + 10.0);
}

GridSpec padded_grid(const GridSpec& g, int pad) {
  return {g.nx + 2 * pad, g.ny + 2 * pad, g.x0 - pad * g.dx, g.y0 - pad * g.dy, g.dx, g.dy};
}

void check_envelope(const CGOParams& p, const GridSpec& g, Vec2 c) {
  double m = 0.0;
  for (Vec2 corner : {g.lo(), g.hi(), Vec2{g.x0, g.y1()}, Vec2{g.x1(), g.y0}})
    m = std::max(m, std::abs(dot(p.kappa, corner - c)));
  require(m <= 700.0, ErrorKind::overflow,
          "exp(kappa.(x - xc)) overflows (exponent " + std::to_string(m) +
              "); recentre the domain or lower |kappa|");
}

// Inverse of the discrete lap + 2 rho.grad on the padded box taken as a
// periodic lattice. Fourier modes are exact eigenfunctions of the stencil,
// so G f satisfies the stencil equation to round-off at every node whose
// stencil does not wrap. The zero mode, which the periodic operator cannot
// produce, is carried by the exact linear solution m kappa_hat.(x - xc)/(2|kappa|).
class PsiGreen {
 public:
  PsiGreen(const GridSpec& g, const CGOParams& p, Vec2 center) : n_(g.size()) {
    const auto rho = p.rho();
    inv_symbol_.resize(n_);
    lin_.resize(n_);
    two_k_ = 2.0 * p.magnitude();
    const Vec2 khat = (1.0 / p.magnitude()) * p.kappa;
    double smax = 0.0, smin = std::numeric_limits<double>::infinity();
    const double pi2 = 2.0 * std::numbers::pi;
    for (int j = 0; j < g.ny; ++j) {
      const int fj = j <= g.ny / 2 ? j : j - g.ny;
      const double ty = pi2 * fj / g.ny;
      for (int i = 0; i < g.nx; ++i) {
        const int fi = i <= g.nx / 2 ? i : i - g.nx;
        const double tx = pi2 * fi / g.nx;
        const std::size_t k = g.index(i, j);
        lin_[k] = dot(khat, g.node(i, j) - center);
        const cplx sym = cplx((2.0 * std::cos(tx) - 2.0) / (g.dx * g.dx) +
                                  (2.0 * std::cos(ty) - 2.0) / (g.dy * g.dy),
                              0.0) +
                         2.0 * cplx(0.0, 1.0) *
                             (rho[0] * std::sin(tx) / g.dx + rho[1] * std::sin(ty) / g.dy);
        if (k == 0) continue;
        smax = std::max(smax, std::abs(sym));
        smin = std::min(smin, std::abs(sym));
        inv_symbol_[k] = 1.0 / (sym * double(n_));
      }
    }
    if (!(smin > 1e-12 * smax))
      fail(ErrorKind::singular, "a lattice frequency of the padded box lies on the characteristic "
                                "set of lap + 2 rho.grad; change the pad or |kappa|");
    buf_ = fftw_alloc_complex(n_);
    // The lattice is stored with x fastest, i.e. as an ny-by-nx row-major array.
    fwd_ = fftw_plan_dft_2d(g.ny, g.nx, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_2d(g.ny, g.nx, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  PsiGreen(const PsiGreen&) = delete;
  PsiGreen& operator=(const PsiGreen&) = delete;
  ~PsiGreen() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }

  void apply(const std::vector<cplx>& f, std::vector<cplx>& out) const {
    auto* b = reinterpret_cast<cplx*>(buf_);
    std::copy(f.begin(), f.end(), b);
    fftw_execute(fwd_);
    const cplx mean = b[0] / double(n_);
    for (std::size_t k = 0; k < n_; ++k) b[k] *= inv_symbol_[k];
    fftw_execute(bwd_);
    out.resize(n_);
    const cplx a = mean / two_k_;
    for (std::size_t k = 0; k < n_; ++k) out[k] = b[k] + a * lin_[k];
  }

 private:
  std::size_t n_;
  std::vector<cplx> inv_symbol_;
  std::vector<double> lin_;
  double two_k_ = 1.0;
  fftw_complex* buf_ = nullptr;
  fftw_plan fwd_{};
  fftw_plan bwd_{};
};

}  // namespace

PaddedPotential extend_potential(const ScalarField& q, const DomainMask& mask,
                                 std::optional<int> pad_cells, std::optional<double> taper_width) {
  const GridSpec& g = mask.grid();
  require(q.grid == g, ErrorKind::dimension, "q and mask live on different grids");
  const double width = std::max(g.x1() - g.x0, g.y1() - g.y0);
  const int pad = pad_cells.value_or(static_cast<int>(std::lround(0.5 * width / std::min(g.dx, g.dy))));
  const double taper = taper_width.value_or(0.25 * width);
  require(taper > 0.0, ErrorKind::geometry, "taper width must be positive");
  require(pad >= taper / std::min(g.dx, g.dy) + 2.0, ErrorKind::geometry,
          "pad of " + std::to_string(pad) + " cells is too small for a taper of width " +
              std::to_string(taper) + " (needs taper/dx + 2 cells)");

  ScalarField filled = q;
  fill_invalid(filled, mask.inside_flags());
  double qmin = 0.0, qmax = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (!mask.inside(k)) continue;
    require(std::isfinite(q.values[k]), ErrorKind::domain, "q is not finite at node " + std::to_string(k));
    qmin = std::min(qmin, q.values[k]);
    qmax = std::max(qmax, q.values[k]);
  }

  PaddedPotential out;
  out.domain_grid = g;
  out.pad_cells = pad;
  out.taper_width = taper;
  out.center = mask.center();
  out.q = ScalarField(padded_grid(g, pad));
  const GridSpec& pg = out.q.grid;
  for (std::size_t k = 0; k < pg.size(); ++k) {
    const Vec2 p = pg.node(k);
    const double d = mask.distance_outside(p);
    if (d >= taper) continue;
    const int i = pg.col(k) - pad, j = pg.row(k) - pad;
    const bool on_domain = i >= 0 && j >= 0 && i < g.nx && j < g.ny;
    if (on_domain && mask.inside(g.index(i, j))) {
      out.q.values[k] = q.values[g.index(i, j)];
      continue;
    }
    const double v = std::clamp(sample_bilinear_clamped(filled, mask.project(p)), qmin, qmax);
    out.q.values[k] = (1.0 - smoothstep5(d / taper)) * v;
  }
  return out;
}

ComplexField solve_psi(const PaddedPotential& qp, const CGOParams& params,
                       const LinearSolveConfig& cfg, SolveStats* stats) {
  params.validate();
  cfg.validate();
  const GridSpec& g = qp.q.grid;
  const PsiGreen green(g, params, qp.center);
  const std::vector<double>& q = qp.q.values;
  std::vector<cplx> b(g.size()), tmp(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) tmp[k] = -q[k];
  green.apply(tmp, b);
  // psi + G(q psi) = -G(q)
  const linalg::LinearOperator<cplx> op = [&](const std::vector<cplx>& in, std::vector<cplx>& out) {
    std::vector<cplx> qin(in.size());
    for (std::size_t k = 0; k < in.size(); ++k) qin[k] = q[k] * in[k];
    green.apply(qin, out);
    for (std::size_t k = 0; k < in.size(); ++k) out[k] += in[k];
  };
  std::vector<cplx> psi = b;
  double rel = 0.0;
  const int it = linalg::bicgstab<cplx>(op, {}, b, psi, cfg.rel_tol, cfg.max_iter, &rel);
  if (stats) {
    stats->method = "periodic-fft";
    stats->unknowns = g.size();
    stats->iterations = it;
    stats->rel_residual = std::max(stats->rel_residual, rel);
  }
  if (!(rel <= cfg.rel_tol))
    fail(ErrorKind::iteration, "psi solve stalled at relative residual " + std::to_string(rel) +
                                   "; enlarge the pad or raise |kappa|");
  return ComplexField(g, std::move(psi));
}

BornSeries born_series_psi(const PaddedPotential& qp, const CGOParams& params, int jmax,
                           double tol, const LinearSolveConfig& cfg) {
  params.validate();
  cfg.validate();
  require(jmax >= 1 && tol > 0.0, ErrorKind::configuration, "Born series needs jmax >= 1 and tol > 0");
  const GridSpec& g = qp.q.grid;
  const PsiGreen green(g, params, qp.center);
  BornSeries out;
  out.psi = ComplexField(g);
  std::vector<cplx> prev(g.size(), cplx(1.0, 0.0)), rhs(g.size()), term;
  double prev_norm = 0.0;
  for (int j = 0; j < jmax; ++j) {
    for (std::size_t k = 0; k < g.size(); ++k) rhs[k] = -qp.q.values[k] * prev[k];
    green.apply(rhs, term);
    double tn = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      out.psi.values[k] += term[k];
      tn = std::max(tn, std::abs(term[k]));
    }
    out.term_norms.push_back(tn);
    out.terms = j + 1;
    if (j == 0) {
      out.psi0 = ComplexField(g, term);
    } else {
      out.contraction = prev_norm > 0.0 ? tn / prev_norm : 0.0;
      if (j >= 2 && out.contraction >= 1.0)
        fail(ErrorKind::divergence, "Born series diverges (term ratio " +
                                        std::to_string(out.contraction) +
                                        "); |kappa| is too small for this potential");
    }
    if (tn < tol * (1.0 + out.term_norms.front())) break;
    prev_norm = tn;
    prev.swap(term);
  }
  return out;
}

CGOSolution assemble_cgo(const PaddedPotential& qp, const CGOParams& params,
                         const ComplexField& psi, const DomainMask& mask) {
  params.validate();
  const GridSpec& g = mask.grid();
  require(psi.grid == qp.q.grid && qp.domain_grid == g, ErrorKind::dimension,
          "psi, padded potential and mask do not fit together");
  check_envelope(params, g, qp.center);
  CGOSolution s;
  s.params = params;
  s.center = qp.center;
  s.psi = psi;
  s.u = ComplexField(g);
  const int pad = qp.pad_cells;
  const auto rho = params.rho();
  const cplx rr = params.rho_dot_rho();
  const auto lap = laplacian(psi);
  const auto [px, py] = gradient(psi);
  double rmax = 0.0, umax = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      const std::size_t kp = psi.grid.index(i + pad, j + pad);
      const cplx env = std::exp(params.rho_dot(g.node(i, j) - qp.center));
      const cplx one_psi = 1.0 + psi.values[kp];
      s.u.values[k] = env * one_psi;
      if (!mask.interior(k)) continue;
      const cplx r = env * (rr * one_psi + 2.0 * (rho[0] * px.values[kp] + rho[1] * py.values[kp]) +
                            lap.values[kp] + qp.q.values[kp] * one_psi);
      rmax = std::max(rmax, std::abs(r));
      umax = std::max(umax, std::abs(s.u.values[k]));
    }
  }
  s.residual_norm = umax > 0.0 ? rmax / umax : 0.0;
  s.trace = boundary_trace(s.u, mask);
  return s;
}

CGOSolution make_cgo(const ScalarField& q, const DomainMask& mask, const CGOParams& params,
                     const LinearSolveConfig& cfg, SolveStats* stats) {
  const auto qp = extend_potential(q, mask);
  check_envelope(params, mask.grid(), qp.center);
  return assemble_cgo(qp, params, solve_psi(qp, params, cfg, stats), mask);
}

ComplexField cgo_field_on(const CGOSolution& sol, const GridSpec& target) {
  ComplexField out(target);
  for (std::size_t k = 0; k < target.size(); ++k) {
    const Vec2 p = target.node(k);
    out.values[k] = std::exp(sol.params.rho_dot(p - sol.center)) * (1.0 + sample_bilinear(sol.psi, p));
  }
  return out;
}

BoundaryValues<cplx> cgo_trace_on(const CGOSolution& sol, const DomainMask& target) {
  require(norm(target.center() - sol.center) <= 1e-12 * (1.0 + target.diameter()),
          ErrorKind::configuration, "target mask is centred elsewhere than the CGO envelope");
  BoundaryValues<cplx> out;
  for (std::size_t k : target.boundary_nodes()) {
    const Vec2 p = target.grid().node(k);
    out.push_back(std::exp(sol.params.rho_dot(p - sol.center)) * (1.0 + sample_bilinear(sol.psi, p)));
  }
  return out;
}

MultiRhoSet multi_rho_set(double kmag) {
  require(kmag > 0.0 && std::isfinite(kmag), ErrorKind::configuration, "kmag must be positive");
  MultiRhoSet s;
  s.rho2 = CGOParams::from_kappa({kmag, 0.0});
  s.rho1 = s.rho2.negated();
  return s;
}

}  // namespace qpat
