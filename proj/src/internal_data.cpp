#include "qpat/internal_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "qpat/field_io.hpp"

namespace qpat {

std::string Provenance::label() const {
  if (!noisy) return "clean";
  char buf[96];
  std::snprintf(buf, sizeof buf, "noisy(%.6g,%llu)", level, static_cast<unsigned long long>(seed));
  return buf;
}

InternalData synthesize(const ScalarField& mu, const ComplexField& u, const BoundaryValues<cplx>& g,
                        const CGOParams& params, Vec2 center, std::optional<double> g_min) {
  require(mu.grid == u.grid, ErrorKind::dimension, "synthesize: mu and u live on different grids");
  params.validate();
  InternalData out;
  out.d = ComplexField(u.grid);
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!(mu[k] > 0.0) || !std::isfinite(mu[k]))
      fail(ErrorKind::domain, "synthesize: mu must be positive at every node");
    out.d[k] = mu[k] * u[k];
    if (!std::isfinite(out.d[k].real()) || !std::isfinite(out.d[k].imag()))
      fail(ErrorKind::overflow, "synthesize: non-finite internal data");
  }
  double gmax = 0.0;
  for (const cplx& v : g) gmax = std::max(gmax, std::abs(v));
  out.g = g;
  out.params = params;
  out.center = center;
  out.g_min = g_min.value_or(1e-8 * gmax);
  require(out.g_min > 0.0, ErrorKind::division_hazard, "synthesize: illumination vanishes on the boundary");
  return out;
}

namespace {

std::vector<double> gaussian_taps(double sigma_cells) {
  const int r = std::max(1, static_cast<int>(std::ceil(4.0 * sigma_cells)));
  std::vector<double> w(2 * r + 1);
  double s = 0.0;
  for (int i = -r; i <= r; ++i) s += w[i + r] = std::exp(-0.5 * i * i / (sigma_cells * sigma_cells));
  for (double& v : w) v /= s;
  return w;
}

}  // namespace

ComplexField smooth_noise(const GridSpec& grid, double corr_width, std::uint64_t seed) {
  require(corr_width > 0.0, ErrorKind::configuration, "noise correlation width must be positive");
  const auto wx = gaussian_taps(corr_width / grid.dx);
  const auto wy = gaussian_taps(corr_width / grid.dy);
  const int rx = static_cast<int>(wx.size() / 2), ry = static_cast<int>(wy.size() / 2);
  // white noise on a grid grown by the kernel radius so the blur has no edge effects
  const int ex = grid.nx + 2 * rx, ey = grid.ny + 2 * ry;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<cplx> white(static_cast<std::size_t>(ex) * ey);
  for (auto& v : white) {
    const double re = normal(rng);
    v = cplx(re, normal(rng));
  }
  std::vector<cplx> rows(static_cast<std::size_t>(grid.nx) * ey);
  for (int j = 0; j < ey; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      cplx s = 0.0;
      for (int t = 0; t < static_cast<int>(wx.size()); ++t) s += wx[t] * white[static_cast<std::size_t>(j) * ex + i + t];
      rows[static_cast<std::size_t>(j) * grid.nx + i] = s;
    }
  ComplexField out(grid);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      cplx s = 0.0;
      for (int t = 0; t < static_cast<int>(wy.size()); ++t) s += wy[t] * rows[static_cast<std::size_t>(j + t) * grid.nx + i];
      out(i, j) = s;
    }
  return out;
}

InternalData add_noise(const InternalData& data, double level, double corr_width, std::uint64_t seed) {
  require(level >= 0.0 && std::isfinite(level), ErrorKind::configuration, "noise level must be >= 0");
  InternalData out = data;
  if (level == 0.0) return out;
  const auto noise = smooth_noise(data.d.grid, corr_width, seed);
  const double scale = level / c1_norm(noise);
  for (std::size_t k = 0; k < out.d.size(); ++k) out.d[k] += scale * noise[k];
  out.provenance = {true, level, corr_width, seed};
  return out;
}

BoundaryMu boundary_mu(const InternalData& data, const DomainMask& mask) {
  require(data.d.grid == mask.grid(), ErrorKind::dimension, "boundary_mu: data and mask grids differ");
  const auto nodes = mask.boundary_nodes();
  require(data.g.size() == nodes.size(), ErrorKind::dimension, "boundary_mu: illumination length differs from the boundary");
  BoundaryMu out;
  out.mu0.resize(nodes.size());
  double re_max = 0.0, im_max = 0.0;
  for (std::size_t b = 0; b < nodes.size(); ++b) {
    if (std::abs(data.g[b]) < data.g_min) {
      const Vec2 p = mask.boundary_point(b);
      char buf[160];
      std::snprintf(buf, sizeof buf, "boundary_mu: |g| = %.3g below g_min = %.3g at boundary node (%.6g, %.6g)",
                    std::abs(data.g[b]), data.g_min, p.x, p.y);
      fail(ErrorKind::division_hazard, buf);
    }
    const cplx r = data.d[nodes[b]] / data.g[b];
    out.mu0[b] = r.real();
    re_max = std::max(re_max, std::abs(r.real()));
    im_max = std::max(im_max, std::abs(r.imag()));
  }
  out.max_imag = re_max > 0.0 ? im_max / re_max : im_max;
  return out;
}

ScalarField mu_from_phantom(const ScalarField& D, const ScalarField& sigma_a) {
  require(D.grid == sigma_a.grid, ErrorKind::dimension, "mu_from_phantom: grids differ");
  ScalarField mu(D.grid);
  for (std::size_t k = 0; k < D.size(); ++k) {
    if (!(D[k] > 0.0)) fail(ErrorKind::domain, "mu_from_phantom: D must be positive");
    mu[k] = sigma_a[k] / std::sqrt(D[k]);
  }
  return mu;
}

void save_internal_data(const std::filesystem::path& dir, const std::vector<InternalData>& data,
                        const DomainMask& mask) {
  std::filesystem::create_directories(dir);
  io::Manifest m;
  m["count"] = std::to_string(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto& x = data[k];
    const std::string p = "data" + std::to_string(k) + ".";
    io::write_pfg(dir / ("data" + std::to_string(k) + ".pfg"), x.d);
    io::write_pfgb(dir / ("illum" + std::to_string(k) + ".pfgb"), mask, x.g);
    m[p + "kappa_x"] = io::format_double(x.params.kappa.x);
    m[p + "kappa_y"] = io::format_double(x.params.kappa.y);
    m[p + "kperp_x"] = io::format_double(x.params.kperp.x);
    m[p + "kperp_y"] = io::format_double(x.params.kperp.y);
    m[p + "center_x"] = io::format_double(x.center.x);
    m[p + "center_y"] = io::format_double(x.center.y);
    m[p + "g_min"] = io::format_double(x.g_min);
    m[p + "provenance"] = x.provenance.noisy ? "noisy" : "clean";
    m[p + "level"] = io::format_double(x.provenance.level);
    m[p + "corr_width"] = io::format_double(x.provenance.corr_width);
    m[p + "seed"] = std::to_string(x.provenance.seed);
  }
  io::write_manifest(dir / "manifest.txt", m);
}

namespace {

double number(const io::Manifest& m, const std::string& key) {
  const std::string& s = io::manifest_get(m, key);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::io, "manifest entry " + key + " is not a number: " + s);
}

}  // namespace

std::vector<InternalData> load_internal_data(const std::filesystem::path& dir, const DomainMask& mask) {
  const auto m = io::read_manifest(dir / "manifest.txt");
  const double count = number(m, "count");
  require(count >= 1 && count == std::floor(count), ErrorKind::io, "manifest count must be a positive integer");
  std::vector<InternalData> out;
  for (int k = 0; k < static_cast<int>(count); ++k) {
    const std::string p = "data" + std::to_string(k) + ".";
    InternalData x;
    x.d = io::read_pfg_complex(dir / ("data" + std::to_string(k) + ".pfg"));
    require(x.d.grid == mask.grid(), ErrorKind::io, "stored data grid does not match the requested grid");
    x.g = io::read_pfgb_for(dir / ("illum" + std::to_string(k) + ".pfgb"), mask);
    x.params = {{number(m, p + "kappa_x"), number(m, p + "kappa_y")},
                {number(m, p + "kperp_x"), number(m, p + "kperp_y")}};
    x.center = {number(m, p + "center_x"), number(m, p + "center_y")};
    x.g_min = number(m, p + "g_min");
    x.provenance.noisy = io::manifest_get(m, p + "provenance") == "noisy";
    x.provenance.level = number(m, p + "level");
    x.provenance.corr_width = number(m, p + "corr_width");
    x.provenance.seed = std::stoull(io::manifest_get(m, p + "seed"));
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace qpat
