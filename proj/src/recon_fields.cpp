#include "qpat/recon_fields.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace qpat {

namespace {

void finish(TransportCoefficients& c) {
  fill_invalid(c.beta, c.valid);
  fill_invalid(c.gamma, c.valid);
  const Vec2 e = (1.0 / c.params.magnitude()) * c.params.kperp;
  double gap = 0.0;
  for (std::size_t k = 0; k < c.valid.size(); ++k) {
    if (!c.valid[k]) continue;
    const Vec2 b = c.beta.at(k);
    gap = std::max(gap, norm(b - dot(b, e) * e));
  }
  c.flatness_gap = gap;
}

void check_center(const InternalData& data, const DomainMask& mask) {
  const Vec2 c = mask.center();
  const double tol = 1e-9 * (mask.grid().dx + mask.grid().dy);
  if (std::abs(data.center.x - c.x) > tol || std::abs(data.center.y - c.y) > tol)
    fail(ErrorKind::configuration, "internal data envelope centre does not match the mask centre");
  require(data.d.grid == mask.grid(), ErrorKind::dimension, "internal data and mask grids differ");
}

}  // namespace

TransportCoefficients TransportCoefficients::from_fields(VectorField beta, ScalarField gamma,
                                                         const DomainMask& mask, const CGOParams& params) {
  require(beta.grid == mask.grid() && gamma.grid == mask.grid(), ErrorKind::dimension,
          "transport coefficients and mask grids differ");
  TransportCoefficients c;
  c.beta = std::move(beta);
  c.gamma = std::move(gamma);
  c.valid = mask.interior_flags();
  c.params = params;
  finish(c);
  return c;
}

TransportCoefficients beta_gamma_two(const InternalData& data, const DomainMask& mask) {
  check_center(data, mask);
  data.params.validate();
  const auto& g = mask.grid();
  const auto [dx, dy] = gradient(data.d);
  const auto lap = laplacian(data.d);
  const double k = data.params.magnitude();
  TransportCoefficients c;
  c.beta = VectorField(g);
  c.gamma = ScalarField(g);
  c.valid = mask.interior_flags();
  c.params = data.params;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!c.valid[n]) continue;
    const cplx d = data.d[n];
    const double chi = std::exp(-2.0 * dot(data.params.kappa, g.node(n) - data.center));
    // Im(d grad conj d - conj d grad d) = 2 Im(d conj(grad d))
    c.beta.x[n] = chi / k * std::imag(d * std::conj(dx[n]));
    c.beta.y[n] = chi / k * std::imag(d * std::conj(dy[n]));
    c.gamma[n] = chi / (2.0 * k) * std::imag(std::conj(d) * lap[n]);
  }
  finish(c);
  return c;
}

std::vector<TransportCoefficients> beta_gamma_multi(const std::vector<InternalData>& data,
                                                    const DomainMask& mask) {
  require(data.size() == 2, ErrorKind::configuration, "the four-measurement route needs exactly two data sets");
  const CGOParams& p1 = data[0].params;
  const CGOParams& p2 = data[1].params;
  const CGOParams neg = p2.negated();
  const double tol = 1e-12 * p2.magnitude();
  if (norm(p1.kappa - neg.kappa) > tol || norm(p1.kperp - neg.kperp) > tol)
    fail(ErrorKind::configuration, "data sets are not a rho1 = -rho2 pair");
  check_center(data[0], mask);
  check_center(data[1], mask);

  const auto& g = mask.grid();
  const auto [d1x, d1y] = gradient(data[0].d);
  const auto [d2x, d2y] = gradient(data[1].d);
  const auto l1 = laplacian(data[0].d);
  const auto l2 = laplacian(data[1].d);
  const double k = p2.magnitude();
  TransportCoefficients c;
  c.beta = VectorField(g);
  c.gamma = ScalarField(g);
  c.valid = mask.interior_flags();
  c.params = p1;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!c.valid[n]) continue;
    const cplx a = data[0].d[n], b = data[1].d[n];
    c.beta.x[n] = std::real(b * d1x[n] - a * d2x[n]) / (2.0 * k);
    c.beta.y[n] = std::real(b * d1y[n] - a * d2y[n]) / (2.0 * k);
    c.gamma[n] = std::real(a * l2[n] - b * l1[n]) / (4.0 * k);
  }
  finish(c);
  std::vector<TransportCoefficients> out;
  out.push_back(std::move(c));
  out.push_back(beta_gamma_two(data[1], mask));
  return out;
}

double flatness_gap_from(const TransportCoefficients& c, const VectorField& reference) {
  require(reference.grid == c.beta.grid, ErrorKind::dimension, "flatness reference grid differs");
  double gap = 0.0;
  for (std::size_t k = 0; k < c.valid.size(); ++k)
    if (c.valid[k]) gap = std::max(gap, norm(c.beta.at(k) - reference.at(k)));
  return gap;
}

GradientCoefficient assemble_gamma(const std::vector<TransportCoefficients>& coeffs, double cond_max) {
  require(coeffs.size() == 2, ErrorKind::configuration, "assemble_gamma needs two coefficient pairs");
  const auto& a = coeffs[0];
  const auto& b = coeffs[1];
  require(a.beta.grid == b.beta.grid, ErrorKind::dimension, "coefficient grids differ");
  const auto& g = a.beta.grid;
  GradientCoefficient out;
  out.Gamma = VectorField(g);
  out.valid.assign(g.size(), 0);
  std::vector<std::size_t> bad;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!a.valid[n] || !b.valid[n]) continue;
    out.valid[n] = 1;
    const double a11 = a.beta.x[n], a12 = a.beta.y[n], a21 = b.beta.x[n], a22 = b.beta.y[n];
    const double det = a11 * a22 - a12 * a21;
    const double fro = a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22;
    // singular values of a 2x2 matrix from its Frobenius norm and determinant
    const double disc = std::sqrt(std::max(0.0, fro * fro - 4.0 * det * det));
    const double smax = std::sqrt(0.5 * (fro + disc));
    const double smin2 = 0.5 * (fro - disc);
    const double smin = smin2 > 0.0 ? std::abs(det) / smax : 0.0;
    const double cond = smin > 0.0 ? smax / smin : INFINITY;
    out.condition_max = std::max(out.condition_max, cond);
    if (!(cond <= cond_max)) {
      bad.push_back(n);
      continue;
    }
    const double g1 = a.gamma[n], g2 = b.gamma[n];
    out.Gamma.x[n] = (a22 * g1 - a12 * g2) / det;
    out.Gamma.y[n] = (a11 * g2 - a21 * g1) / det;
  }
  if (!bad.empty()) {
    std::string msg = "beta_1, beta_2 do not form a basis (condition above " + std::to_string(cond_max) +
                      ") at " + std::to_string(bad.size()) + " node(s):";
    for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 10); ++i)
      msg += " (" + std::to_string(g.col(bad[i])) + "," + std::to_string(g.row(bad[i])) + ")";
    fail(ErrorKind::degeneracy, msg);
  }
  fill_invalid(out.Gamma, out.valid);
  out.curl_residual = curl_residual(out.Gamma, out.valid);
  return out;
}

double curl_residual(const VectorField& G, const std::vector<std::uint8_t>& valid) {
  const auto& g = G.grid;
  double r = 0.0;
  for (int j = 1; j + 1 < g.ny; ++j)
    for (int i = 1; i + 1 < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      if (!valid[k] || !valid[k - 1] || !valid[k + 1] || !valid[k - g.nx] || !valid[k + g.nx]) continue;
      const double c = (G.y[k + 1] - G.y[k - 1]) / (2 * g.dx) - (G.x[k + g.nx] - G.x[k - g.nx]) / (2 * g.dy);
      r = std::max(r, std::abs(c));
    }
  return r;
}

double transport_residual(const TransportCoefficients& c, const ScalarField& mu) {
  const auto [mx, my] = gradient(mu);
  double r = 0.0;
  for (std::size_t k = 0; k < c.valid.size(); ++k)
    if (c.valid[k]) r = std::max(r, std::abs(c.beta.x[k] * mx[k] + c.beta.y[k] * my[k] + c.gamma[k] * mu[k]));
  return r;
}

}  // namespace qpat
