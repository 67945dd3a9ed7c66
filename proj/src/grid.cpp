#include "qpat/grid.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "qpat/simd/kernels.hpp"

namespace qpat {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::domain: return "domain";
    case ErrorKind::out_of_range: return "out-of-range";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::geometry: return "geometry";
    case ErrorKind::iteration: return "iteration";
    case ErrorKind::singular: return "singular";
    case ErrorKind::overflow: return "overflow";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::degeneracy: return "degeneracy";
    case ErrorKind::reconstruction_domain: return "reconstruction-domain";
    case ErrorKind::vanishing_solution: return "vanishing-solution";
    case ErrorKind::division_hazard: return "division-hazard";
    case ErrorKind::model_violation: return "model-violation";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

GridSpec GridSpec::unit_square(int n) {
  require(n >= 2, ErrorKind::dimension, "unit_square needs at least two nodes per side");
  const double h = 1.0 / (n - 1);
  return {n, n, 0.0, 0.0, h, h};
}

GridSpec GridSpec::covering(Vec2 lo, Vec2 hi, int nx, int ny) {
  require(nx >= 2 && ny >= 2 && hi.x > lo.x && hi.y > lo.y, ErrorKind::dimension,
          "covering needs a non-empty rectangle and two nodes per side");
  return {nx, ny, lo.x, lo.y, (hi.x - lo.x) / (nx - 1), (hi.y - lo.y) / (ny - 1)};
}

void GridSpec::validate() const {
  require(nx >= 5 && ny >= 5, ErrorKind::dimension,
          "grid needs at least 5 nodes per direction, got " + std::to_string(nx) + "x" +
              std::to_string(ny));
  require(dx > 0.0 && dy > 0.0 && std::isfinite(dx) && std::isfinite(dy) && std::isfinite(x0) &&
              std::isfinite(y0),
          ErrorKind::dimension, "grid spacings must be positive and finite");
}

bool GridSpec::contains(Vec2 p, double tol) const {
  return p.x >= x0 - tol * dx && p.x <= x1() + tol * dx && p.y >= y0 - tol * dy &&
         p.y <= y1() + tol * dy;
}

// ---------------------------------------------------------------------------
// DomainMask

DomainMask DomainMask::rectangle(const GridSpec& grid) {
  grid.validate();
  DomainMask m;
  m.grid_ = grid;
  m.shape_ = MaskShape::rectangle;
  m.center_ = grid.center();
  m.inside_.assign(grid.size(), 1);
  m.finish();
  return m;
}

DomainMask DomainMask::disk(const GridSpec& grid, Vec2 center, double radius) {
  grid.validate();
  require(radius > 0.0, ErrorKind::geometry, "disk radius must be positive");
  require(center.x - radius > grid.x0 && center.x + radius < grid.x1() &&
              center.y - radius > grid.y0 && center.y + radius < grid.y1(),
          ErrorKind::geometry, "disk must fit strictly inside the grid rectangle");
  DomainMask m;
  m.grid_ = grid;
  m.shape_ = MaskShape::disk;
  m.center_ = center;
  m.radius_ = radius;
  m.inside_.assign(grid.size(), 0);
  const double tol = 1e-12 * radius;
  for (std::size_t k = 0; k < grid.size(); ++k)
    m.inside_[k] = norm(grid.node(k) - center) <= radius + tol ? 1 : 0;
  m.finish();
  return m;
}

void DomainMask::finish() {
  const GridSpec& g = grid_;
  interior_.assign(g.size(), 0);
  boundary_.clear();
  auto in = [&](int i, int j) {
    return i >= 0 && j >= 0 && i < g.nx && j < g.ny && inside_[g.index(i, j)] != 0;
  };
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (!in(i, j)) continue;
      const int n_in = int(in(i - 1, j)) + int(in(i + 1, j)) + int(in(i, j - 1)) + int(in(i, j + 1));
      require(n_in > 0, ErrorKind::geometry, "mask has an isolated node");
      if (n_in == 4) {
        interior_[g.index(i, j)] = 1;
      } else {
        boundary_.push_back(g.index(i, j));
      }
    }
  }
  interior_count_ = static_cast<std::size_t>(std::count(interior_.begin(), interior_.end(), 1));
  require(interior_count_ > 0 && boundary_.size() >= 4, ErrorKind::geometry,
          "mask has no interior nodes");

  // Counter-clockwise order by polar angle about the centre, nearer node first on ties.
  std::vector<std::pair<double, double>> key(g.size());
  for (std::size_t k : boundary_) {
    const Vec2 r = g.node(k) - center_;
    key[k] = {std::atan2(r.y, r.x), norm(r)};
  }
  std::sort(boundary_.begin(), boundary_.end(),
            [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });

  const std::size_t nb = boundary_.size();
  angle_.resize(nb);
  normals_.resize(nb);
  arclength_.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t k = boundary_[b];
    angle_[b] = key[k].first;
    const Vec2 p = g.node(k);
    if (shape_ == MaskShape::disk) {
      const Vec2 r = p - center_;
      normals_[b] = (1.0 / norm(r)) * r;
    } else {
      const int i = g.col(k), j = g.row(k);
      Vec2 n{double(i == g.nx - 1) - double(i == 0), double(j == g.ny - 1) - double(j == 0)};
      normals_[b] = (1.0 / norm(n)) * n;
    }
    arclength_[b] = b == 0 ? 0.0 : arclength_[b - 1] + norm(p - g.node(boundary_[b - 1]));
  }
  perimeter_ = arclength_.back() + norm(g.node(boundary_.front()) - g.node(boundary_.back()));

  for (std::size_t k = 0; k < g.size(); ++k) {
    if (interior_[k] && !contains(g.node(k)))
      fail(ErrorKind::geometry, "interior node " + std::to_string(k) +
                                    " falls outside the boundary polygon");
  }
}

double DomainMask::diameter() const {
  if (shape_ == MaskShape::disk) return 2.0 * radius_;
  return norm(grid_.hi() - grid_.lo());
}

namespace {

std::size_t edge_for_angle(const std::vector<double>& angle, double theta) {
  auto it = std::upper_bound(angle.begin(), angle.end(), theta);
  if (it == angle.begin()) return angle.size() - 1;
  return static_cast<std::size_t>(it - angle.begin()) - 1;
}

}  // namespace

bool DomainMask::contains(Vec2 p) const {
  const Vec2 r = p - center_;
  if (r.x == 0.0 && r.y == 0.0) return true;
  const std::size_t e = edge_for_angle(angle_, std::atan2(r.y, r.x));
  const Vec2 a = boundary_point(e);
  const Vec2 b = boundary_point((e + 1) % boundary_.size());
  const Vec2 ab = b - a;
  const double len = norm(ab);
  if (len == 0.0) return norm(r) <= norm(a - center_);
  return cross(ab, p - a) >= -1e-13 * len * (grid_.dx + grid_.dy);
}

bool DomainMask::shape_contains(Vec2 p) const {
  const double tol = 1e-13 * (grid_.dx + grid_.dy);
  if (shape_ == MaskShape::disk) return norm(p - center_) <= radius_ + tol;
  return p.x >= grid_.x0 - tol && p.x <= grid_.x1() + tol && p.y >= grid_.y0 - tol && p.y <= grid_.y1() + tol;
}

DomainMask::BoundaryHit DomainMask::locate(Vec2 p) const {
  const Vec2 r = p - center_;
  const std::size_t e = edge_for_angle(angle_, std::atan2(r.y, r.x));
  const std::size_t e1 = (e + 1) % boundary_.size();
  const Vec2 a = boundary_point(e);
  const Vec2 ab = boundary_point(e1) - a;
  const double len2 = dot(ab, ab);
  double lambda = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  lambda = std::clamp(lambda, 0.0, 1.0);
  return {e, lambda, arclength_[e] + lambda * std::sqrt(len2)};
}

Vec2 DomainMask::outward_normal(Vec2 p) const {
  if (shape_ == MaskShape::disk) {
    const Vec2 r = p - center_;
    const double d = norm(r);
    return d > 0.0 ? (1.0 / d) * r : Vec2{1.0, 0.0};
  }
  const double dl = p.x - grid_.x0, dr = grid_.x1() - p.x;
  const double db = p.y - grid_.y0, dt = grid_.y1() - p.y;
  const double m = std::min({dl, dr, db, dt});
  if (m == dl) return {-1.0, 0.0};
  if (m == dr) return {1.0, 0.0};
  if (m == db) return {0.0, -1.0};
  return {0.0, 1.0};
}

double DomainMask::distance_outside(Vec2 p) const {
  if (shape_ == MaskShape::disk) return std::max(0.0, norm(p - center_) - radius_);
  const double ex = std::max({0.0, grid_.x0 - p.x, p.x - grid_.x1()});
  const double ey = std::max({0.0, grid_.y0 - p.y, p.y - grid_.y1()});
  return std::hypot(ex, ey);
}

Vec2 DomainMask::project(Vec2 p) const {
  if (shape_ == MaskShape::disk) {
    const Vec2 r = p - center_;
    const double d = norm(r);
    if (d <= radius_) return p;
    return center_ + (radius_ / d) * r;
  }
  return {std::clamp(p.x, grid_.x0, grid_.x1()), std::clamp(p.y, grid_.y0, grid_.y1())};
}

// ---------------------------------------------------------------------------
// Stencils

namespace {

template <class T>
constexpr std::ptrdiff_t kWidth = static_cast<std::ptrdiff_t>(sizeof(T) / sizeof(double));

template <class T>
const double* raw(const std::vector<T>& v) {
  return reinterpret_cast<const double*>(v.data());
}
template <class T>
double* raw(std::vector<T>& v) {
  return reinterpret_cast<double*>(v.data());
}

template <class T>
Field<T> laplacian_impl(const Field<T>& f) {
  const GridSpec& g = f.grid;
  g.validate();
  Field<T> out(g);
  const auto& K = simd::active();
  const std::ptrdiff_t w = kWidth<T>;
  const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(g.nx) * w;
  const std::size_t n = static_cast<std::size_t>(g.nx - 2) * static_cast<std::size_t>(w);
  const double ax = 1.0 / (g.dx * g.dx), ay = 1.0 / (g.dy * g.dy);
  for (int j = 1; j < g.ny - 1; ++j) {
    const std::size_t k0 = g.index(1, j) * static_cast<std::size_t>(w);
    K.stencil5(raw(f.values) + k0, raw(out.values) + k0, n, w, sy, ax, ay);
  }
  return out;
}

template <class T>
std::pair<Field<T>, Field<T>> gradient_impl(const Field<T>& f) {
  const GridSpec& g = f.grid;
  g.validate();
  Field<T> gx(g), gy(g);
  const auto& K = simd::active();
  const std::ptrdiff_t w = kWidth<T>;
  const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(g.nx) * w;
  const std::size_t n = static_cast<std::size_t>(g.nx - 2) * static_cast<std::size_t>(w);
  for (int j = 1; j < g.ny - 1; ++j) {
    const std::size_t k0 = g.index(1, j) * static_cast<std::size_t>(w);
    K.central_diff(raw(f.values) + k0, raw(gx.values) + k0, n, w, 0.5 / g.dx);
    K.central_diff(raw(f.values) + k0, raw(gy.values) + k0, n, sy, 0.5 / g.dy);
  }
  return {std::move(gx), std::move(gy)};
}

}  // namespace

ScalarField laplacian(const ScalarField& f) { return laplacian_impl(f); }
ComplexField laplacian(const ComplexField& f) { return laplacian_impl(f); }
std::pair<ScalarField, ScalarField> gradient(const ScalarField& f) { return gradient_impl(f); }
std::pair<ComplexField, ComplexField> gradient(const ComplexField& f) { return gradient_impl(f); }

ScalarField divergence(const VectorField& v) {
  const GridSpec& g = v.grid;
  g.validate();
  ScalarField out(g);
  std::vector<double> tmp(g.size(), 0.0);
  const auto& K = simd::active();
  const std::size_t n = static_cast<std::size_t>(g.nx - 2);
  for (int j = 1; j < g.ny - 1; ++j) {
    const std::size_t k0 = g.index(1, j);
    K.central_diff(v.x.data() + k0, out.values.data() + k0, n, 1, 0.5 / g.dx);
    K.central_diff(v.y.data() + k0, tmp.data() + k0, n, g.nx, 0.5 / g.dy);
    K.axpy(out.values.data() + k0, tmp.data() + k0, 1.0, n);
  }
  return out;
}

template <class T>
T sample_bilinear(const Field<T>& f, Vec2 p) {
  const GridSpec& g = f.grid;
  if (!g.contains(p, 1e-9))
    fail(ErrorKind::out_of_range, "sample point (" + std::to_string(p.x) + ", " +
                                      std::to_string(p.y) + ") outside the grid rectangle");
  return sample_bilinear_clamped(f, p);
}

template <class T>
T sample_bilinear_clamped(const Field<T>& f, Vec2 p) {
  const GridSpec& g = f.grid;
  // Snap coordinates that are a node up to round-off so nodes reproduce exactly.
  auto snap = [](double f, int n) {
    const double r = std::round(f);
    return std::clamp(std::abs(f - r) < 1e-9 ? r : f, 0.0, double(n - 1));
  };
  const double fx = snap((p.x - g.x0) / g.dx, g.nx);
  const double fy = snap((p.y - g.y0) / g.dy, g.ny);
  const int i = std::min(static_cast<int>(fx), g.nx - 2);
  const int j = std::min(static_cast<int>(fy), g.ny - 2);
  const double t = fx - i, u = fy - j;
  const std::size_t k = g.index(i, j);
  const std::size_t nx = static_cast<std::size_t>(g.nx);
  return ((1.0 - t) * (1.0 - u)) * f.values[k] + (t * (1.0 - u)) * f.values[k + 1] +
         ((1.0 - t) * u) * f.values[k + nx] + (t * u) * f.values[k + nx + 1];
}

template <class T>
BoundaryValues<T> boundary_trace(const Field<T>& f, const DomainMask& mask) {
  require(f.grid == mask.grid(), ErrorKind::dimension, "field and mask live on different grids");
  BoundaryValues<T> out;
  out.reserve(mask.boundary_nodes().size());
  for (std::size_t k : mask.boundary_nodes()) out.push_back(f.values[k]);
  return out;
}

namespace {

template <class Get, class Set>
void fill_generic(const GridSpec& g, const std::vector<std::uint8_t>& valid, Get get, Set set) {
  require(valid.size() == g.size(), ErrorKind::dimension, "validity flags do not match grid");
  std::vector<std::uint8_t> known = valid;
  if (std::find(known.begin(), known.end(), 1) == known.end()) return;
  const int di[4] = {-1, 1, 0, 0};
  const int dj[4] = {0, 0, -1, 1};
  auto ok = [&](int i, int j) { return i >= 0 && j >= 0 && i < g.nx && j < g.ny; };

  // A few layers of polynomial extrapolation along the grid lines: for each
  // node the directions with the most known nodes in a row (up to three, i.e.
  // quadratic) are averaged. Later layers build on earlier ones.
  using Value = decltype(get(std::size_t{0}));
  std::vector<std::size_t> staged_idx;
  std::vector<Value> staged;
  auto known_at = [&](int i, int j) { return ok(i, j) && known[g.index(i, j)]; };
  for (int layer = 0; layer < 3; ++layer) {
    staged_idx.clear();
    staged.clear();
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t k = g.index(i, j);
        if (known[k]) continue;
        Value acc{};
        int cnt = 0, best = 0;
        for (int d = 0; d < 4; ++d) {
          int run = 0;
          while (run < 3 && known_at(i + (run + 1) * di[d], j + (run + 1) * dj[d])) ++run;
          if (run == 0 || run < best) continue;
          auto at = [&](int s) { return get(g.index(i + s * di[d], j + s * dj[d])); };
          Value v;
          if (run == 3)
            v = 3.0 * at(1) - 3.0 * at(2) + at(3);
          else if (run == 2)
            v = 2.0 * at(1) - at(2);
          else
            v = at(1);
          if (run > best) {
            best = run;
            acc = Value{};
            cnt = 0;
          }
          acc = acc + v;
          ++cnt;
        }
        if (cnt > 0) {
          staged_idx.push_back(k);
          staged.push_back((1.0 / cnt) * acc);
        }
      }
    }
    for (std::size_t s = 0; s < staged.size(); ++s) {
      set(staged_idx[s], staged[s]);
      known[staged_idx[s]] = 1;
    }
  }

  // Remaining nodes: constant dilation, one layer at a time.
  for (;;) {
    staged_idx.clear();
    staged.clear();
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t k = g.index(i, j);
        if (known[k]) continue;
        Value acc{};
        int cnt = 0;
        for (int d = 0; d < 4; ++d) {
          const int i1 = i + di[d], j1 = j + dj[d];
          if (ok(i1, j1) && known[g.index(i1, j1)]) {
            acc = acc + get(g.index(i1, j1));
            ++cnt;
          }
        }
        if (cnt > 0) {
          staged_idx.push_back(k);
          staged.push_back((1.0 / cnt) * acc);
        }
      }
    }
    if (staged_idx.empty()) break;
    for (std::size_t s = 0; s < staged.size(); ++s) {
      set(staged_idx[s], staged[s]);
      known[staged_idx[s]] = 1;
    }
  }
}

}  // namespace

template <class T>
void fill_invalid(Field<T>& f, const std::vector<std::uint8_t>& valid) {
  fill_generic(
      f.grid, valid, [&](std::size_t k) { return f.values[k]; },
      [&](std::size_t k, const T& v) { f.values[k] = v; });
}

void fill_invalid(VectorField& f, const std::vector<std::uint8_t>& valid) {
  fill_generic(
      f.grid, valid, [&](std::size_t k) { return f.at(k); },
      [&](std::size_t k, const Vec2& v) { f.set(k, v); });
}

template <class T>
double max_abs(const Field<T>& f, const std::vector<std::uint8_t>& flags) {
  double m = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k)
    if (flags.empty() || flags[k]) m = std::max(m, std::abs(f.values[k]));
  return m;
}

template <class T>
double c1_norm(const Field<T>& f, const std::vector<std::uint8_t>& flags) {
  const GridSpec& g = f.grid;
  auto on = [&](std::size_t k) { return flags.empty() || flags[k] != 0; };
  double m = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      if (!on(k)) continue;
      m = std::max(m, std::abs(f.values[k]));
      if (i + 1 < g.nx && on(k + 1)) m = std::max(m, std::abs(f.values[k + 1] - f.values[k]) / g.dx);
      if (j + 1 < g.ny && on(k + static_cast<std::size_t>(g.nx)))
        m = std::max(m, std::abs(f.values[k + static_cast<std::size_t>(g.nx)] - f.values[k]) / g.dy);
    }
  }
  return m;
}

template double sample_bilinear(const ScalarField&, Vec2);
template cplx sample_bilinear(const ComplexField&, Vec2);
template double sample_bilinear_clamped(const ScalarField&, Vec2);
template cplx sample_bilinear_clamped(const ComplexField&, Vec2);
template BoundaryValues<double> boundary_trace(const ScalarField&, const DomainMask&);
template BoundaryValues<cplx> boundary_trace(const ComplexField&, const DomainMask&);
template void fill_invalid(ScalarField&, const std::vector<std::uint8_t>&);
template void fill_invalid(ComplexField&, const std::vector<std::uint8_t>&);
template double max_abs(const ScalarField&, const std::vector<std::uint8_t>&);
template double max_abs(const ComplexField&, const std::vector<std::uint8_t>&);
template double c1_norm(const ScalarField&, const std::vector<std::uint8_t>&);
template double c1_norm(const ComplexField&, const std::vector<std::uint8_t>&);

}  // namespace qpat
