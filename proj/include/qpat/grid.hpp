#pragma once

// Structured node-centred grids on a rectangle, the fields that live on them,
// the reconstruction domain mask and the finite-difference stencils shared by
// every stage of the reconstruction.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "qpat/error.hpp"

namespace qpat {

using cplx = std::complex<double>;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
/// Counter-clockwise rotation by 90 degrees.
constexpr Vec2 rot90(Vec2 a) { return {-a.y, a.x}; }

/// Node (i, j) sits at (x0 + i dx, y0 + j dy); storage is row-major with i fastest.
struct GridSpec {
  int nx = 0;
  int ny = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  double dx = 0.0;
  double dy = 0.0;

  /// [0,1]^2 with n nodes per side.
  static GridSpec unit_square(int n);
  /// Rectangle [lo, hi] sampled with nx by ny nodes.
  static GridSpec covering(Vec2 lo, Vec2 hi, int nx, int ny);

  /// Throws a dimension error unless nx, ny >= 5 and dx, dy > 0.
  void validate() const;

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  int col(std::size_t k) const { return static_cast<int>(k % static_cast<std::size_t>(nx)); }
  int row(std::size_t k) const { return static_cast<int>(k / static_cast<std::size_t>(nx)); }
  double x(int i) const { return x0 + i * dx; }
  double y(int j) const { return y0 + j * dy; }
  Vec2 node(int i, int j) const { return {x(i), y(j)}; }
  Vec2 node(std::size_t k) const { return node(col(k), row(k)); }
  double x1() const { return x0 + (nx - 1) * dx; }
  double y1() const { return y0 + (ny - 1) * dy; }
  Vec2 lo() const { return {x0, y0}; }
  Vec2 hi() const { return {x1(), y1()}; }
  Vec2 center() const { return {0.5 * (x0 + x1()), 0.5 * (y0 + y1())}; }
  bool contains(Vec2 p, double tol = 1e-12) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

template <class T>
struct Field {
  GridSpec grid;
  std::vector<T> values;

  Field() = default;
  explicit Field(const GridSpec& g, T fill = T{}) : grid(g), values(g.size(), fill) {}
  Field(const GridSpec& g, std::vector<T> v) : grid(g), values(std::move(v)) {
    require(values.size() == grid.size(), ErrorKind::dimension, "field length does not match grid");
  }

  template <class F>
  static Field from_function(const GridSpec& g, F&& f) {
    Field out(g);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) out.values[g.index(i, j)] = f(g.node(i, j));
    return out;
  }

  T& operator()(int i, int j) { return values[grid.index(i, j)]; }
  const T& operator()(int i, int j) const { return values[grid.index(i, j)]; }
  T& operator[](std::size_t k) { return values[k]; }
  const T& operator[](std::size_t k) const { return values[k]; }
  std::size_t size() const { return values.size(); }
};

using ScalarField = Field<double>;
using ComplexField = Field<cplx>;

struct VectorField {
  GridSpec grid;
  std::vector<double> x;
  std::vector<double> y;

  VectorField() = default;
  explicit VectorField(const GridSpec& g) : grid(g), x(g.size(), 0.0), y(g.size(), 0.0) {}
  Vec2 at(std::size_t k) const { return {x[k], y[k]}; }
  void set(std::size_t k, Vec2 v) {
    x[k] = v.x;
    y[k] = v.y;
  }
  ScalarField component(int c) const { return {grid, c == 0 ? x : y}; }
};

/// Values on the mask's boundary nodes, in the mask's counter-clockwise order.
template <class T>
using BoundaryValues = std::vector<T>;

enum class MaskShape { rectangle, disk };

/// The reconstruction domain X on a grid. Boundary nodes are inside nodes with a
/// 4-neighbour outside X (or off the grid); the remaining inside nodes are
/// interior nodes, on which every 5-point stencil is fully supported. The
/// boundary nodes, sorted by polar angle about the mask centre, also define the
/// closed polygon used as the continuous boundary when tracing curves.
class DomainMask {
 public:
  static DomainMask rectangle(const GridSpec& grid);
  static DomainMask disk(const GridSpec& grid, Vec2 center, double radius);

  const GridSpec& grid() const { return grid_; }
  MaskShape shape() const { return shape_; }
  Vec2 center() const { return center_; }
  double radius() const { return radius_; }
  /// Uniform strict convexity (every boundary point has a tangent ball of
  /// finite radius containing X). Holds for disks, fails for rectangles.
  bool satisfies_r0() const { return shape_ == MaskShape::disk; }
  double diameter() const;

  bool inside(std::size_t k) const { return inside_[k] != 0; }
  bool interior(std::size_t k) const { return interior_[k] != 0; }
  const std::vector<std::uint8_t>& inside_flags() const { return inside_; }
  const std::vector<std::uint8_t>& interior_flags() const { return interior_; }
  std::size_t interior_count() const { return interior_count_; }

  std::span<const std::size_t> boundary_nodes() const { return boundary_; }
  std::span<const Vec2> boundary_normals() const { return normals_; }
  /// Cumulative chord length along the boundary polygon, starting at 0.
  std::span<const double> boundary_arclength() const { return arclength_; }
  double perimeter() const { return perimeter_; }
  Vec2 boundary_point(std::size_t b) const { return grid_.node(boundary_[b]); }

  /// Point-in-polygon test against the boundary polygon (points on it count as inside).
  bool contains(Vec2 p) const;
  /// Membership in the continuous shape (rectangle or disk) the mask samples.
  bool shape_contains(Vec2 p) const;

  struct BoundaryHit {
    std::size_t edge = 0;   ///< edge from boundary node `edge` to node `edge + 1` (cyclic)
    double lambda = 0.0;    ///< position along that edge in [0, 1]
    double s = 0.0;         ///< arclength parameter
  };
  /// Locates the polygon edge crossed by the ray from the centre through p and
  /// the projection of p onto it.
  BoundaryHit locate(Vec2 p) const;

  /// Outward normal of the continuous shape nearest to p.
  Vec2 outward_normal(Vec2 p) const;
  /// Distance from p to the continuous shape (0 for points inside it).
  double distance_outside(Vec2 p) const;
  /// Nearest point of the continuous shape.
  Vec2 project(Vec2 p) const;

 private:
  DomainMask() = default;
  void finish();

  GridSpec grid_;
  MaskShape shape_ = MaskShape::rectangle;
  Vec2 center_;
  double radius_ = 0.0;
  std::vector<std::uint8_t> inside_;
  std::vector<std::uint8_t> interior_;
  std::size_t interior_count_ = 0;
  std::vector<std::size_t> boundary_;
  std::vector<Vec2> normals_;
  std::vector<double> arclength_;
  std::vector<double> angle_;
  double perimeter_ = 0.0;
};

// ---------------------------------------------------------------------------
// Stencils. Outputs are trusted on the nodes (1..nx-2) x (1..ny-2); the one-node
// rim of the rectangle is set to zero.

ScalarField laplacian(const ScalarField& f);
ComplexField laplacian(const ComplexField& f);

std::pair<ScalarField, ScalarField> gradient(const ScalarField& f);
std::pair<ComplexField, ComplexField> gradient(const ComplexField& f);

/// Centred divergence of a vector field, same rim convention.
ScalarField divergence(const VectorField& v);

template <class T>
T sample_bilinear(const Field<T>& f, Vec2 p);
/// Like sample_bilinear but clamps p into the grid rectangle first.
template <class T>
T sample_bilinear_clamped(const Field<T>& f, Vec2 p);

template <class T>
BoundaryValues<T> boundary_trace(const Field<T>& f, const DomainMask& mask);

/// Overwrites the nodes flagged invalid. The first three layers around the
/// valid nodes are extrapolated along the grid lines, quadratically where
/// three known nodes line up (linearly or by a copy when fewer do); anything
/// further away is filled by repeated constant dilation.
template <class T>
void fill_invalid(Field<T>& f, const std::vector<std::uint8_t>& valid);
void fill_invalid(VectorField& f, const std::vector<std::uint8_t>& valid);

/// Maximum of |f| over the nodes with flag set (all nodes when flags is empty).
template <class T>
double max_abs(const Field<T>& f, const std::vector<std::uint8_t>& flags = {});

/// Discrete C1 norm over flagged nodes: max of |f| and of the forward
/// difference quotients along x and y between flagged node pairs.
template <class T>
double c1_norm(const Field<T>& f, const std::vector<std::uint8_t>& flags = {});

}  // namespace qpat
