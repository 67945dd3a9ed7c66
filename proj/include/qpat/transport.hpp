#pragma once

// Method of characteristics for beta.grad mu + gamma mu = 0 with mu given on
// the boundary: every interior node is carried along d phi/dt = beta(phi)
// until the curve leaves the domain at x+.

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "qpat/recon_fields.hpp"

namespace qpat {

enum class PathStatus { exited, max_time_exceeded, stalled };
const char* to_string(PathStatus s);

struct CharPath {
  Vec2 start;
  std::vector<Vec2> points;          // only when recorded
  std::vector<double> times;
  std::vector<double> gamma_samples;
  Vec2 exit;
  double t_exit = 0.0;
  double gamma_integral = 0.0;
  DomainMask::BoundaryHit hit;
  PathStatus status = PathStatus::exited;
};

struct TraceSettings {
  double h_ode = 0.0;
  double t_max = 0.0;
  double beta_min = 0.0;
};

/// RK4 on bilinearly sampled beta with gamma integrated as an extra RK4
/// component; the crossing of the continuous domain boundary is located by
/// bisection of the last step.
CharPath trace_characteristic(const VectorField& beta, const ScalarField& gamma, Vec2 x,
                              const DomainMask& mask, const TraceSettings& s, bool record = false);

struct BoundaryParam {
  int segment = 0;   // rectangle edge (bottom, right, top, left); 0 for a disk
  double s = 0.0;    // arclength along the segment, counter-clockwise
};
BoundaryParam boundary_param(const DomainMask& mask, Vec2 p);

/// mu0 as a function on the continuous boundary. On a disk each boundary node
/// is traced to its own exit point x+, which gives the sample mu0(x+) =
/// mu0(node) exp(-integral of gamma); rectangle nodes lie on the edges and are
/// used where they are. Samples within five cells of arclength are fitted by
/// weighted least squares in arclength and path time. Boundary nodes of a
/// disk lie up to a cell inside the circle, so reading mu0 off them directly
/// would leave an O(h) error with grid-scale structure in every exit value,
/// and the recovered q amplifies that by 1/h^2.
class ExitProfile {
 public:
  ExitProfile(const VectorField& beta, const ScalarField& gamma, const DomainMask& mask,
              const BoundaryValues<double>& mu0, const TraceSettings& settings);
  double operator()(Vec2 p) const;
  std::size_t sample_count() const;

 private:
  struct Sample {
    double s, t, value;
  };
  const DomainMask& mask_;
  double period_ = 0.0;
  double radius_ = 0.0;
  double t_scale_ = 1.0;
  std::vector<Sample> segments_[4];
};

struct TransportOptions {
  std::optional<double> h_ode;      // default 0.5 min(dx, dy) / max|beta|
  std::optional<double> t_max;      // default 10 diam / median|beta|
  std::optional<double> beta_min;   // default 1e-3 median|beta|
  /// Boundary nodes are traced like interior nodes (outflow nodes exit at
  /// once and keep mu0); when false they simply take mu0.
  bool trace_boundary = true;
};

TraceSettings resolve_settings(const TransportCoefficients& c, const DomainMask& mask,
                               const TransportOptions& opt);

struct TransportReport {
  TraceSettings settings;
  std::vector<std::size_t> nodes;   // traced interior nodes
  std::vector<double> exit_time;
  std::vector<double> exit_flux;    // n(x+).beta(x+)
  double max_exit_time = 0.0;
  /// min over valid nodes of beta . b / |b|, b the mean of beta (0 when beta
  /// reverses direction somewhere).
  double zeta = 0.0;
};

/// mu = mu0(x+) exp(integral of gamma along the path): along the curve
/// d/dt mu = beta.grad mu = -gamma mu. mu0(x+) comes from an ExitProfile.
/// Nodes outside the mask are filled from their inside neighbours.
ScalarField solve_transport(const TransportCoefficients& c, const BoundaryValues<double>& mu0,
                            const DomainMask& mask, const TransportOptions& opt = {},
                            TransportReport* report = nullptr);

/// CSV rows node_i,node_j,t,x,y,gamma_sample for every recorded point.
void write_paths_csv(std::ostream& os, const GridSpec& grid, const std::vector<CharPath>& paths);

}  // namespace qpat
