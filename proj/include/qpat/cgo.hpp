#pragma once

// Complex geometrical optics solutions u = exp(rho.(x - xc)) (1 + psi) of
// lap u + q u = 0, with rho = kappa + i kperp, rho.rho = 0. The envelope is
// centred at the mask centre xc. psi is the decaying solution of the
// Lippmann-Schwinger form psi = -G(q (1 + psi)) on a box padded around the
// domain grid, G being the periodic lattice inverse of lap + 2 rho.grad plus
// an exact linear term for the mean; q vanishes near the box edges.

#include <array>
#include <optional>

#include "qpat/grid.hpp"
#include "qpat/linalg.hpp"

namespace qpat {

struct CGOParams {
  Vec2 kappa;
  Vec2 kperp;

  /// kperp = rot90(kappa).
  static CGOParams from_kappa(Vec2 kappa);
  double magnitude() const { return norm(kappa); }
  std::array<cplx, 2> rho() const {
    return {cplx(kappa.x, kperp.x), cplx(kappa.y, kperp.y)};
  }
  cplx rho_dot(Vec2 r) const { return cplx(dot(kappa, r), dot(kperp, r)); }
  cplx rho_dot_rho() const;
  /// rho-bar = kappa - i kperp.
  CGOParams conjugate() const { return {kappa, -1.0 * kperp}; }
  CGOParams negated() const { return {-1.0 * kappa, -1.0 * kperp}; }
  /// Configuration error unless |kappa| = |kperp| > 0 and kappa . kperp = 0.
  void validate() const;
};

struct PaddedPotential {
  ScalarField q;            // on the padded grid
  GridSpec domain_grid;
  int pad_cells = 0;
  double taper_width = 0.0;
  Vec2 center;              // mask centre, also the envelope centre
};

/// Defaults: pad of half the domain width per side, taper of a quarter width.
PaddedPotential extend_potential(const ScalarField& q, const DomainMask& mask,
                                 std::optional<int> pad_cells = std::nullopt,
                                 std::optional<double> taper_width = std::nullopt);

ComplexField solve_psi(const PaddedPotential& qp, const CGOParams& params,
                       const LinearSolveConfig& cfg = {}, SolveStats* stats = nullptr);

struct BornSeries {
  ComplexField psi;
  ComplexField psi0;         // first term
  int terms = 0;
  double contraction = 0.0;  // last ratio |psi_j| / |psi_{j-1}|
  std::vector<double> term_norms;
};
BornSeries born_series_psi(const PaddedPotential& qp, const CGOParams& params, int jmax,
                           double tol, const LinearSolveConfig& cfg = {});

struct CGOSolution {
  CGOParams params;
  Vec2 center;
  ComplexField psi;              // padded grid
  ComplexField u;                // every node of the domain grid
  BoundaryValues<cplx> trace;    // u on the mask boundary nodes
  double residual_norm = 0.0;
};

CGOSolution assemble_cgo(const PaddedPotential& qp, const CGOParams& params,
                         const ComplexField& psi, const DomainMask& mask);

/// Extend, solve, assemble.
CGOSolution make_cgo(const ScalarField& q, const DomainMask& mask, const CGOParams& params,
                     const LinearSolveConfig& cfg = {}, SolveStats* stats = nullptr);

/// exp(rho.(x - xc)) (1 + psi(x)) at the boundary nodes of another mask with
/// the same centre, psi sampled bilinearly (used to illuminate fine grids from
/// a coarser CGO solve).
BoundaryValues<cplx> cgo_trace_on(const CGOSolution& sol, const DomainMask& target);
/// Same evaluation at every node of a grid inside the padded box.
ComplexField cgo_field_on(const CGOSolution& sol, const GridSpec& target);

/// Frequencies for the four-measurement route in two dimensions:
/// rho2 = kmag (e1 + i e2), rho1 = -rho2. rho1 + rho2 = 0, so the weight
/// for the first pair is 1; the second pair uses exp(-2 kappa1.(x - xc)).
struct MultiRhoSet {
  CGOParams rho1;
  CGOParams rho2;
  /// Weight applied to the j-th coefficient pair: "1" or "exp(-2 kappa.(x-xc))".
  std::array<const char*, 2> chi{"1", "exp(-2 kappa.(x-xc))"};
};
MultiRhoSet multi_rho_set(double kmag);

}  // namespace qpat
