#pragma once

// Dirichlet problems on a DomainMask, discretized on the interior nodes with
// the boundary values substituted into the right-hand side:
//   diffusion     -div(D grad u) + sigma_a u = 0   (harmonic-mean face D)
//   Schrodinger    lap u + q u = 0
//   shifted       -lap w - q w = rhs

#include "qpat/grid.hpp"
#include "qpat/linalg.hpp"

namespace qpat {

/// Unknown numbering: interior nodes in row-major order.
struct InteriorNumbering {
  std::vector<std::ptrdiff_t> id;    // per grid node, -1 when not an unknown
  std::vector<std::size_t> nodes;    // unknown -> grid node
  std::vector<std::ptrdiff_t> bnd;   // per grid node, boundary index or -1

  explicit InteriorNumbering(const DomainMask& mask);
};

/// -div(D grad .) + c on the interior unknowns. `lift` receives, per unknown,
/// the coefficients multiplying boundary values (node, weight) so callers can
/// build right-hand sides for any Dirichlet data.
struct EllipticSystem {
  linalg::CsrMatrix<double> matrix;
  std::vector<std::vector<std::pair<std::size_t, double>>> lift;
};
EllipticSystem assemble_elliptic(const ScalarField* D, const ScalarField& c, const DomainMask& mask,
                                 const InteriorNumbering& num);

ScalarField solve_diffusion(const ScalarField& D, const ScalarField& sigma_a,
                            const BoundaryValues<double>& g, const DomainMask& mask,
                            const LinearSolveConfig& cfg = {}, SolveStats* stats = nullptr);
ComplexField solve_diffusion(const ScalarField& D, const ScalarField& sigma_a,
                             const BoundaryValues<cplx>& g, const DomainMask& mask,
                             const LinearSolveConfig& cfg = {}, SolveStats* stats = nullptr);

ComplexField solve_schrodinger(const ScalarField& q, const BoundaryValues<cplx>& g,
                               const DomainMask& mask, const LinearSolveConfig& cfg = {},
                               SolveStats* stats = nullptr);

ScalarField solve_shifted(const ScalarField& q, const ScalarField& rhs,
                          const BoundaryValues<double>& bc, const DomainMask& mask,
                          const LinearSolveConfig& cfg = {}, SolveStats* stats = nullptr);

}  // namespace qpat
