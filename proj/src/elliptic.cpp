#include "qpat/elliptic.hpp"

#include <string>

namespace qpat {

InteriorNumbering::InteriorNumbering(const DomainMask& mask) {
  const GridSpec& g = mask.grid();
  id.assign(g.size(), -1);
  bnd.assign(g.size(), -1);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (mask.interior(k)) {
      id[k] = static_cast<std::ptrdiff_t>(nodes.size());
      nodes.push_back(k);
    }
  }
  const auto b = mask.boundary_nodes();
  for (std::size_t i = 0; i < b.size(); ++i) bnd[b[i]] = static_cast<std::ptrdiff_t>(i);
}

namespace {

void check_positive(const ScalarField& f, const DomainMask& mask, const char* name) {
  require(f.grid == mask.grid(), ErrorKind::dimension, std::string(name) + " lives on another grid");
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (!mask.inside(k)) continue;
    if (!(f.values[k] > 0.0) || !std::isfinite(f.values[k]))
      fail(ErrorKind::domain, std::string(name) + " must be positive, found " +
                                  std::to_string(f.values[k]) + " at node " + std::to_string(k));
  }
}

template <class T>
std::vector<T> build_rhs(const EllipticSystem& sys, const BoundaryValues<T>& g,
                         const InteriorNumbering& num, const T* source) {
  std::vector<T> rhs(num.nodes.size(), T{});
  for (std::size_t u = 0; u < rhs.size(); ++u) {
    T s = source ? source[num.nodes[u]] : T{};
    for (const auto& [node, w] : sys.lift[u]) s += w * g[static_cast<std::size_t>(num.bnd[node])];
    rhs[u] = s;
  }
  return rhs;
}

template <class T>
Field<T> scatter(const DomainMask& mask, const InteriorNumbering& num, const std::vector<T>& x,
                 const BoundaryValues<T>& g) {
  Field<T> out(mask.grid());
  for (std::size_t u = 0; u < x.size(); ++u) out.values[num.nodes[u]] = x[u];
  const auto b = mask.boundary_nodes();
  for (std::size_t i = 0; i < b.size(); ++i) out.values[b[i]] = g[i];
  return out;
}

template <class T>
void check_trace(const BoundaryValues<T>& g, const DomainMask& mask) {
  require(g.size() == mask.boundary_nodes().size(), ErrorKind::dimension,
          "boundary data has " + std::to_string(g.size()) + " values, mask has " +
              std::to_string(mask.boundary_nodes().size()) + " boundary nodes");
}

}  // namespace

EllipticSystem assemble_elliptic(const ScalarField* D, const ScalarField& c, const DomainMask& mask,
                                 const InteriorNumbering& num) {
  const GridSpec& g = mask.grid();
  const double ax = 1.0 / (g.dx * g.dx), ay = 1.0 / (g.dy * g.dy);
  EllipticSystem sys{linalg::CsrMatrix<double>(num.nodes.size()), {}};
  sys.lift.resize(num.nodes.size());
  auto face = [&](std::size_t a, std::size_t b) {
    if (!D) return 1.0;
    const double da = D->values[a], db = D->values[b];
    return 2.0 * da * db / (da + db);
  };
  const std::ptrdiff_t nx = g.nx;
  for (std::size_t u = 0; u < num.nodes.size(); ++u) {
    const std::size_t k = num.nodes[u];
    const std::size_t nb[4] = {k - 1, k + 1, k - static_cast<std::size_t>(nx),
                               k + static_cast<std::size_t>(nx)};
    const double h2[4] = {ax, ax, ay, ay};
    double diag = c.values[k];
    // Columns must be ascending: south, west, centre, east, north.
    const int order[4] = {2, 0, 1, 3};
    double w[4];
    for (int d = 0; d < 4; ++d) {
      w[d] = face(k, nb[d]) * h2[d];
      diag += w[d];
    }
    bool centre_done = false;
    for (int oi = 0; oi < 4; ++oi) {
      const int d = order[oi];
      if (!centre_done && nb[d] > k) {
        sys.matrix.add(u, diag);
        centre_done = true;
      }
      if (num.id[nb[d]] >= 0) {
        sys.matrix.add(static_cast<std::size_t>(num.id[nb[d]]), -w[d]);
      } else {
        sys.lift[u].emplace_back(nb[d], w[d]);
      }
    }
    if (!centre_done) sys.matrix.add(u, diag);
    sys.matrix.end_row();
  }
  return sys;
}

ScalarField solve_diffusion(const ScalarField& D, const ScalarField& sigma_a,
                            const BoundaryValues<double>& g, const DomainMask& mask,
                            const LinearSolveConfig& cfg, SolveStats* stats) {
  check_positive(D, mask, "D");
  check_positive(sigma_a, mask, "sigma_a");
  check_trace(g, mask);
  const InteriorNumbering num(mask);
  auto sys = assemble_elliptic(&D, sigma_a, mask, num);
  const auto rhs = build_rhs<double>(sys, g, num, nullptr);
  const linalg::LinearSolver<double> solver(std::move(sys.matrix), cfg);
  return scatter(mask, num, solver.solve(rhs, stats), g);
}

ComplexField solve_diffusion(const ScalarField& D, const ScalarField& sigma_a,
                             const BoundaryValues<cplx>& g, const DomainMask& mask,
                             const LinearSolveConfig& cfg, SolveStats* stats) {
  check_positive(D, mask, "D");
  check_positive(sigma_a, mask, "sigma_a");
  check_trace(g, mask);
  const InteriorNumbering num(mask);
  auto sys = assemble_elliptic(&D, sigma_a, mask, num);
  const auto rhs = build_rhs<cplx>(sys, g, num, nullptr);
  const linalg::LinearSolver<double> solver(std::move(sys.matrix), cfg);
  return scatter(mask, num, solver.solve_complex(rhs, stats), g);
}

ComplexField solve_schrodinger(const ScalarField& q, const BoundaryValues<cplx>& g,
                               const DomainMask& mask, const LinearSolveConfig& cfg,
                               SolveStats* stats) {
  require(q.grid == mask.grid(), ErrorKind::dimension, "q lives on another grid");
  check_trace(g, mask);
  ScalarField c(q.grid);
  for (std::size_t k = 0; k < c.size(); ++k) c.values[k] = -q.values[k];
  const InteriorNumbering num(mask);
  auto sys = assemble_elliptic(nullptr, c, mask, num);
  const auto rhs = build_rhs<cplx>(sys, g, num, nullptr);
  try {
    const linalg::LinearSolver<double> solver(std::move(sys.matrix), cfg);
    return scatter(mask, num, solver.solve_complex(rhs, stats), g);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::singular) throw;
    fail(ErrorKind::singular, std::string("Schrodinger system is singular (eigenvalue collision); ") +
                                  "try a different extension of q or another grid. " + e.what());
  }
}

ScalarField solve_shifted(const ScalarField& q, const ScalarField& rhs_field,
                          const BoundaryValues<double>& bc, const DomainMask& mask,
                          const LinearSolveConfig& cfg, SolveStats* stats) {
  require(q.grid == mask.grid() && rhs_field.grid == mask.grid(), ErrorKind::dimension,
          "q or rhs lives on another grid");
  check_trace(bc, mask);
  ScalarField c(q.grid);
  for (std::size_t k = 0; k < c.size(); ++k) c.values[k] = -q.values[k];
  const InteriorNumbering num(mask);
  auto sys = assemble_elliptic(nullptr, c, mask, num);
  const auto rhs = build_rhs<double>(sys, bc, num, rhs_field.values.data());
  try {
    const linalg::LinearSolver<double> solver(std::move(sys.matrix), cfg);
    return scatter(mask, num, solver.solve(rhs, stats), bc);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::singular) throw;
    fail(ErrorKind::singular, std::string("shifted system is singular (eigenvalue collision); ") +
                                  "try a different grid. " + e.what());
  }
}

}  // namespace qpat
