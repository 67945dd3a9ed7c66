#pragma once

// Reconstruction chain mu -> u -> q -> sqrt(D) -> (D, sigma_a) from internal
// data, for the conjugate-pair route and the four-measurement route, and the
// Liouville forward map used to build phantoms.

#include <filesystem>
#include <string>
#include <vector>

#include "qpat/elliptic.hpp"
#include "qpat/internal_data.hpp"
#include "qpat/recon_fields.hpp"
#include "qpat/transport.hpp"

namespace qpat {

enum class Route { two_data, multi_data };
enum class MuMode { poisson, path };
const char* to_string(Route r);
const char* to_string(MuMode m);

struct PipelineConfig {
  LinearSolveConfig linear;
  TransportOptions transport;
  MuMode mu_mode = MuMode::poisson;
  /// vanishing-solution guard: |u| >= u_min_rel max|u| on the mask interior.
  double u_min_rel = 1e-10;
  double cond_max = 1e6;
  /// a warning is attached when curl(Gamma) exceeds this.
  double curl_warn = 1.0;
};

struct ReconDiagnostics {
  double min_abs_u = 0.0;
  double mu0_imag = 0.0;
  double transport_residual = 0.0;
  double poisson_residual = 0.0;
  double sqrtD_residual = 0.0;
  double curl_residual = 0.0;
  double condition_max = 0.0;
  double flatness_gap = 0.0;
  double zeta = 0.0;
  double max_exit_time = 0.0;
  std::vector<std::string> warnings;
};

struct ReconResult {
  ScalarField mu, q, sqrtD, D, sigma_a;
  Route route = Route::two_data;
  MuMode mu_mode = MuMode::poisson;
  ReconDiagnostics diag;
};

/// u = d / mu on the mask (zero elsewhere).
ComplexField recover_u(const InternalData& data, const ScalarField& mu, const DomainMask& mask);

/// q = -Re(conj(u) lap u) / |u|^2 on the mask interior, filled outward.
ScalarField recover_q(const ComplexField& u, const DomainMask& mask, double u_min,
                      double* min_abs_u = nullptr);

/// Solves -lap w - q w = mu with w = sqrtD_boundary on the boundary.
ScalarField recover_sqrtD(const ScalarField& q, const ScalarField& mu,
                          const BoundaryValues<double>& sqrtD_boundary, const DomainMask& mask,
                          const LinearSolveConfig& cfg = {}, SolveStats* stats = nullptr);

ScalarField recover_sigma(const ScalarField& mu, const ScalarField& sqrtD);

struct Liouville {
  ScalarField q, mu, sqrtD;
};
/// q = -lap(sqrt D)/sqrt D - sigma_a/D by stencils (grid rim filled), mu = sigma_a/sqrt D.
Liouville liouville_forward(const ScalarField& D, const ScalarField& sigma_a);
/// max over the mask interior of |lap(sqrt(D) u) + q sqrt(D) u| for a diffusion solution u.
double liouville_residual(const Liouville& l, const ComplexField& u, const DomainMask& mask);

/// mu from Gamma = -grad log mu: Dirichlet Poisson problem for log mu, or
/// trapezoid integration along grid staircases from the anchor node (the
/// lowest boundary node nearest the centre column).
ScalarField mu_from_gradient(const GradientCoefficient& G, const BoundaryValues<double>& mu0,
                             const DomainMask& mask, MuMode mode, const LinearSolveConfig& cfg = {},
                             double* residual = nullptr);
std::size_t path_anchor(const DomainMask& mask);

ReconResult run_two_data(const InternalData& data, const BoundaryValues<double>& sqrtD_boundary,
                         const DomainMask& mask, const PipelineConfig& cfg = {});
ReconResult run_multi_data(const std::vector<InternalData>& data,
                           const BoundaryValues<double>& sqrtD_boundary, const DomainMask& mask,
                           const PipelineConfig& cfg = {});

/// Directory: mu.pfg q.pfg sqrtD.pfg D.pfg sigma_a.pfg manifest.txt diagnostics.csv
void save_recon(const std::filesystem::path& dir, const ReconResult& r);

}  // namespace qpat
