#pragma once

// Phantoms, forward simulation of internal data and the experiments built on
// top of the reconstruction chain.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "qpat/pipeline.hpp"

namespace qpat {

struct MaskSpec {
  MaskShape shape = MaskShape::rectangle;
  Vec2 center{0.5, 0.5};
  double radius = 0.45;

  /// "rect" or "disk:<radius>".
  static MaskSpec parse(const std::string& s);
  std::string label() const;
  DomainMask build(const GridSpec& g) const;
};

struct Bump {
  Vec2 center;
  double width = 0.1;      // standard deviation
  double amplitude = 0.0;
};

struct PhantomSpec {
  int resolution = 129;
  MaskSpec mask;
  double D_bg = 1.0;
  double sigma_bg = 0.5;
  std::vector<Bump> D_bumps;
  std::vector<Bump> sigma_bumps;
  double d_min = 1.0, d_max = 1.5;
  double s_min = 0.5, s_max = 1.0;

  /// One bump per coefficient spanning D in [1, 1.5] and sigma_a in [0.5, 1].
  static PhantomSpec standard(int resolution, MaskSpec mask = {});
  void validate() const;
};

struct Phantom {
  GridSpec grid;
  ScalarField D, sigma_a;
  /// sup norms of values, first and second differences of sqrt(D) and sigma_a.
  std::array<double, 3> sqrtD_sup{}, sigma_sup{};
};

/// Closed-form evaluation. Values outside the bounds (beyond round-off) are a
/// configuration error.
Phantom make_phantom(const PhantomSpec& spec);

struct Simulation {
  DomainMask mask;
  Liouville liouville;
  std::vector<CGOSolution> cgo;
  std::vector<InternalData> data;
  BoundaryValues<double> sqrtD_boundary;
  double cgo_residual = 0.0;
};

/// Builds CGO illuminations for the Liouville potential of the phantom,
/// solves the diffusion problem with boundary data g/sqrt(D) and records
/// d = sigma_a u. Two-data route: one datum for kappa = kmag kdir; multi-data
/// route: the rho1 = -rho2 pair of multi_rho_set(kmag).
Simulation simulate(const Phantom& ph, const MaskSpec& mspec, Route route, double kmag,
                    Vec2 kdir = {1.0, 0.0}, const LinearSolveConfig& cfg = {});

/// max |a - b| / max |b| over flagged nodes.
double rel_sup_error(const ScalarField& a, const ScalarField& b, const std::vector<std::uint8_t>& flags);

struct ErrorSet {
  double mu = 0, q = 0, D = 0, sigma_a = 0;
};
/// Relative sup errors over the mask interior.
ErrorSet recon_errors(const ReconResult& r, const Simulation& sim, const Phantom& ph);
/// Same in the discrete C1 norm (values and first differences).
ErrorSet recon_errors_c1(const ReconResult& r, const Simulation& sim, const Phantom& ph);

/// Default frequency magnitude 8 / diam(X).
double default_kmag(const DomainMask& mask);

/// Runs the route's reconstruction on simulated data.
ReconResult reconstruct(const Simulation& sim, Route route, const PipelineConfig& cfg);

// ---------------------------------------------------------------------------
// Experiments.

struct ReportRow {
  std::string experiment;
  std::map<std::string, std::string> cells;
};

struct ExperimentReport {
  std::string name;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  bool r0 = false;
  std::vector<ReportRow> rows;
  std::map<std::string, double> fits;
  std::map<std::string, bool> checks;
  double runtime_s = 0.0;

  void add(std::map<std::string, std::string> cells);
  /// RFC-4180 CSV; every row carries the config hash and seed.
  void write_csv(std::ostream& os) const;
  void write_summary(std::ostream& os) const;
  bool all_passed() const;
};

/// Least-squares slope and intercept of log y against log x.
std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y);
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct ExperimentConfig {
  PipelineConfig pipeline;
  double kmag = 0.0;             // 0: default_kmag of the mask
  Vec2 kdir{1.0, 1.0};           // two-data route only
  std::uint64_t seed = 1;
  std::uint64_t config_hash = 0;
  double corr_width_cells = 4.0;
};

/// Errors per resolution in the sup and C1 norms and the fitted convergence
/// order (with three or more resolutions).
ExperimentReport roundtrip_experiment(const PhantomSpec& spec, Route route, const std::vector<int>& resolutions,
                                      const ExperimentConfig& cfg);

/// Error of the noisy reconstruction against the clean one, versus the
/// measured C1 norm of the data perturbation, over levels x seeds.
ExperimentReport stability_sweep(const PhantomSpec& spec, Route route, const std::vector<double>& levels,
                                 int seeds, const ExperimentConfig& cfg);

struct PsiSpec {
  int resolution = 129;
  MaskSpec mask;
  double amplitude = 1.0;
  Vec2 center{0.5, 0.5};
  double width = 0.15;
};
ExperimentReport psi_decay_experiment(const PsiSpec& spec, const std::vector<double>& kmags,
                                      const ExperimentConfig& cfg);

/// gap = max |beta - beta_ref| with beta_ref computed by the same stencils
/// from the unperturbed data mu exp(rho.(x - xc)); the gap against the
/// continuum leading term -mu^2 kperp/|kperp| and the component of beta
/// orthogonal to kperp are reported alongside.
ExperimentReport flatness_experiment(const PhantomSpec& spec, const std::vector<double>& kmags,
                                     const ExperimentConfig& cfg);

}  // namespace qpat
