#pragma once

// Internal data d = mu u on the domain grid, with the boundary illumination
// that produced u and the frequency it was built from.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qpat/cgo.hpp"
#include "qpat/grid.hpp"

namespace qpat {

struct Provenance {
  bool noisy = false;
  double level = 0.0;
  double corr_width = 0.0;
  std::uint64_t seed = 0;

  std::string label() const;
};

struct InternalData {
  ComplexField d;
  BoundaryValues<cplx> g;   // illumination on the mask boundary nodes
  CGOParams params;
  Vec2 center;              // envelope centre of the illumination
  Provenance provenance;
  double g_min = 0.0;
};

/// d = mu u nodewise. g_min defaults to 1e-8 max|g|.
InternalData synthesize(const ScalarField& mu, const ComplexField& u, const BoundaryValues<cplx>& g,
                        const CGOParams& params, Vec2 center,
                        std::optional<double> g_min = std::nullopt);

/// Adds a smooth complex Gaussian random field (white noise blurred by a
/// Gaussian of standard deviation corr_width) scaled so its discrete C1 norm
/// over the whole grid equals level.
InternalData add_noise(const InternalData& data, double level, double corr_width, std::uint64_t seed);

/// The unscaled blurred field add_noise draws for a seed.
ComplexField smooth_noise(const GridSpec& grid, double corr_width, std::uint64_t seed);

struct BoundaryMu {
  BoundaryValues<double> mu0;
  double max_imag = 0.0;   // max |Im(d/g)| / max |Re(d/g)|
};
BoundaryMu boundary_mu(const InternalData& data, const DomainMask& mask);

ScalarField mu_from_phantom(const ScalarField& D, const ScalarField& sigma_a);

/// Directory layout: data<k>.pfg, illum<k>.pfgb and one manifest.txt.
void save_internal_data(const std::filesystem::path& dir, const std::vector<InternalData>& data,
                        const DomainMask& mask);
std::vector<InternalData> load_internal_data(const std::filesystem::path& dir, const DomainMask& mask);

}  // namespace qpat
