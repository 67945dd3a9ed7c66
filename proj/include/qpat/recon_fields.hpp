#pragma once

// Coefficients of the transport equation beta.grad mu + gamma mu = 0 built
// from internal data, and the gradient-form coefficient Gamma with
// grad mu + Gamma mu = 0 from two such pairs.

#include <vector>

#include "qpat/internal_data.hpp"

namespace qpat {

struct TransportCoefficients {
  VectorField beta;
  ScalarField gamma;
  std::vector<std::uint8_t> valid;   // nodes where the stencils were applied
  CGOParams params;
  /// max over valid nodes of the beta component orthogonal to kperp.
  double flatness_gap = 0.0;

  /// Wraps given fields, valid on the mask interior, everything else filled.
  static TransportCoefficients from_fields(VectorField beta, ScalarField gamma, const DomainMask& mask,
                                           const CGOParams& params = CGOParams::from_kappa({1.0, 0.0}));
};

/// beta = chi/(2|kappa|) Im(d grad conj(d) - conj(d) grad d),
/// gamma = chi/(4|kappa|) Im(conj(d) lap d - d lap conj(d)), chi = exp(-2 kappa.(x - xc)).
TransportCoefficients beta_gamma_two(const InternalData& data, const DomainMask& mask);

/// data = {d1, d2} for rho1 = -rho2. The first pair uses Re(.) with chi = 1,
/// the second is beta_gamma_two of d2.
std::vector<TransportCoefficients> beta_gamma_multi(const std::vector<InternalData>& data,
                                                    const DomainMask& mask);

/// max over valid nodes of |beta - reference|.
double flatness_gap_from(const TransportCoefficients& c, const VectorField& reference);

struct GradientCoefficient {
  VectorField Gamma;
  std::vector<std::uint8_t> valid;
  double condition_max = 0.0;
  double curl_residual = 0.0;
};

/// Solves [beta_1; beta_2] Gamma = (gamma_1, gamma_2) at each valid node.
GradientCoefficient assemble_gamma(const std::vector<TransportCoefficients>& coeffs,
                                   double cond_max = 1e6);

/// max |d1 G2 - d2 G1| over nodes whose four neighbours are valid.
double curl_residual(const VectorField& G, const std::vector<std::uint8_t>& valid);

/// max over valid nodes of |beta.grad mu + gamma mu|, grad by centred differences.
double transport_residual(const TransportCoefficients& c, const ScalarField& mu);

}  // namespace qpat
