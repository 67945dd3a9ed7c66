#pragma once

// Run configuration: flat key=value text with [section] headers. Every key
// has a default, so an empty file is a valid configuration; unknown sections
// or keys are rejected so that typos do not silently fall back to defaults.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qpat/harness.hpp"

namespace qpat {

struct RunConfig {
  PhantomSpec phantom = PhantomSpec::standard(129);
  Route route = Route::two_data;
  ExperimentConfig experiment;
  std::vector<int> resolutions{65, 129, 257};
  std::vector<double> noise_levels{0.0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
  int noise_seeds = 5;
  std::vector<double> flatness_kmags{4, 8, 16, 32};
  std::vector<double> psi_kmags{8, 16, 32};
  PsiSpec psi;

  /// Canonical text form: every key in a fixed order with round-trip number
  /// formatting. Parsing it gives back the same configuration.
  std::string canonical() const;
  /// FNV-1a (64 bit) of canonical().
  std::uint64_t hash() const;
};

/// Throws a configuration error on malformed text, unknown keys or invalid values.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// The config hash and the mask are derived state: call after any change.
void finalize(RunConfig& cfg);

std::uint64_t fnv1a(const std::string& s);

}  // namespace qpat
