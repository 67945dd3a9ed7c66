#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace qpat {

enum class ErrorKind {
  dimension,
  domain,
  out_of_range,
  configuration,
  geometry,
  iteration,
  singular,
  overflow,
  divergence,
  degeneracy,
  reconstruction_domain,
  vanishing_solution,
  division_hazard,
  model_violation,
  io,
};

std::string_view to_string(ErrorKind kind);

/// Base exception for every numerical or configuration failure in the library.
/// `stage` is filled in by the pipeline when an error escapes one of its stages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }

  Error with_stage(std::string stage) const {
    Error e(kind_, std::string("[") + stage + "] " + what());
    e.stage_ = std::move(stage);
    return e;
  }

  /// True for errors caused by user input rather than by the numerics.
  bool is_configuration() const noexcept {
    return kind_ == ErrorKind::configuration || kind_ == ErrorKind::io;
  }

 private:
  ErrorKind kind_;
  std::string stage_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace qpat
