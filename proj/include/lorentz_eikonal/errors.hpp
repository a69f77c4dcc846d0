// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lorentz_eikonal {

enum class ErrorCode {
  PointOutsideSlab,
  InvalidSpacetime,
  SpacelikeVector,
  LeftSlab,
  StepFailure,
  NotCausal,
  NoConvergence,
  NotInPast,
  NotInFuture,
  NoHitInSlab,
  GridTooCoarse,
  NullMinimizer,
  DomainEdge,
  NonDifferentiable,
  AllProbesNonDifferentiable,
  NonpositiveArclength,
  EmptyLevelSet,
  MultipleRoots,
  NonNegativeC,
  SyntaxError,
  UnknownSymbol,
  InvalidDatum,
  InvalidConfig,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; `code()` identifies the
// failure class named in the operation contracts.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Position-annotated parse failure. `position` is a 0-based character offset.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, std::string expected, const std::string& detail)
      : Error(ErrorCode::SyntaxError,
              "at position " + std::to_string(position) + ": " + detail +
                  (expected.empty() ? std::string() : " (expected " + expected + ")")),
        position_(position),
        expected_(std::move(expected)) {}

  std::size_t position() const noexcept { return position_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::size_t position_;
  std::string expected_;
};

}  // namespace lorentz_eikonal
