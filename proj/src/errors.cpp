// SPDX-License-Identifier: Apache-2.0
#include "lorentz_eikonal/errors.hpp"

namespace lorentz_eikonal {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::PointOutsideSlab: return "PointOutsideSlab";
    case ErrorCode::InvalidSpacetime: return "InvalidSpacetime";
    case ErrorCode::SpacelikeVector: return "SpacelikeVector";
    case ErrorCode::LeftSlab: return "LeftSlab";
    case ErrorCode::StepFailure: return "StepFailure";
    case ErrorCode::NotCausal: return "NotCausal";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotInPast: return "NotInPast";
    case ErrorCode::NotInFuture: return "NotInFuture";
    case ErrorCode::NoHitInSlab: return "NoHitInSlab";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::NullMinimizer: return "NullMinimizer";
    case ErrorCode::DomainEdge: return "DomainEdge";
    case ErrorCode::NonDifferentiable: return "NonDifferentiable";
    case ErrorCode::AllProbesNonDifferentiable: return "AllProbesNonDifferentiable";
    case ErrorCode::NonpositiveArclength: return "NonpositiveArclength";
    case ErrorCode::EmptyLevelSet: return "EmptyLevelSet";
    case ErrorCode::MultipleRoots: return "MultipleRoots";
    case ErrorCode::NonNegativeC: return "NonNegativeC";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownSymbol: return "UnknownSymbol";
    case ErrorCode::InvalidDatum: return "InvalidDatum";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace lorentz_eikonal
