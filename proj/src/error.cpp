#include "gbp/error.hpp"

namespace gbp {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::NotAntisymmetric: return "NotAntisymmetric";
    case Errc::UnknownElement: return "UnknownElement";
    case Errc::BaseMismatch: return "BaseMismatch";
    case Errc::InvalidPartition: return "InvalidPartition";
    case Errc::NotSameDistribution: return "NotSameDistribution";
    case Errc::NonUniform: return "NonUniform";
    case Errc::NonUniformSubstitution: return "NonUniformSubstitution";
    case Errc::MalformedGoal: return "MalformedGoal";
    case Errc::DepthOutOfRange: return "DepthOutOfRange";
    case Errc::BudgetTooSmall: return "BudgetTooSmall";
    case Errc::EmptyLabelSet: return "EmptyLabelSet";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::DepthMismatch: return "DepthMismatch";
    case Errc::CarrierTooLarge: return "CarrierTooLarge";
    case Errc::SchemaError: return "SchemaError";
    case Errc::MassExceedsOne: return "MassExceedsOne";
    case Errc::NotMonotone: return "NotMonotone";
    case Errc::UnknownState: return "UnknownState";
    case Errc::LabelMismatch: return "LabelMismatch";
    case Errc::NotDiscrete: return "NotDiscrete";
    case Errc::ParseError: return "ParseError";
    case Errc::NonUniformDepth: return "NonUniformDepth";
    case Errc::UnknownSymbol: return "UnknownSymbol";
    case Errc::IncompatibleLogic: return "IncompatibleLogic";
    case Errc::NoWitnessWithinBounds: return "NoWitnessWithinBounds";
    case Errc::Overflow: return "Overflow";
  }
  return "Error";
}

}  // namespace gbp
