#pragma once

#include <stdexcept>
#include <string>

namespace gbp {

enum class Errc {
  NotAntisymmetric,
  UnknownElement,
  BaseMismatch,
  InvalidPartition,
  NotSameDistribution,
  NonUniform,
  NonUniformSubstitution,
  MalformedGoal,
  DepthOutOfRange,
  BudgetTooSmall,
  EmptyLabelSet,
  ShapeMismatch,
  DepthMismatch,
  CarrierTooLarge,
  SchemaError,
  MassExceedsOne,
  NotMonotone,
  UnknownState,
  LabelMismatch,
  NotDiscrete,
  ParseError,
  NonUniformDepth,
  UnknownSymbol,
  IncompatibleLogic,
  NoWitnessWithinBounds,
  Overflow,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace gbp
