#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rpac {

enum class ErrorKind {
  CyclicGraph,
  DanglingHidden,
  BadEdgeDirection,
  DuplicateConstant,
  DuplicateEdge,
  UnknownNeuron,
  DimensionMismatch,
  EdgeSetMismatch,
  InvalidDistribution,
  NonHiddenNeuron,
  DegenerateCoefficients,
  ScheduleMismatch,
  PathExplosion,
  InvalidParams,
  EmptyGrid,
  EmptyDataset,
  LabelOutOfRange,
  SchemaError,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

// All library failures are reported through this exception type. `detail`
// names the offending neuron, edge or field.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string detail);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace rpac
