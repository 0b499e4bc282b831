#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace covrate {

enum class ErrorKind {
  NonSymmetric,
  NotSpd,
  DimensionMismatch,
  SingularConditioningBlock,
  SingularObservationCovariance,
  InvalidModel,
  RankDeficient,
  InvalidDistortion,
  InfeasibleDistortion,
  NotNested,
  OutOfRange,
  InfiniteRate,
  InvalidNetwork,
  InvalidAllocation,
  SingularGram,
  InfeasibleBudget,
  AssumptionViolated,
  GenerationStalled,
  InvalidParam,
  BracketFailure,
  Io,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonSymmetric: return "NonSymmetric";
    case ErrorKind::NotSpd: return "NotSpd";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SingularConditioningBlock: return "SingularConditioningBlock";
    case ErrorKind::SingularObservationCovariance: return "SingularObservationCovariance";
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::InvalidDistortion: return "InvalidDistortion";
    case ErrorKind::InfeasibleDistortion: return "InfeasibleDistortion";
    case ErrorKind::NotNested: return "NotNested";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::InfiniteRate: return "InfiniteRate";
    case ErrorKind::InvalidNetwork: return "InvalidNetwork";
    case ErrorKind::InvalidAllocation: return "InvalidAllocation";
    case ErrorKind::SingularGram: return "SingularGram";
    case ErrorKind::InfeasibleBudget: return "InfeasibleBudget";
    case ErrorKind::AssumptionViolated: return "AssumptionViolated";
    case ErrorKind::GenerationStalled: return "GenerationStalled";
    case ErrorKind::InvalidParam: return "InvalidParam";
    case ErrorKind::BracketFailure: return "BracketFailure";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Errors that mean "the requested operating point does not exist" rather
/// than "the input is malformed". The CLI maps these to exit code 2.
constexpr bool is_infeasibility(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidDistortion:
    case ErrorKind::InfeasibleDistortion:
    case ErrorKind::OutOfRange:
    case ErrorKind::InfiniteRate:
    case ErrorKind::InfeasibleBudget:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace covrate
