#ifndef OSK_TYPES_HPP
#define OSK_TYPES_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace osk {

using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXd;
using IVec = Eigen::VectorXi;

/// Numerical cutoffs shared by every module. All integer outputs of the
/// library (ranks, indices, oscillation numbers) depend on these.
struct Tolerances {
  double rank_rtol = 1e-10;   // relative SVD cutoff for rank decisions
  double struct_atol = 1e-9;  // absolute tolerance for structural identities
  double angle_atol = 1e-9;   // radians; snapping of angles to 2*pi multiples

  void validate() const {
    if (!(rank_rtol > 0.0) || !(struct_atol > 0.0) || !(angle_atol > 0.0))
      throw std::invalid_argument("Tolerances must be strictly positive");
  }
};

enum class ErrorCode {
  NonSymmetric,
  NotPositiveDefinite,
  ShapeMismatch,
  RefinementExhausted,
  EvaluatorMissing,
  SingularFactor,
  PreconditionViolated,
  IllConditioned,
  ResidualTooLarge,
  AmbiguousMatching,
  InvalidPartition,
  ConstructionFailed,
  NotMonotone,
  FrameMismatch,
  OutOfRange,
  StepFailure,
  PartitionNotFound,
  InvalidInput,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace osk

#endif  // OSK_TYPES_HPP
