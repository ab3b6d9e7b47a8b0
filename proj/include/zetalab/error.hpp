#pragma once

#include <stdexcept>
#include <string>

namespace zetalab {

enum class ErrorKind {
  InvalidArgument,
  Config,
  Io,
  MissingArtifacts,
  NonConvergence,
  NotHyperbolic,
  Degenerate,
  ContinuationFailure,
  CollisionDetected,
  DigestMismatch,
  SchemaMismatch,
  SingularMonodromy,
  GridTooCoarse,
  NonMonotone,
  InsufficientTraces,
  AmbiguousRounding,
  RootIterationStall,
  DegenerateFit,
  EigenFailure,
  SigmaOnEigenvalue,
  ValidationFailure,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above; the
/// CLI maps kinds onto its exit-code contract.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace zetalab
