#include "zetalab/error.hpp"

namespace zetalab {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::MissingArtifacts: return "MissingArtifacts";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::NotHyperbolic: return "NotHyperbolic";
    case ErrorKind::Degenerate: return "Degenerate";
    case ErrorKind::ContinuationFailure: return "ContinuationFailure";
    case ErrorKind::CollisionDetected: return "CollisionDetected";
    case ErrorKind::DigestMismatch: return "DigestMismatch";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::SingularMonodromy: return "SingularMonodromy";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::NonMonotone: return "NonMonotone";
    case ErrorKind::InsufficientTraces: return "InsufficientTraces";
    case ErrorKind::AmbiguousRounding: return "AmbiguousRounding";
    case ErrorKind::RootIterationStall: return "RootIterationStall";
    case ErrorKind::DegenerateFit: return "DegenerateFit";
    case ErrorKind::EigenFailure: return "EigenFailure";
    case ErrorKind::SigmaOnEigenvalue: return "SigmaOnEigenvalue";
    case ErrorKind::ValidationFailure: return "ValidationFailure";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

}  // namespace zetalab
