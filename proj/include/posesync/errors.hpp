#pragma once

#include <stdexcept>
#include <string>

namespace posesync {

/// Base class of every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A 4x4 matrix fed to vee() does not have the se(3) sparsity pattern.
struct MalformedTangent : Error {
  using Error::Error;
};

/// Rotation axis (or screw rotational part) is not a unit vector.
struct InvalidAxis : Error {
  using Error::Error;
};

/// Weighting scale d must be strictly positive.
struct InvalidScale : Error {
  using Error::Error;
};

/// W = A - b b^T / d has a negative eigenvalue.
struct NotPSD : Error {
  using Error::Error;
};

/// Wbar = (tr(W) I - W)/2 is not positive definite.
struct DegenerateWeight : Error {
  using Error::Error;
};

/// Parameter synthesis found no positive synergy gap (Delta_W* ~ 0).
struct NoSynergyGap : Error {
  using Error::Error;
};

/// Interaction graph is not a connected acyclic (tree) graph.
struct AssumptionViolated : Error {
  using Error::Error;
};

/// Self-loop, duplicate edge, or out-of-range vertex index.
struct MalformedGraph : Error {
  using Error::Error;
};

/// Inertia matrix is not symmetric positive definite or mass is not positive.
struct InvalidInertia : Error {
  using Error::Error;
};

/// do_jumps() called while no edge satisfies the jump condition.
struct NotInJumpSet : Error {
  using Error::Error;
};

/// A runtime Lyapunov certificate failed (jump decrease, flow monotonicity,
/// consistency monitor, Zeno monitor, or jump budget).
struct CertificateViolation : Error {
  using Error::Error;
};

/// Non-finite state encountered during integration.
struct NumericalDivergence : Error {
  using Error::Error;
};

/// An on-demand oracle check exceeded its tolerance.
struct OracleFailure : Error {
  using Error::Error;
};

/// Configuration file or preset could not be validated.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace posesync
