#pragma once

/// Error taxonomy for the dcgrid library.
///
/// Every failure mode that callers are expected to branch on gets its own
/// exception type; all of them derive from dcgrid::Error so blanket handling
/// stays possible at the CLI boundary.

#include <stdexcept>
#include <string>

namespace dcgrid {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

/// State evaluation hit a division by a controlled quantity (alpha_j <= 0 or
/// v <= 0); the right-hand side is undefined there.
class SingularState : public Error {
public:
    using Error::Error;
};

/// The bus-voltage quadratic has no positive real root: the grid cannot
/// supply the requested net power through the droop law.
class NoPhysicalRoot : public Error {
public:
    using Error::Error;
};

/// The per-branch current quadratic has a negative discriminant: the battery
/// cannot push the required power through its series resistance.
class BatteryOverload : public Error {
public:
    using Error::Error;
};

/// Reserved for a zero droop coefficient combined with an inconsistent power
/// balance. With k_I > 0 the PI integral action pins the bus voltage to v_0,
/// which always yields a consistent balance, so this is currently
/// unreachable; the type exists to keep the error contract stable.
class DegenerateDroop : public Error {
public:
    using Error::Error;
};

/// A Jacobian was requested at a point that is not an equilibrium
/// (residual too large for the linearization to be meaningful).
class NotAtEquilibrium : public Error {
public:
    using Error::Error;
};

/// An iterative numerical procedure (eigenvalue QR sweep, Newton polish)
/// failed to converge. Never silently truncated.
class ConvergenceFailure : public Error {
public:
    using Error::Error;
};

/// No delay-candidate achieved zero counterexamples in tune_tau.
class NoFeasibleTau : public Error {
public:
    using Error::Error;
};

/// Configuration file rejected; message carries line/key diagnostics.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace dcgrid
