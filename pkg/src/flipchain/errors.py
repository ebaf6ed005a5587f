"""Exception types shared across the package."""


class FlipChainError(Exception):
    """Base class for all package-specific errors."""


class PinningViolation(FlipChainError):
    """The coupling transform is not strictly positive at a requested wave number."""


class ValidationRequired(FlipChainError):
    """An operation needs a model satisfying the standing assumptions."""


class DegenerateMode(FlipChainError):
    """A mode sits (numerically) on the critically damped point omega = gamma/2."""


class QuadratureFailure(FlipChainError):
    """An adaptive quadrature did not reach the requested tolerance."""


class DomainError(FlipChainError):
    """Laplace variable outside the analyticity half plane."""


class StepTooLarge(FlipChainError):
    """Time step exceeds the stability/accuracy bound of the Volterra scheme."""


class NonConvergence(FlipChainError):
    """The Volterra solver produced non-finite or unstable values."""


class BracketFailure(FlipChainError):
    """Root bracketing failed in a way the monotonicity argument excludes."""


class MissingAsymptotics(FlipChainError):
    """Asymptotic data (decay rate / amplitude) absent for a requested mode."""


class ConfigError(FlipChainError):
    """Experiment configuration could not be parsed or is inconsistent."""
