"""Exception types shared across the package."""


class GldimerError(Exception):
    """Base class for all package-specific errors."""


class DegenerateStateError(GldimerError):
    """State has no particles; the requested quantity is undefined."""


class TruncationOverflowError(GldimerError):
    """Probability mass on the Fock-basis boundary exceeded the ceiling."""


class StepUnderflowError(GldimerError):
    """Adaptive integrator step size shrank below machine resolution."""


class RegimeError(GldimerError):
    """Requested analytic solution does not exist in this parameter regime."""


class CoalescenceError(RegimeError):
    """Non-oscillatory branches have coalesced; no real angles exist."""


class DivergentSteadyStateError(GldimerError):
    """Constant solution diverges at this parameter point."""


class NonNormalizableError(GldimerError):
    """Requested steady distribution is not normalizable."""


class InteractionSingularityError(GldimerError):
    """Constant macroscopic interaction diverges as the particle number
    approaches one."""


class ConvergenceError(GldimerError):
    """Iterative solver failed to reach the requested residual."""


class ConfigError(GldimerError):
    """Scenario configuration is malformed or inconsistent."""
