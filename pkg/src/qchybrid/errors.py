"""Exception types shared across the toolkit."""


class QCHybridError(Exception):
    """Base class for all toolkit errors."""


class ZeroMass(QCHybridError):
    """Total probability is zero or non-finite; the state cannot be normalized."""


class NonFinite(QCHybridError):
    """A field or integral evaluated to NaN/inf."""


class KindMismatch(QCHybridError):
    """An observable of the wrong kind was passed to an expectation routine."""


class DerivativeUnavailable(QCHybridError):
    """Analytic variational derivatives requested for an unregistered functional."""


class NegativeDensity(QCHybridError):
    """A transformation would push the density below zero."""


class ContextViolation(QCHybridError):
    """An operation was called outside its validity context (e.g. free-sector only)."""


class Instability(QCHybridError):
    """The integrator produced non-finite fields or a suspected phase caustic."""


class StabilityBound(QCHybridError):
    """The requested time step violates the stability bound."""


class DomainTooSmall(QCHybridError):
    """The grid does not cover enough standard deviations around a Gaussian mean."""


class NonQuadratic(QCHybridError):
    """Moment dynamics requested for a potential that is not quadratic."""


class StepFailure(QCHybridError):
    """ODE stepping failed (too many rejected steps or step budget exhausted)."""


class InsufficientSignal(QCHybridError):
    """All post-branch samples sit below the numerical noise floor."""


class BranchInvalid(QCHybridError):
    """The protocol branch specification is unusable for the requested analysis."""


class SchemaError(QCHybridError):
    """A configuration file violates the strict schema."""


class RangeError(QCHybridError):
    """A configuration value violates a type invariant (e.g. non-positive mass)."""
