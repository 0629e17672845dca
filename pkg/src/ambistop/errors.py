"""Exception hierarchy for the ambistop package.

Every failure a caller can act on gets its own class; the CLI maps the
groups below onto distinct exit codes.
"""

from __future__ import annotations


class AmbistopError(Exception):
    """Base class for all package-specific errors."""


# ---------------------------------------------------------------------------
# model construction
# ---------------------------------------------------------------------------

class ModelValidationError(AmbistopError, ValueError):
    """Raised when market/ambiguity primitives violate an invariant."""


class NonPositiveSigma(ModelValidationError):
    pass


class NonPositiveRate(ModelValidationError):
    pass


class NegativeKappa(ModelValidationError):
    pass


class DegenerateRho(ModelValidationError):
    """r - mu + kappa*sigma <= 0: the root machinery breaks down."""


class NonPositiveStrike(ModelValidationError):
    pass


# ---------------------------------------------------------------------------
# numeric kernels
# ---------------------------------------------------------------------------

class NumericsError(AmbistopError):
    """Raised when a numeric kernel cannot meet its accuracy contract."""


class DomainError(NumericsError, ValueError):
    """Argument outside the mathematical domain (e.g. z <= 0)."""


class PoleInB(NumericsError):
    """Kummer M requested at a nonpositive-integer second parameter."""


class NoConvergence(NumericsError):
    """No evaluation regime met the accuracy target."""


class ComplexRoots(NumericsError):
    """The characteristic quadratic has no real roots."""


class EvaluationOverflow(NumericsError, OverflowError):
    """Result exceeds double range; reported rather than saturated."""


class BracketFailure(NumericsError):
    """A sign-change bracket could not be established."""


class NoSignChange(BracketFailure):
    """A scanned interval showed no sign change."""


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

class SolverError(AmbistopError):
    pass


class PreconditionError(SolverError):
    """A theorem hypothesis required by the requested solve fails."""


class UnexpectedRegime(SolverError):
    """The computed solution landed outside the regimes the solver handles."""


class NotAnEquilibrium(SolverError):
    """Candidate two-sided maximizers do not carry equal ratio values."""


class EmptyGrid(SolverError, ValueError):
    pass


class MismatchedModel(SolverError, ValueError):
    """Two artifacts built from different models were combined."""


class BadGrid(SolverError, ValueError):
    pass


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

class SimulationError(AmbistopError):
    pass


class InvalidInitialState(SimulationError, ValueError):
    pass


class StepTooLarge(SimulationError):
    """Explicit Euler step violated the stability heuristic too often."""


class StartInStopRegion(SimulationError, ValueError):
    pass


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

class ConfigError(AmbistopError, ValueError):
    pass
