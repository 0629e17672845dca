"""Model primitives: market parameters, payoff profiles, characteristic roots.

The ratio process Z = Y/X satisfies, regime by regime, a linear ODE whose
solutions behave like powers of w = 2/(sigma^2 z); the exponents are the
roots of

    q^2 + (1 + 2(mu -+ kappa*sigma)/sigma^2) q - 2(r - mu +- kappa*sigma)/sigma^2 = 0,

with the upper sign choice labelled ``PLUS_KAPPA`` (density generator stuck
at +kappa, i.e. worst-case drift mu - kappa*sigma) and the lower one
``MINUS_KAPPA``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from .errors import (
    ComplexRoots,
    DegenerateRho,
    ModelValidationError,
    NegativeKappa,
    NonPositiveRate,
    NonPositiveSigma,
    NonPositiveStrike,
)


class DriftSign(Enum):
    """Which regime ODE a fundamental pair belongs to."""

    PLUS_KAPPA = 1    # drift mu - kappa*sigma, rate r - mu + kappa*sigma
    MINUS_KAPPA = -1  # drift mu + kappa*sigma, rate r - mu - kappa*sigma


@dataclass(frozen=True)
class ModelParams:
    """Validated market and ambiguity primitives.

    Attributes
    ----------
    mu, sigma, r, kappa:
        GBM drift, volatility (> 0), discount rate (> 0) and ambiguity
        radius (>= 0).
    rho_plus:
        r - mu + kappa*sigma.  Required strictly positive at construction:
        every downstream claim about the increasing solution P relies on it.
    rho_minus:
        r - mu - kappa*sigma.  May be negative; flags below record what that
        disables.
    upper_transient_flag:
        True when 2*mu <= 2*kappa*sigma - sigma^2, in which case the
        upper-boundary solver refuses (hitting times need not be finite).
    """

    mu: float
    sigma: float
    r: float
    kappa: float
    rho_plus: float = field(init=False)
    rho_minus: float = field(init=False)
    upper_transient_flag: bool = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "rho_plus", self.r - self.mu + self.kappa * self.sigma)
        object.__setattr__(self, "rho_minus", self.r - self.mu - self.kappa * self.sigma)
        object.__setattr__(
            self,
            "upper_transient_flag",
            2.0 * self.mu <= 2.0 * self.kappa * self.sigma - self.sigma**2,
        )

    def delta(self, sign: DriftSign) -> float:
        """Effective X-drift mu -+ kappa*sigma for the given regime."""
        return self.mu - sign.value * self.kappa * self.sigma

    def rho(self, sign: DriftSign) -> float:
        """Effective discount r - mu +- kappa*sigma for the given regime."""
        return self.rho_plus if sign is DriftSign.PLUS_KAPPA else self.rho_minus


def make_model(mu: float, sigma: float, r: float, kappa: float) -> ModelParams:
    """Validate raw numbers into :class:`ModelParams`.

    Raises
    ------
    NonPositiveSigma, NonPositiveRate, NegativeKappa
        Individual invariant violations.
    DegenerateRho
        When r - mu + kappa*sigma <= 0; the construction of the increasing
        fundamental solution divides by this quantity.
    """
    mu, sigma, r, kappa = float(mu), float(sigma), float(r), float(kappa)
    for name, v in (("mu", mu), ("sigma", sigma), ("r", r), ("kappa", kappa)):
        if not math.isfinite(v):
            raise ModelValidationError(f"{name} must be finite, got {v}")
    if sigma <= 0.0:
        raise NonPositiveSigma(f"sigma must be > 0, got {sigma}")
    if r <= 0.0:
        raise NonPositiveRate(f"r must be > 0, got {r}")
    if kappa < 0.0:
        raise NegativeKappa(f"kappa must be >= 0, got {kappa}")
    if r - mu + kappa * sigma <= 0.0:
        raise DegenerateRho(
            f"require r - mu + kappa*sigma > 0, got {r - mu + kappa * sigma}"
        )
    return ModelParams(mu=mu, sigma=sigma, r=r, kappa=kappa)


# ---------------------------------------------------------------------------
# payoffs
# ---------------------------------------------------------------------------

class PayoffKind(Enum):
    INTEGRAL = "integral"
    EXCHANGE = "exchange"
    FLOOR = "floor"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Payoff:
    """Positively homogeneous payoff F(x, y) = x * g(y/x), encoded by g.

    ``g`` only needs to be measurable; the built-in profiles are

    * integral:  g(z) = z
    * exchange:  g(z) = max(z - K, 0), K > 0
    * floor:     g(z) = max(1, z)
    """

    kind: PayoffKind
    profile: Callable[[float], float]
    strike: Optional[float] = None

    @staticmethod
    def integral() -> "Payoff":
        return Payoff(PayoffKind.INTEGRAL, lambda z: z)

    @staticmethod
    def exchange(strike: float) -> "Payoff":
        strike = float(strike)
        if not (strike > 0.0):
            raise NonPositiveStrike(f"exchange strike must be > 0, got {strike}")
        return Payoff(PayoffKind.EXCHANGE, lambda z: max(z - strike, 0.0), strike)

    @staticmethod
    def floor() -> "Payoff":
        return Payoff(PayoffKind.FLOOR, lambda z: max(1.0, z))

    @staticmethod
    def custom(profile: Callable[[float], float]) -> "Payoff":
        return Payoff(PayoffKind.CUSTOM, profile)

    def g(self, z: float) -> float:
        return float(self.profile(float(z)))

    def g_vec(self, z):
        """Vectorized profile; built-ins avoid the per-element round trip."""
        import numpy as np

        z = np.asarray(z, dtype=float)
        if self.kind is PayoffKind.INTEGRAL:
            return z.copy()
        if self.kind is PayoffKind.EXCHANGE:
            return np.maximum(z - self.strike, 0.0)
        if self.kind is PayoffKind.FLOOR:
            return np.maximum(1.0, z)
        return np.array([self.profile(float(t)) for t in z])

    def value(self, x: float, y: float) -> float:
        """F(x, y) = x * g(y/x) for x > 0."""
        if x <= 0.0:
            from .errors import DomainError

            raise DomainError(f"payoff requires x > 0, got {x}")
        return x * self.g(y / x)


# ---------------------------------------------------------------------------
# characteristic roots
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CharacteristicRoots:
    """Roots psi > phi of the regime quadratic for one drift sign.

    For PLUS_KAPPA (where rho_plus > 0 is enforced) psi > 0 > phi.  For
    MINUS_KAPPA with rho_minus < 0 both roots are real negative whenever the
    discriminant allows; psi is always the larger root and, since r > 0,
    satisfies psi > -1.
    """

    psi: float
    phi: float
    drift_sign: DriftSign

    @property
    def b(self) -> float:
        """Second hypergeometric parameter 1 + psi - phi (> 1)."""
        return 1.0 + self.psi - self.phi


def characteristic_roots(model: ModelParams, drift_sign: DriftSign) -> CharacteristicRoots:
    """Solve the regime quadratic for the requested drift sign.

    Uses the numerically stable quadratic formula (no subtraction of
    nearly-equal quantities for the small root).

    Raises
    ------
    ComplexRoots
        If the discriminant is negative (possible only for MINUS_KAPPA with
        strongly negative rate).
    """
    s2 = model.sigma**2
    delta = model.delta(drift_sign)
    rho = model.rho(drift_sign)
    # q^2 + lin*q + con = 0
    lin = 1.0 + 2.0 * delta / s2
    con = -2.0 * rho / s2
    disc = lin * lin - 4.0 * con
    if disc < 0.0:
        raise ComplexRoots(
            f"discriminant {disc} < 0 for {drift_sign.name} at "
            f"(mu={model.mu}, sigma={model.sigma}, r={model.r}, kappa={model.kappa})"
        )
    sq = math.sqrt(disc)
    if lin >= 0.0:
        q_small = (-lin - sq) / 2.0          # the more negative root, exact
        q_other = con / q_small if q_small != 0.0 else (-lin + sq) / 2.0
        psi, phi = q_other, q_small
    else:
        q_big = (-lin + sq) / 2.0
        q_other = con / q_big if q_big != 0.0 else (-lin - sq) / 2.0
        psi, phi = q_big, q_other
    if psi < phi:
        psi, phi = phi, psi
    return CharacteristicRoots(psi=psi, phi=phi, drift_sign=drift_sign)
