"""Optimal-stopping solvers for the integral, exchange, and floor payoffs,
plus the generic ratio-argmax machinery that identifies stopping rays.

Everything reduces to the scalar ratio Pi_c(z) = g(z) / U_c(z):

* integral  g(z) = z:            lower boundary z_bar, the root of
  P(z) - z P'(z) = 0 beyond 1/r;
* exchange  g(z) = (z - K)^+:    lower boundary z*, the root of
  U_0(z) - (z - K) U_0'(z) = 0 beyond max(z_bar, K); the worst-case
  generator still switches at z_bar < z*;
* floor     g(z) = max(1, z):    single lower boundary z_bar while
  z_bar >= P(z_bar); otherwise a two-sided band (c*, hat_z_(c*)) where c*
  makes U_(c*)(hat_z) = hat_z, so the ratio equals one at both ends;
* custom payoffs can be pushed through the upper-boundary (U_inf = Q) or
  lower-boundary (U_0) argmax routes explicitly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from ._rootfind import bisect, expand_bracket, scan_bracket
from .errors import (
    DomainError,
    EmptyGrid,
    NonPositiveStrike,
    NoSignChange,
    NotAnEquilibrium,
    PreconditionError,
    UnexpectedRegime,
)
from .excessive import (
    INFINITY,
    ZERO,
    ExcessiveFunction,
    build_excessive,
    eval_u,
    solve_hat_z,
    z_bar,
)
from .fundamentals import (
    eval_p,
    fundamental_pair,
    log_scale_density,
    log_speed_density,
)
from .hyper import slog_add, slog_from, slog_mul, slog_value
from .model import DriftSign, ModelParams, Payoff, PayoffKind, make_model


class Regime(Enum):
    LOWER_BOUNDARY = "lower"
    UPPER_BOUNDARY = "upper"
    TWO_SIDED = "two-sided"


@dataclass(frozen=True)
class StoppingSolution:
    """A solved stopping problem: regime, boundaries, value machinery.

    ``switch_z`` is where the worst-case density generator flips sign
    (None means the constant generator +kappa, the Q-member case).
    For LOWER regimes stopping happens at z >= z_upper; for UPPER at
    z <= z_lower; TWO_SIDED stops outside (z_lower, z_upper).
    """

    model: ModelParams
    payoff: Payoff
    regime: Regime
    z_lower: Optional[float]
    z_upper: Optional[float]
    c_star: Optional[float]
    excessive: ExcessiveFunction
    pi_star: float
    switch_z: Optional[float]

    @property
    def boundaries(self):
        if self.regime is Regime.TWO_SIDED:
            return (self.z_lower, self.z_upper, self.c_star)
        return self.z_upper if self.regime is Regime.LOWER_BOUNDARY else self.z_lower

    def continuation_interval(self):
        lo = self.z_lower if self.regime is not Regime.LOWER_BOUNDARY else 0.0
        hi = self.z_upper if self.regime is not Regime.UPPER_BOUNDARY else math.inf
        return (lo if lo is not None else 0.0, hi if hi is not None else math.inf)


# ---------------------------------------------------------------------------
# boundaries
# ---------------------------------------------------------------------------

def integral_boundary(model: ModelParams) -> float:
    """z_bar > 1/r, the unique root of P(z) - z P'(z) = 0."""
    return z_bar(model)


def exchange_boundary(model: ModelParams, strike: float) -> float:
    """z* > max(z_bar, K), the root of U_0(z) - (z - K) U_0'(z) = 0."""
    strike = float(strike)
    if not (strike > 0.0):
        raise NonPositiveStrike(f"strike must be > 0, got {strike}")
    u0 = build_excessive(model, ZERO)

    def h(z: float) -> float:
        s, _ = slog_add(
            u0.u_log(z, 0), slog_mul(slog_from(-(z - strike)), u0.u_log(z, 1))
        )
        return slog_value(s)

    lo = max(u0.hat_z, strike)
    a, b, fa, fb = expand_bracket(h, lo * (1.0 + 1e-12), hi_cap=1e9 * lo)
    return bisect(h, a, b, fa, fb)


def exchange_opt_residual(model: ModelParams, strike: float, z_star: float) -> float:
    """Integral-form first-order condition residual (a cross-check only).

    U_0'(z_bar) K / S_-'(z_bar) + Int_{z_bar}^{z*} U_0(t)
    (1 + (r - mu - kappa sigma) K - r t) m_-'(t) dt vanishes at the optimal
    boundary: integrating d/dz[(U_0 - (z - K) U_0')/S_-'] from z_bar (where
    the switch condition reduces the bracket to K U_0') to z* (where the
    smooth-fit condition kills it).  Adaptive quadrature, integrand
    assembled in log space.
    """
    u0 = build_excessive(model, ZERO)
    pair_m = u0.pair_minus
    rho_m = model.rho_minus

    du = u0.u_log(u0.hat_z, 1)
    first = du[1] * math.exp(
        du[0] + math.log(strike) - log_scale_density(pair_m, u0.hat_z)
    )

    def integrand(t: float) -> float:
        lu = u0.u_log(t, 0)
        lm = log_speed_density(pair_m, t)
        return lu[1] * math.exp(lu[0] + lm) * (1.0 + rho_m * strike - model.r * t)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        integral, _ = quad(
            integrand, u0.hat_z, z_star, epsabs=1e-9, epsrel=1e-10, limit=200,
            points=[u0.hat_z],
        )
    return first + integral


def critical_kappa_floor(
    mu: float, sigma: float, r: float, kappa_max: float = 10.0, tol: float = 1e-6
) -> float:
    """Ambiguity level where the floor option turns two-sided.

    Bisection on the regime indicator z_bar_k - P_k(z_bar_k) over
    [0, kappa_max] to absolute tolerance ``tol``.
    """

    def indicator(kappa: float) -> float:
        m = make_model(mu, sigma, r, kappa)
        zb = z_bar(m)
        return zb - eval_p(fundamental_pair(m), zb)

    f_lo = indicator(0.0)
    f_hi = indicator(kappa_max)
    if f_lo * f_hi > 0.0:
        raise NoSignChange(
            f"indicator has no sign change on [0, {kappa_max}]: "
            f"({f_lo:g}, {f_hi:g})"
        )
    a, b, fa, fb = 0.0, kappa_max, f_lo, f_hi
    while b - a > tol:
        mid = 0.5 * (a + b)
        fm = indicator(mid)
        if fa * fm <= 0.0:
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# full solves
# ---------------------------------------------------------------------------

def _lower_solution(model, payoff, z_star, u0, switch_z) -> StoppingSolution:
    pi = payoff.g(z_star) / eval_u(u0, z_star)
    return StoppingSolution(
        model=model, payoff=payoff, regime=Regime.LOWER_BOUNDARY,
        z_lower=None, z_upper=z_star, c_star=None,
        excessive=u0, pi_star=pi, switch_z=switch_z,
    )


def integral_solve(model: ModelParams) -> StoppingSolution:
    u0 = build_excessive(model, ZERO)
    return _lower_solution(model, Payoff.integral(), u0.hat_z, u0, u0.hat_z)


def exchange_solve(model: ModelParams, strike: float) -> StoppingSolution:
    z_star = exchange_boundary(model, strike)
    u0 = build_excessive(model, ZERO)
    return _lower_solution(model, Payoff.exchange(strike), z_star, u0, u0.hat_z)


def floor_solve(model: ModelParams) -> StoppingSolution:
    """Single lower boundary while z_bar >= P(z_bar); two-sided otherwise."""
    payoff = Payoff.floor()
    u0 = build_excessive(model, ZERO)
    zb = u0.hat_z
    p_zb = eval_u(u0, zb)
    if zb >= p_zb:
        return _lower_solution(model, payoff, zb, u0, zb)

    # two-sided: c* makes the ratio reach 1 at both ends of the band
    def gap(c: float) -> float:
        hat = solve_hat_z(model, c)
        f = build_excessive(model, c)
        return eval_u(f, hat) - hat

    grid = np.geomspace(1e-6, zb, 64)
    a, b, fa, fb = scan_bracket(gap, grid)
    c_star = float(bisect(gap, a, b, fa, fb))
    f = build_excessive(model, c_star)
    z1, z2 = c_star, f.hat_z
    if c_star > 1.0:
        raise UnexpectedRegime(
            f"two-sided floor solve found c* = {c_star:g} > 1; the band value "
            "would not meet the payoff at the lower boundary"
        )
    pi1 = payoff.g(z1) / eval_u(f, z1)
    pi2 = payoff.g(z2) / eval_u(f, z2)
    if abs(pi1 - pi2) > 1e-8 * max(pi1, pi2):
        raise NotAnEquilibrium(
            f"ratio values at the two boundaries disagree: {pi1!r} vs {pi2!r}"
        )
    return StoppingSolution(
        model=model, payoff=payoff, regime=Regime.TWO_SIDED,
        z_lower=z1, z_upper=z2, c_star=c_star,
        excessive=f, pi_star=pi1, switch_z=z2,
    )


def upper_boundary_solve(
    model: ModelParams,
    payoff: Payoff,
    z_range: tuple = (1e-4, 1e4),
    n_scan: int = 400,
) -> StoppingSolution:
    """Upper-boundary solve via the argmax of Pi_inf(z) = g(z) / Q(z).

    Refuses when 2 mu <= 2 kappa sigma - sigma^2 (the finite-hitting
    hypothesis of the upper-boundary theorem).
    """
    if model.upper_transient_flag:
        raise PreconditionError(
            "upper-boundary solve requires 2*mu > 2*kappa*sigma - sigma^2; "
            f"got 2*mu = {2 * model.mu:g} vs {2 * model.kappa * model.sigma - model.sigma ** 2:g}"
        )
    u_inf = build_excessive(model, INFINITY)

    def ratio(z: float) -> float:
        g = payoff.g(z)
        if g == 0.0:
            return 0.0
        lu = u_inf.u_log(z)
        return math.copysign(1.0, g) * math.exp(math.log(abs(g)) - lu[0])

    zs = np.geomspace(z_range[0], z_range[1], n_scan)
    vals = np.array([ratio(z) for z in zs])
    i = int(np.argmax(vals))
    if i == 0 or i == len(zs) - 1:
        raise UnexpectedRegime(
            f"Pi_inf has no interior maximum on [{z_range[0]:g}, {z_range[1]:g}]"
        )
    # golden-section polish on the bracketing triple
    lo, hi = zs[i - 1], zs[i + 1]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = ratio(x1), ratio(x2)
    for _ in range(200):
        if hi - lo < 1e-11 * max(1.0, hi):
            break
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = ratio(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = ratio(x1)
    z_star = 0.5 * (lo + hi)
    return StoppingSolution(
        model=model, payoff=payoff, regime=Regime.UPPER_BOUNDARY,
        z_lower=z_star, z_upper=None, c_star=None,
        excessive=u_inf, pi_star=ratio(z_star), switch_z=None,
    )


def solve(model: ModelParams, payoff: Payoff) -> StoppingSolution:
    """Dispatch on the built-in payoff kinds."""
    if payoff.kind is PayoffKind.INTEGRAL:
        return integral_solve(model)
    if payoff.kind is PayoffKind.EXCHANGE:
        return exchange_solve(model, payoff.strike)
    if payoff.kind is PayoffKind.FLOOR:
        return floor_solve(model)
    raise ValueError(
        "custom payoffs have no generic regime; use upper_boundary_solve or "
        "stopping_set_test explicitly"
    )


# ---------------------------------------------------------------------------
# value, generator, stopping-set machinery
# ---------------------------------------------------------------------------

def value(solution: StoppingSolution, x: float, y: float) -> float:
    """V(x, y) for the solved problem; equals F on the stopping region."""
    if not (x > 0.0):
        raise DomainError(f"value requires x > 0, got {x}")
    if y < 0.0:
        raise DomainError(f"value requires y >= 0, got {y}")
    z = y / x
    payoff = solution.payoff
    if solution.regime is Regime.LOWER_BOUNDARY:
        if z >= solution.z_upper:
            return payoff.value(x, y)
        return x * solution.pi_star * eval_u(solution.excessive, z) if z > 0.0 else (
            x * solution.pi_star * _u_at_zero(solution.excessive)
        )
    if solution.regime is Regime.UPPER_BOUNDARY:
        if z <= solution.z_lower:
            return payoff.value(x, y)
        return x * solution.pi_star * eval_u(solution.excessive, z)
    # two-sided
    if z <= solution.z_lower or z >= solution.z_upper:
        return payoff.value(x, y)
    return x * solution.pi_star * eval_u(solution.excessive, z)


def _u_at_zero(f: ExcessiveFunction) -> float:
    # U_0(0+) = P(0+) = 1; finite c has U_c(0+) = +inf
    if f.c == ZERO:
        return 1.0
    raise DomainError("U_c(0+) is infinite for a positive reference point")


def worst_case_generator(solution: StoppingSolution, x: float, y: float) -> float:
    """Worst-case density generator at the state (x, y).

    kappa * sgn(switch_z - y/x) with sgn(0) := +1; the Q-member solutions
    (upper boundary) carry the constant generator +kappa.
    """
    if not (x > 0.0):
        raise DomainError(f"generator requires x > 0, got {x}")
    kappa = solution.model.kappa
    if kappa == 0.0:
        return 0.0
    if solution.switch_z is None:
        return kappa
    return kappa if solution.switch_z - y / x >= 0.0 else -kappa


def stopping_set_test(
    model: ModelParams,
    payoff: Payoff,
    c: float,
    z_grid: Sequence[float],
    rel_tol: float = 1e-8,
) -> List[float]:
    """Grid argmax points of Pi_c(z) = g(z) / U_c(z).

    Every returned ray {y = z x} belongs to the stopping set; ties within
    ``rel_tol`` of the maximum are all returned (the two-sided floor
    solution has two global maximizers by construction).
    """
    zs = [float(z) for z in z_grid]
    if not zs:
        raise EmptyGrid("z_grid is empty")
    if any(z <= 0.0 for z in zs):
        raise DomainError("z_grid entries must be positive")
    f = build_excessive(model, c)
    ratios = []
    for z in zs:
        g = payoff.g(z)
        lu = f.u_log(z)
        ratios.append(g * math.exp(-lu[0]) * lu[1])
    top = max(ratios)
    cutoff = top - rel_tol * abs(top)
    return [z for z, r in zip(zs, ratios) if r >= cutoff]


# ---------------------------------------------------------------------------
# hitting probabilities under the constant generator +kappa
# ---------------------------------------------------------------------------

def hitting_probability(
    model: ModelParams, z_start: float, z_star: float, b: Optional[float] = None
) -> float:
    """P(Z hits z_star before b | Z_0 = z_start) under theta == +kappa.

    The ratio process dZ = (1 - (mu - sigma^2 - kappa sigma) Z) dt
    - sigma Z dW has scale density S'(t) / t^2 where S' is the plus-kappa
    auxiliary scale density (the extra t^-2 comes from the numeraire
    change; quoting S' alone overstates recurrence).  With b = None this
    is the probability of ever hitting z_star, which is 1 exactly when
    2 mu >= 2 kappa sigma + sigma^2.
    """
    if not (0.0 < z_star < z_start):
        raise DomainError("require 0 < z_star < z_start")
    pair = fundamental_pair(model, DriftSign.PLUS_KAPPA)

    def s_density(t: float) -> float:
        return math.exp(log_scale_density(pair, t) - 2.0 * math.log(t))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if b is not None:
            if b <= z_start:
                raise DomainError("require b > z_start")
            num, _ = quad(s_density, z_start, b, epsabs=0.0, epsrel=1e-10, limit=200)
            den, _ = quad(s_density, z_star, b, epsabs=0.0, epsrel=1e-10, limit=200)
            return num / den
        # tail exponent of s_density is 2(mu - kappa sigma)/sigma^2 - 2
        tail_exp = 2.0 * (model.mu - model.kappa * model.sigma) / model.sigma**2 - 2.0
        if tail_exp >= -1.0:
            return 1.0
        tail_from = max(10.0 * z_start, 10.0 / model.r)
        num, _ = quad(s_density, z_start, tail_from, epsabs=0.0, epsrel=1e-10, limit=200)
        den, _ = quad(s_density, z_star, tail_from, epsabs=0.0, epsrel=1e-10, limit=200)
        # analytic tail: s_density ~ t^tail_exp e^(2/(sigma^2 t)); expand the
        # exponential, integrate term by term until it converges
        tail = _power_exp_tail(tail_exp, 2.0 / model.sigma**2, tail_from)
        return (num + tail) / (den + tail)


def _power_exp_tail(p: float, c: float, t0: float) -> float:
    """Int_t0^inf t^p e^(c/t) dt for p < -1, by expanding e^(c/t)."""
    total = 0.0
    term_pow = p
    coef = 1.0
    for n in range(200):
        total_term = coef * t0 ** (term_pow + 1.0) / -(term_pow + 1.0)
        total += total_term
        if abs(total_term) < 1e-14 * abs(total):
            break
        coef *= c / (n + 1.0)
        term_pow = p - (n + 1.0)
    return total
