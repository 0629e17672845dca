"""Fundamental solutions P, Q of the regime ODEs, scale/speed densities,
and the Wronskian constant.

With w = 2/(sigma^2 z) and (psi, phi) the regime roots,

    P(z) = w^psi U(psi, 1 + psi - phi, w)      (increasing when rho > 0)
    Q(z) = w^psi M(psi, 1 + psi - phi, w)      (decreasing when rho > 0)

First derivatives collapse through contiguous relations to single
hypergeometric evaluations (no cancellation):

    P'(z) = (2 rho / (sigma^2 z)) w^psi U(psi + 1, 1 + psi - phi, w)
    Q'(z) = -(psi / z) w^psi M(psi + 1, 1 + psi - phi, w)

Second derivatives come from the ODE itself rather than from
differentiating the hypergeometrics twice.

Everything is computed as signed logs internally; Q blows up like
e^(2/(sigma^2 z)) as z -> 0, so the value-form evaluators raise
:class:`EvaluationOverflow` rather than saturate, and log-form evaluators
are provided for callers working at extreme arguments.

For the minus-kappa regime with r - mu - kappa*sigma < 0 the classical
increasing/decreasing picture breaks: psi lies in (-1, 0), the formula-P
turns negative at large z and the formula-Q increases.  The pair is still
a valid ODE basis and the Wronskian identity below holds with a negative
constant; monotonicity claims are therefore scoped to regimes with
positive effective rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

from .errors import DomainError
from .hyper import (
    SignedLog,
    gamma_signed,
    kummer_m_log,
    slog_add,
    slog_from,
    slog_mul,
    slog_value,
    tricomi_u_log,
)
from .model import CharacteristicRoots, DriftSign, ModelParams, characteristic_roots


@dataclass(frozen=True)
class FundamentalPair:
    """One regime's fundamental system plus cached constants."""

    model: ModelParams
    drift_sign: DriftSign
    roots: CharacteristicRoots
    log_b: float      # log |B|, Wronskian w.r.t. the scale density
    b_sign: float     # sign of B (+1 unless psi < 0)

    @property
    def wronskian_b(self) -> float:
        return self.b_sign * math.exp(self.log_b)

    @property
    def delta(self) -> float:
        return self.model.delta(self.drift_sign)

    @property
    def rho(self) -> float:
        return self.model.rho(self.drift_sign)


def fundamental_pair(model: ModelParams, drift_sign: DriftSign = DriftSign.PLUS_KAPPA) -> FundamentalPair:
    """Build the ODE fundamental system for one drift sign.

    The Wronskian constant B = Gamma(psi - phi + 1) / Gamma(psi)
    * (2 / sigma^2)^(psi + phi) satisfies
    (Q(z) P'(z) - P(z) Q'(z)) / S'(z) = B for all z > 0, in this
    orientation for either sign of psi.
    """
    roots = characteristic_roots(model, drift_sign)
    lg_num = gamma_signed(roots.psi - roots.phi + 1.0)
    lg_den = gamma_signed(roots.psi)
    log_b = (
        lg_num[0]
        - lg_den[0]
        + (roots.psi + roots.phi) * math.log(2.0 / model.sigma**2)
    )
    b_sign = lg_num[1] * lg_den[1]
    return FundamentalPair(model=model, drift_sign=drift_sign, roots=roots,
                           log_b=log_b, b_sign=b_sign)


def _check_z(z: float) -> float:
    z = float(z)
    if not (z > 0.0) or not math.isfinite(z):
        raise DomainError(f"require z > 0, got {z}")
    return z


def _logw(pair: FundamentalPair, z: float) -> float:
    return math.log(2.0 / pair.model.sigma**2) - math.log(z)


# ---------------------------------------------------------------------------
# signed-log evaluators
# ---------------------------------------------------------------------------

def p_log(pair: FundamentalPair, z: float) -> SignedLog:
    z = _check_z(z)
    lw = _logw(pair, z)
    a = pair.roots.psi
    u, _ = tricomi_u_log(a, pair.roots.b, math.exp(lw))
    return (a * lw + u[0], u[1])


def p_deriv_log(pair: FundamentalPair, z: float) -> SignedLog:
    z = _check_z(z)
    lw = _logw(pair, z)
    a = pair.roots.psi
    rho = pair.rho
    if rho == 0.0:
        return (float("-inf"), 0.0)
    u, _ = tricomi_u_log(a + 1.0, pair.roots.b, math.exp(lw))
    log_abs = math.log(2.0 * abs(rho) / pair.model.sigma**2) - math.log(z) + a * lw + u[0]
    return (log_abs, math.copysign(1.0, rho) * u[1])


def q_log(pair: FundamentalPair, z: float) -> SignedLog:
    z = _check_z(z)
    lw = _logw(pair, z)
    a = pair.roots.psi
    m, _ = kummer_m_log(a, pair.roots.b, math.exp(lw))
    return (a * lw + m[0], m[1])


def q_deriv_log(pair: FundamentalPair, z: float) -> SignedLog:
    z = _check_z(z)
    lw = _logw(pair, z)
    a = pair.roots.psi
    if a == 0.0:
        return (float("-inf"), 0.0)
    m, _ = kummer_m_log(a + 1.0, pair.roots.b, math.exp(lw))
    log_abs = math.log(abs(a)) - math.log(z) + a * lw + m[0]
    return (log_abs, -math.copysign(1.0, a) * m[1])


def _second_from_ode(pair: FundamentalPair, z: float, f: SignedLog, fp: SignedLog) -> SignedLog:
    """f'' = (rho f - (1 - delta z) f') * 2/(sigma^2 z^2), from the regime ODE."""
    t1 = slog_mul(slog_from(pair.rho), f)
    t2 = slog_mul(slog_from(-(1.0 - pair.delta * z)), fp)
    s, _ = slog_add(t1, t2)
    scale = math.log(2.0) - 2.0 * (math.log(pair.model.sigma) + math.log(z))
    return (s[0] + scale, s[1])


def p_log_order(pair: FundamentalPair, z: float, order: int) -> SignedLog:
    if order == 0:
        return p_log(pair, z)
    if order == 1:
        return p_deriv_log(pair, z)
    if order == 2:
        return _second_from_ode(pair, z, p_log(pair, z), p_deriv_log(pair, z))
    raise ValueError(f"order must be 0, 1 or 2, got {order}")


def q_log_order(pair: FundamentalPair, z: float, order: int) -> SignedLog:
    if order == 0:
        return q_log(pair, z)
    if order == 1:
        return q_deriv_log(pair, z)
    if order == 2:
        return _second_from_ode(pair, z, q_log(pair, z), q_deriv_log(pair, z))
    raise ValueError(f"order must be 0, 1 or 2, got {order}")


# ---------------------------------------------------------------------------
# value-form evaluators
# ---------------------------------------------------------------------------

def eval_p(pair: FundamentalPair, z: float, order: int = 0) -> float:
    """order-th derivative of the increasing solution P at z."""
    return slog_value(p_log_order(pair, z, order))


def eval_q(pair: FundamentalPair, z: float, order: int = 0) -> float:
    """order-th derivative of the decreasing solution Q at z.

    Raises :class:`EvaluationOverflow` when M(psi, b, w) w^psi exceeds the
    double range (z small); use :func:`q_log_order` there instead.
    """
    return slog_value(q_log_order(pair, z, order))


# ---------------------------------------------------------------------------
# scale and speed densities
# ---------------------------------------------------------------------------

def log_scale_density(pair: FundamentalPair, z: float) -> float:
    """log S'(z) with S'(z) = z^(2 delta / sigma^2) e^(2/(sigma^2 z))."""
    z = _check_z(z)
    s2 = pair.model.sigma**2
    return (2.0 * pair.delta / s2) * math.log(z) + 2.0 / (s2 * z)


def scale_density(pair: FundamentalPair, z: float) -> float:
    ls = log_scale_density(pair, z)
    return slog_value((ls, 1.0))


def log_speed_density(pair: FundamentalPair, z: float) -> float:
    """log m'(z) with m'(z) = 2 / (sigma^2 z^2 S'(z))."""
    z = _check_z(z)
    s2 = pair.model.sigma**2
    return math.log(2.0 / s2) - 2.0 * math.log(z) - log_scale_density(pair, z)


def speed_density(pair: FundamentalPair, z: float) -> float:
    return slog_value((log_speed_density(pair, z), 1.0))


# ---------------------------------------------------------------------------
# Wronskian
# ---------------------------------------------------------------------------

def wronskian_b(pair: FundamentalPair) -> float:
    """The constant B from the Gamma formula (signed; > 0 when psi > 0)."""
    return pair.wronskian_b


def scaled_wronskian(pair: FundamentalPair, z: float) -> Tuple[float, float]:
    """Measured (log|W|, sign) of W(z) = (Q P' - P Q') / S'(z).

    Constant in z and equal to the Gamma-formula B in both magnitude and
    sign under this package's (increasing, decreasing) orientation.
    """
    z = _check_z(z)
    t1 = slog_mul(q_log(pair, z), p_deriv_log(pair, z))
    t2 = slog_mul(p_log(pair, z), q_deriv_log(pair, z))
    s, _ = slog_add(t1, (t2[0], -t2[1]))
    return (s[0] - log_scale_density(pair, z), s[1])


def wronskian_residual(pair: FundamentalPair, z: float) -> float:
    """|W_measured(z) - B| / |B|, computed in log space."""
    lw, sw = scaled_wronskian(pair, z)
    if sw != pair.b_sign:
        return math.inf
    return abs(math.expm1(lw - pair.log_b))
