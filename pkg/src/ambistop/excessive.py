"""The pasted excessive family U_c: flat at the reference point c, switching
ODE regimes at the point where U_c'(z) z = U_c(z).

Construction (c finite, > 0):

* on (0, hat_z]:   U_c = [P'(c)/S'(c) Q(z) - Q'(c)/S'(c) P(z)] / B
  (plus-kappa fundamentals), the unique solution with U_c(c) = 1,
  U_c'(c) = 0;
* hat_z > c is the unique root of D_c(z) = U_c'(z) z - U_c(z), which
  starts at D_c(c) = -1 and increases strictly;
* on [hat_z, inf): U_c = c1 P_-(z) + c2 Q_-(z) (minus-kappa fundamentals)
  with c1, c2 chosen to paste C^1 (the shared ODE structure then gives C^2
  automatically).

The boundary members: c = 0 uses P(z) below hat_z = z_bar (the limit of
the construction, exact because P(0+) = 1), and c = inf is Q itself.

Coefficients are held as signed logs: P'(c)/S'(c) underflows to zero in
value space already at c ~ 1e-3 for sigma = 0.5 while its log stays
perfectly representable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

from ._rootfind import bisect, expand_bracket
from .errors import DomainError
from .hyper import SignedLog, slog_add, slog_from, slog_mul, slog_value
from .fundamentals import (
    FundamentalPair,
    fundamental_pair,
    log_scale_density,
    p_deriv_log,
    p_log,
    q_deriv_log,
    q_log,
)
from .model import DriftSign, ModelParams, make_model

_ZERO: SignedLog = (float("-inf"), 0.0)

#: symbolic reference points
ZERO = 0.0
INFINITY = math.inf


def _perturb_if_degenerate(model: ModelParams) -> ModelParams:
    """Nudge kappa when the minus-kappa root psi sits on the Gamma pole.

    psi_-кappa = 0 exactly when r - mu - kappa*sigma = 0, where P_- and Q_-
    both degenerate to the constant 1 and the pasting basis collapses.
    Measure-zero in parameter space; a 1e-10 nudge is far below every
    tolerance in this package.
    """
    rho_minus = model.rho_minus
    threshold = 1e-8 * max(1.0, abs(model.r) + abs(model.mu))
    if abs(rho_minus) < threshold * model.sigma:
        warnings.warn(
            "r - mu - kappa*sigma is numerically zero; perturbing kappa by 1e-10",
            RuntimeWarning,
        )
        return make_model(model.mu, model.sigma, model.r, model.kappa + 1e-10)
    return model


# ---------------------------------------------------------------------------
# lower-branch coefficients and the switch point
# ---------------------------------------------------------------------------

def _lower_coeffs(pair: FundamentalPair, c: float) -> Tuple[SignedLog, SignedLog]:
    """(a_Q, a_P) with U_c(z) = a_Q Q(z) + a_P P(z) on (0, hat_z]."""
    if c == ZERO:
        return _ZERO, (0.0, 1.0)
    ls = log_scale_density(pair, c)
    inv_b = (-pair.log_b, pair.b_sign)
    pd = p_deriv_log(pair, c)
    qd = q_deriv_log(pair, c)
    a_q = slog_mul((pd[0] - ls, pd[1]), inv_b)
    a_p = slog_mul((qd[0] - ls, -qd[1]), inv_b)
    return a_q, a_p


def _combo(a_q: SignedLog, a_p: SignedLog, q: SignedLog, p: SignedLog) -> SignedLog:
    s, _ = slog_add(slog_mul(a_q, q), slog_mul(a_p, p))
    return s


def _d_lower(pair: FundamentalPair, a_q: SignedLog, a_p: SignedLog, z: float) -> float:
    """D_c(z) = U_c'(z) z - U_c(z) on the lower branch, in value space."""
    lz = slog_from(z)
    q0, q1 = q_log(pair, z), q_deriv_log(pair, z)
    p0, p1 = p_log(pair, z), p_deriv_log(pair, z)
    dq, _ = slog_add(slog_mul(q1, lz), (q0[0], -q0[1]))  # Q'z - Q
    dp, _ = slog_add(slog_mul(p1, lz), (p0[0], -p0[1]))  # P'z - P
    s, _ = slog_add(slog_mul(a_q, dq), slog_mul(a_p, dp))
    return slog_value(s)


def z_bar(model: ModelParams) -> float:
    """Unique root > 1/r of P(z) - z P'(z) = 0 (also argmax of z / P(z))."""
    pair = fundamental_pair(model, DriftSign.PLUS_KAPPA)

    def j(z: float) -> float:
        s, _ = slog_add(p_log(pair, z), slog_mul(slog_from(-z), p_deriv_log(pair, z)))
        return slog_value(s)

    lo = 1.0 / model.r
    a, b, fa, fb = expand_bracket(j, lo, hi_cap=1e9 / model.r)
    return bisect(j, a, b, fa, fb)


def solve_hat_z(model: ModelParams, c: float) -> float:
    """Unique root hat_z > c of U_c'(z) z = U_c(z) for a reference c > 0.

    D_c(c) = -1 by construction and D_c is strictly increasing, so a
    geometric expansion from c always brackets.
    """
    if not (c > 0.0) or not math.isfinite(c):
        raise DomainError(f"solve_hat_z requires finite c > 0, got {c}")
    pair = fundamental_pair(model, DriftSign.PLUS_KAPPA)
    a_q, a_p = _lower_coeffs(pair, c)

    def d(z: float) -> float:
        return _d_lower(pair, a_q, a_p, z)

    a, b, fa, fb = expand_bracket(d, c, f_lo=-1.0, hi_cap=1e9 * max(c, 1.0 / model.r))
    return bisect(d, a, b, fa, fb)


# ---------------------------------------------------------------------------
# the pasted function
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExcessiveFunction:
    """U_c with its switch point and pasted coefficients (signed logs)."""

    model: ModelParams
    c: float                      # reference point; 0.0 and math.inf allowed
    hat_z: Optional[float]        # None for c = inf
    pair_plus: FundamentalPair
    pair_minus: FundamentalPair
    a_q: SignedLog                # lower-branch coefficient of Q
    a_p: SignedLog                # lower-branch coefficient of P
    c1: SignedLog                 # upper-branch coefficient of P_-
    c2: SignedLog                 # upper-branch coefficient of Q_-

    @property
    def is_q_member(self) -> bool:
        return math.isinf(self.c)

    def u_log(self, z: float, order: int = 0, branch: str = "auto") -> SignedLog:
        """Signed log of the order-th derivative of U_c at z.

        ``branch`` forces one side of the pasting ('lower'/'upper'); the
        default picks by z against hat_z.  Forcing exists so tests can
        measure the C^2 discontinuity exactly at the switch point.
        """
        if not (z > 0.0) or not math.isfinite(z):
            raise DomainError(f"require z > 0, got {z}")
        if self.is_q_member:
            pair, coef_q, coef_p = self.pair_plus, (0.0, 1.0), _ZERO
        else:
            use_lower = z <= self.hat_z if branch == "auto" else branch == "lower"
            pair, coef_q, coef_p = (
                (self.pair_plus, self.a_q, self.a_p)
                if use_lower
                else (self.pair_minus, self.c2, self.c1)
            )
        if order == 0:
            return _combo(coef_q, coef_p, q_log(pair, z), p_log(pair, z))
        if order == 1:
            return _combo(coef_q, coef_p, q_deriv_log(pair, z), p_deriv_log(pair, z))
        if order == 2:
            u0 = self.u_log(z, 0, branch)
            u1 = self.u_log(z, 1, branch)
            t1 = slog_mul(slog_from(pair.rho), u0)
            t2 = slog_mul(slog_from(-(1.0 - pair.delta * z)), u1)
            s, _ = slog_add(t1, t2)
            return (s[0] + math.log(2.0) - 2.0 * math.log(pair.model.sigma * z), s[1])
        raise ValueError(f"order must be 0, 1 or 2, got {order}")


def build_excessive(model: ModelParams, c: float) -> ExcessiveFunction:
    """Construct U_c for c in {0} | (0, inf) | {inf}."""
    c = float(c)
    if c < 0.0 or math.isnan(c):
        raise DomainError(f"reference point must be in [0, inf], got {c}")
    model = _perturb_if_degenerate(model)
    pair_plus = fundamental_pair(model, DriftSign.PLUS_KAPPA)
    pair_minus = fundamental_pair(model, DriftSign.MINUS_KAPPA)

    if math.isinf(c):
        return ExcessiveFunction(model, c, None, pair_plus, pair_minus,
                                 (0.0, 1.0), _ZERO, _ZERO, _ZERO)

    a_q, a_p = _lower_coeffs(pair_plus, c)
    hat = z_bar(model) if c == ZERO else solve_hat_z(model, c)

    # C^1 pasting: Cramer against the minus-kappa basis, with the scaled
    # Wronskian B_- as the determinant and U'(hat-) z = U(hat-) used to
    # write both right-hand sides through the one-sided derivative.
    du = _combo(a_q, a_p, q_deriv_log(pair_plus, hat), p_deriv_log(pair_plus, hat))
    ls_m = log_scale_density(pair_minus, hat)
    inv_bm = (-pair_minus.log_b, pair_minus.b_sign)
    qm0, qm1 = q_log(pair_minus, hat), q_deriv_log(pair_minus, hat)
    pm0, pm1 = p_log(pair_minus, hat), p_deriv_log(pair_minus, hat)
    lhat = slog_from(hat)
    num1, _ = slog_add(qm0, (qm1[0] + lhat[0], -qm1[1]))       # Q- - Q-' z
    num2, _ = slog_add(slog_mul(pm1, lhat), (pm0[0], -pm0[1]))  # P-' z - P-
    c1 = slog_mul(slog_mul((num1[0] - ls_m, num1[1]), inv_bm), du)
    c2 = slog_mul(slog_mul((num2[0] - ls_m, num2[1]), inv_bm), du)

    return ExcessiveFunction(model, c, hat, pair_plus, pair_minus, a_q, a_p, c1, c2)


def eval_u(f: ExcessiveFunction, z: float, order: int = 0) -> float:
    """Value-form evaluation; raises EvaluationOverflow far below c."""
    return slog_value(f.u_log(z, order))


def delta_c(f: ExcessiveFunction, z: float) -> float:
    """Delta_c(z) = U_c(z) - U_c'(z) z, the generator's switching function."""
    u0 = f.u_log(z, 0)
    u1 = f.u_log(z, 1)
    s, _ = slog_add(u0, (u1[0] + math.log(z), -u1[1]))
    return slog_value(s)
