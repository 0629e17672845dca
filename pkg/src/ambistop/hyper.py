"""Double-precision Kummer M, Tricomi U, and log-Gamma kernels.

The argument w = 2/(sigma^2 z) produced by the ratio-process change of
variables spans (0, inf), so no single evaluation regime suffices.  Each
public entry point routes between:

* Taylor series with compensated summation (M, small/moderate x),
* asymptotic expansions with the first omitted term as the error bound
  (both functions, large x),
* the Kummer connection formula (U, small x, non-integer b),
* the Laplace integral representation via adaptive quadrature (U, a > 0,
  the mid-range gap), and
* a one-step downward recurrence in a (U, -1 < a <= 0; here a = psi of the
  minus-kappa regime, which is > -1 whenever r > 0).

Every evaluation carries a running relative-error estimate; results whose
estimate exceeds ``ACCEPT_TOL`` are never returned silently - the caller
gets :class:`NoConvergence` instead.

Internally values move around as signed logs ``(log|v|, sign)`` so that the
e^w growth of M at small z never overflows before a caller has the chance
to cancel it against a scale density.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Tuple

from scipy.integrate import quad

from .errors import DomainError, EvaluationOverflow, NoConvergence, PoleInB

ACCEPT_TOL = 1e-10
_EPS = 2.220446049250313e-16
_NEG_INF = float("-inf")

# Lanczos, g = 7, 9 terms (Godfrey coefficients): ~1e-14 relative on Gamma.
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.9189385332046727


@dataclass(frozen=True)
class HypergeometricEval:
    """Value, x-derivative, and the error estimate that admitted them."""

    value: float
    derivative_x: float
    est_rel_error: float


SignedLog = Tuple[float, float]  # (log|v|, sign in {-1., 0., +1.})

_ZERO: SignedLog = (_NEG_INF, 0.0)


# ---------------------------------------------------------------------------
# log-Gamma
# ---------------------------------------------------------------------------

def log_gamma(x: float) -> float:
    """Natural log of Gamma(x) for x > 0 (Lanczos approximation)."""
    x = float(x)
    if not (x > 0.0):
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    return _lgamma_pos(x)


def _lgamma_pos(x: float) -> float:
    if x < 0.5:
        # reflection keeps the series argument away from 0
        return math.log(math.pi / abs(math.sin(math.pi * x))) - _lgamma_pos(1.0 - x)
    xm = x - 1.0
    acc = _LANCZOS[0]
    for i in range(1, len(_LANCZOS)):
        acc += _LANCZOS[i] / (xm + i)
    t = xm + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (xm + 0.5) * math.log(t) - t + math.log(acc)


def gamma_signed(x: float) -> SignedLog:
    """(log|Gamma(x)|, sign) for real non-integer x (any sign).

    At nonpositive integers Gamma has poles; 1/Gamma is zero there, which
    callers represent by checking the returned log against +inf themselves.
    """
    x = float(x)
    if x > 0.0:
        return (_lgamma_pos(x), 1.0)
    if x == math.floor(x):
        return (math.inf, 1.0)  # pole
    # reflection: Gamma(x) = pi / (sin(pi x) Gamma(1 - x))
    s = math.sin(math.pi * x)
    log_abs = math.log(math.pi / abs(s)) - _lgamma_pos(1.0 - x)
    return (log_abs, 1.0 if s > 0.0 else -1.0)


def _gamma_rel_err(x: float) -> float:
    """Relative-accuracy bound for gamma_signed: an eps-level perturbation of
    x is amplified by |x digamma(x)|, which blows up like 1/dist near the
    poles on the negative axis."""
    x = float(x)
    if x > 0.5:
        return 8.0 * _EPS
    dist = abs(x - round(x))
    if dist == 0.0:
        return math.inf
    return _EPS * (abs(x) + 1.0) / dist + 4.0 * _EPS


# ---------------------------------------------------------------------------
# signed-log helpers
# ---------------------------------------------------------------------------

def slog_from(v: float) -> SignedLog:
    if v == 0.0:
        return _ZERO
    return (math.log(abs(v)), 1.0 if v > 0.0 else -1.0)


def slog_value(s: SignedLog) -> float:
    """Exponentiate a signed log; raises on double overflow."""
    if s[1] == 0.0:
        return 0.0
    if s[0] > 709.0:
        raise EvaluationOverflow(f"log magnitude {s[0]:.3f} exceeds double range")
    return s[1] * math.exp(s[0])


def slog_mul(a: SignedLog, b: SignedLog) -> SignedLog:
    if a[1] == 0.0 or b[1] == 0.0:
        return _ZERO
    return (a[0] + b[0], a[1] * b[1])


def slog_add(a: SignedLog, b: SignedLog) -> Tuple[SignedLog, float]:
    """Signed-log sum; second return value is the cancellation factor
    max(|a|,|b|)/|a+b| (1.0 when no cancellation)."""
    if a[1] == 0.0:
        return b, 1.0
    if b[1] == 0.0:
        return a, 1.0
    hi, lo = (a, b) if a[0] >= b[0] else (b, a)
    d = lo[0] - hi[0]  # <= 0
    if a[1] == b[1]:
        return (hi[0] + math.log1p(math.exp(d)), hi[1]), 1.0
    diff = -math.expm1(d)  # 1 - exp(d) in (0, 1]
    if diff == 0.0:
        return _ZERO, math.inf
    res = (hi[0] + math.log(diff), hi[1])
    return res, math.exp(hi[0] - res[0])


# ---------------------------------------------------------------------------
# Kummer M
# ---------------------------------------------------------------------------

_M_SERIES_MAX_X = 300.0
_M_MAX_TERMS = 20000


def _m_series(a: float, b: float, x: float) -> Tuple[SignedLog, float]:
    """Direct Taylor sum with Kahan compensation; x <= ~300."""
    total = 1.0
    comp = 0.0
    total_abs = 1.0
    term = 1.0
    n = 0
    min_bn = math.inf if b < 0.0 else 1.0  # (b+n) zero crossings amplify eps
    while n < _M_MAX_TERMS:
        if b < 0.0 and b + n != 0.0:
            min_bn = min(min_bn, abs(b + n) / (abs(b) + n + 1.0))
        term *= (a + n) / (b + n) * x / (n + 1.0)
        n += 1
        if term == 0.0:  # terminating series (a a nonpositive integer)
            break
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        total_abs += abs(term)
        if abs(term) <= 1e-3 * _EPS * abs(total) and n > x:
            break
    else:
        raise NoConvergence(f"M series did not converge: a={a}, b={b}, x={x}")
    if total == 0.0:
        return _ZERO, math.inf
    err = _EPS * total_abs / abs(total) + abs(term / total) + _EPS / min_bn
    return slog_from(total), err


def _asym_terms(ratio, cap: int = 300):
    """Sum an asymptotic series, truncating at its smallest term.

    ``ratio(n)`` maps term index n to t_{n+1}/t_n.  Terms may grow for a
    while before the characteristic plunge; the sum is cut at the global
    minimum term, whose magnitude is the error bound.
    """
    terms = [1.0]
    term = 1.0
    for n in range(cap):
        term *= ratio(n)
        if term == 0.0:
            terms.append(term)
            break
        if abs(term) > 10.0 * min(abs(t) for t in terms):
            break
        terms.append(term)
        if abs(term) < 1e-18:
            break
    best = min(range(len(terms)), key=lambda i: abs(terms[i]))
    s = math.fsum(terms[: best + 1])
    s_abs = math.fsum(abs(t) for t in terms[: best + 1])
    return s, s_abs, abs(terms[best])


def _m_asym_log(a: float, b: float, x: float):
    """M ~ Gamma(b)/Gamma(a) e^x x^(a-b) * S for large x > 0; None if S fails."""
    s, s_abs, min_term = _asym_terms(
        lambda n: (b - a + n) * (1.0 - a + n) / ((n + 1.0) * x)
    )
    if s == 0.0 or not (min_term / abs(s) <= 1e-13):
        return None
    ga = gamma_signed(a)
    if math.isinf(ga[0]):
        return None  # Gamma(a) pole: leading asymptotic piece vanishes
    lgb = _lgamma_pos(b) if b > 0 else gamma_signed(b)[0]
    sb = 1.0 if b > 0 else gamma_signed(b)[1]
    log_abs = lgb - ga[0] + x + (a - b) * math.log(x) + math.log(abs(s))
    sign = sb * ga[1] * (1.0 if s > 0.0 else -1.0)
    err = min_term / abs(s) + _EPS * s_abs / abs(s) + math.exp(-x) * 3.0
    return (log_abs, sign), err


def _m_series_logspace(a: float, b: float, x: float) -> Tuple[SignedLog, float]:
    """Streaming signed log-sum-exp of the Taylor series; any x, slow."""
    lpos = 0.0  # n = 0 term
    lneg = _NEG_INF
    lterm = 0.0
    sign = 1.0
    lmax = 0.0
    n = 0
    while n < 2_000_000:
        ratio = (a + n) / (b + n) * x / (n + 1.0)
        n += 1
        if ratio == 0.0:
            break
        lterm += math.log(abs(ratio))
        if ratio < 0.0:
            sign = -sign
        lmax = max(lmax, lterm)
        if sign > 0.0:
            lpos = _logaddexp(lpos, lterm)
        else:
            lneg = _logaddexp(lneg, lterm)
        if lterm < max(lpos, lneg) - 45.0 and n > x:
            break
    else:
        raise NoConvergence(f"log-space M series did not converge: x={x}")
    res, cancel = slog_add((lpos, 1.0), (lneg, -1.0))
    if res[1] == 0.0:
        return _ZERO, math.inf
    err = _EPS * math.sqrt(n) * math.exp(lmax - res[0])
    return res, err


def _logaddexp(a: float, b: float) -> float:
    if a == _NEG_INF:
        return b
    if b == _NEG_INF:
        return a
    hi, lo = (a, b) if a >= b else (b, a)
    return hi + math.log1p(math.exp(lo - hi))


def kummer_m_log(a: float, b: float, x: float) -> Tuple[SignedLog, float]:
    """Signed log of M(a, b, x) plus its relative-error estimate."""
    if x < 0.0:
        raise DomainError(f"kummer_m requires x >= 0, got {x}")
    if abs(b - round(b)) < 1e-8 and round(b) <= 0:
        raise PoleInB(f"M(a, b, x) undefined at b = {b}")
    if x == 0.0 or a == 0.0:
        return (0.0, 1.0), 0.0
    if x <= _M_SERIES_MAX_X:
        res, err = _m_series(a, b, x)
        if err <= ACCEPT_TOL:
            return res, err
        raise NoConvergence(f"M series cancellation too severe: est={err:.2e}")
    asym = _m_asym_log(a, b, x)
    if asym is not None and asym[1] <= ACCEPT_TOL:
        return asym
    res, err = _m_series_logspace(a, b, x)
    if err <= ACCEPT_TOL:
        return res, err
    raise NoConvergence(f"no M regime met tolerance at a={a}, b={b}, x={x}")


# ---------------------------------------------------------------------------
# Tricomi U
# ---------------------------------------------------------------------------

def _u_asym(a: float, b: float, x: float):
    """U ~ x^-a * sum_n (a)_n (a-b+1)_n / (n! (-x)^n); first omitted term bounds."""
    s, s_abs, min_term = _asym_terms(
        lambda n: -(a + n) * (a - b + 1.0 + n) / ((n + 1.0) * x)
    )
    if s == 0.0:
        return None
    err = min_term / abs(s) + _EPS * s_abs / abs(s)
    if err > ACCEPT_TOL:
        return None
    return (-a * math.log(x) + math.log(abs(s)), 1.0 if s > 0.0 else -1.0), err


def _u_connection(a: float, b: float, x: float):
    """U via Gamma-weighted M's; accurate while e^x cancellation stays mild."""
    if abs(b - round(b)) < 1e-6:
        return None  # Gamma poles: this route is unusable near integer b
    try:
        m1, e1 = kummer_m_log(a, b, x)
        m2, e2 = kummer_m_log(a - b + 1.0, 2.0 - b, x)
    except (NoConvergence, PoleInB):
        return None
    g1n = gamma_signed(1.0 - b)
    g1d = gamma_signed(a - b + 1.0)
    g2n = gamma_signed(b - 1.0)
    g2d = gamma_signed(a)
    t1 = _ZERO if math.isinf(g1d[0]) else slog_mul((g1n[0] - g1d[0], g1n[1] * g1d[1]), m1)
    if math.isinf(g2d[0]):
        t2: SignedLog = _ZERO
    else:
        t2 = slog_mul(
            ((g2n[0] - g2d[0]) + (1.0 - b) * math.log(x), g2n[1] * g2d[1]), m2
        )
    res, cancel = slog_add(t1, t2)
    if res[1] == 0.0:
        return None
    # the Gamma weights are ill-conditioned near their poles (b close to an
    # integer); their relative errors ride the full cancellation factor
    g_err = sum(
        e for e in (
            _gamma_rel_err(1.0 - b), _gamma_rel_err(a - b + 1.0),
            _gamma_rel_err(b - 1.0), _gamma_rel_err(a),
        ) if math.isfinite(e)
    )
    err = (e1 + e2 + g_err + 4.0 * _EPS) * cancel
    if err > ACCEPT_TOL:
        return None
    return res, err


def _u_laplace(a: float, b: float, x: float):
    """U(a,b,x) = Integral_0^inf e^(-xt) t^(a-1) (1+t)^(b-a-1) dt / Gamma(a).

    Valid for a > 0.  Split at t = 1.  On the lower piece the substitution
    t = u^(3/a) turns t^(a-1) dt into 3 u^2 du, so the transformed
    integrand is C^2 at the origin for every a > 0 (a plain t^(a-1) cusp
    defeats the quadrature's error estimate for fractional a).  The upper
    piece maps t = 1/v; both pieces get interior-peak hints.
    """
    p = 3.0 / a
    c = b - a - 1.0

    def lower(u: float) -> float:
        if u == 0.0:
            return 0.0
        t = u**p
        ex = -x * t + c * math.log1p(t)
        if ex >= 700.0:
            return math.inf
        return p * u * u * math.exp(ex)

    def upper(v: float) -> float:
        if v == 0.0:
            return 0.0
        ex = -x / v - b * math.log(v) + c * math.log1p(v)
        return math.exp(ex) if ex < 700.0 else math.inf

    # interior peak of e^(-xt) t^(a-1) sits at t = (a-1)/x; map it through
    # each piece's change of variables as an adaptivity hint
    t_peak = max((a - 1.0) / x, 1e-8)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            u_peak = min(max(t_peak ** (a / 3.0), 1e-12), 0.999)
            i1, a1 = quad(lower, 0.0, 1.0, epsabs=0.0, epsrel=1e-12,
                          limit=400, points=[u_peak])
            v_peak = min(max(1.0 / max(t_peak, x / max(b, 2.0), 1.0), 1e-12), 0.999)
            i2, a2 = quad(upper, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=400,
                          points=[v_peak])
    except Exception:
        return None
    total = i1 + i2
    if not (math.isfinite(total) and total > 0.0):
        return None
    err = 4.0 * (a1 + a2) / total + 8.0 * _EPS
    if err > ACCEPT_TOL:
        return None
    return (math.log(total) - _lgamma_pos(a), 1.0), err


def _u_lift(a: float, b: float, x: float, depth: int):
    """Downward contiguous recurrence from (a+1, a+2); the only route for
    a <= 0 in the mid range.  U(a) = (2(a+1)-b+x) U(a+1) - (a+1)(a+2-b) U(a+2)."""
    if depth > 8:
        return None
    try:
        u1, e1 = _tricomi_u_log_impl(a + 1.0, b, x, depth + 1)
        u2, e2 = _tricomi_u_log_impl(a + 2.0, b, x, depth + 1)
    except NoConvergence:
        return None
    t1 = slog_mul(slog_from(2.0 * (a + 1.0) - b + x), u1)
    t2 = slog_mul(slog_from(-(a + 1.0) * (a + 2.0 - b)), u2)
    res, cancel = slog_add(t1, t2)
    if res[1] == 0.0:
        return None
    err = (e1 + e2 + 4.0 * _EPS) * cancel
    if err > ACCEPT_TOL:
        return None
    return res, err


def _tricomi_u_log_impl(a: float, b: float, x: float, depth: int) -> Tuple[SignedLog, float]:
    if x <= 0.0:
        raise DomainError(f"tricomi_u requires x > 0, got {x}")
    if a == 0.0:
        return (0.0, 1.0), 0.0
    if x >= 25.0:
        asym = _u_asym(a, b, x)
        if asym is not None:
            return asym
    if x <= 30.0:
        conn = _u_connection(a, b, x)
        if conn is not None:
            return conn
    if a > 0.0:
        lap = _u_laplace(a, b, x)
        if lap is not None:
            return lap
    else:
        lift = _u_lift(a, b, x, depth)
        if lift is not None:
            return lift
    conn = _u_connection(a, b, x)  # last resort outside its preferred band
    if conn is not None:
        return conn
    raise NoConvergence(f"no U regime met tolerance at a={a}, b={b}, x={x}")


def tricomi_u_log(a: float, b: float, x: float) -> Tuple[SignedLog, float]:
    """Signed log of U(a, b, x) plus its relative-error estimate."""
    return _tricomi_u_log_impl(float(a), float(b), float(x), 0)


# ---------------------------------------------------------------------------
# public value-form API
# ---------------------------------------------------------------------------

def _quantization(s: SignedLog) -> float:
    # resolution of the value implied by one ulp of its stored log
    return _EPS * abs(s[0]) if s[1] != 0.0 else 0.0


def kummer_m(a: float, b: float, x: float) -> HypergeometricEval:
    """M(a, b, x) with derivative (a/b) M(a+1, b+1, x)."""
    v_log, v_err = kummer_m_log(a, b, x)
    v_err += _quantization(v_log)
    if a == 0.0 or x == 0.0:
        d_val = 0.0 if a == 0.0 else a / b
        return HypergeometricEval(slog_value(v_log), d_val, v_err)
    d_log, d_err = kummer_m_log(a + 1.0, b + 1.0, x)
    deriv = (a / b) * slog_value(d_log)
    est = max(v_err, d_err + _quantization(d_log))
    if est > ACCEPT_TOL:
        raise NoConvergence(f"M estimate {est:.2e} above tolerance at x={x}")
    return HypergeometricEval(slog_value(v_log), deriv, est)


def tricomi_u(a: float, b: float, x: float) -> HypergeometricEval:
    """U(a, b, x) with derivative -a U(a+1, b+1, x)."""
    v_log, v_err = tricomi_u_log(a, b, x)
    v_err += _quantization(v_log)
    if a == 0.0:
        return HypergeometricEval(1.0, 0.0, 0.0)
    d_log, d_err = tricomi_u_log(a + 1.0, b + 1.0, x)
    deriv = -a * slog_value(d_log)
    est = max(v_err, d_err + _quantization(d_log))
    if est > ACCEPT_TOL:
        raise NoConvergence(f"U estimate {est:.2e} above tolerance at x={x}")
    return HypergeometricEval(slog_value(v_log), deriv, est)
