"""The acceptance suite: every release-gating check, runnable from the CLI
(`ambistop verify`) and from pytest (tests/test_acceptance.py).

Each criterion returns an :class:`AcceptanceResult`; tolerances are pinned
here, not in the callers.  The Monte Carlo criteria run at their stated
sizes (200k paths for the martingale suite) and take a few minutes; the
``quick`` flag scales them down for development runs and marks the result
accordingly.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .excessive import INFINITY, build_excessive, z_bar
from .fundamentals import (
    DriftSign,
    fundamental_pair,
    p_deriv_log,
    p_log,
    q_log_order,
    scaled_wronskian,
    wronskian_residual,
)
from .hyper import slog_add, slog_from, slog_mul, slog_value
from .model import ModelParams, Payoff, make_model
from .oracle_fd import GridSpec, compare, solve_obstacle
from .simulate import (
    CONSTANT_MINUS_KAPPA,
    CONSTANT_PLUS_KAPPA,
    WORST_CASE,
    SimConfig,
    martingale_check,
    nash_check,
)
from .solvers import (
    Regime,
    critical_kappa_floor,
    exchange_boundary,
    floor_solve,
    integral_boundary,
    integral_solve,
    upper_boundary_solve,
)

KAPPA_HAT_REF = 1.59795        # floor critical ambiguity at (0, 0.5, 0.05)
Z_BAR_05_REF = 27.9912         # floor single boundary at kappa = 0.5
TWO_SIDED_REF = (0.0854, 22.6858)  # floor band at kappa = 1.75


@dataclass
class AcceptanceResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d}. {self.name}: {self.detail} ({self.elapsed:.1f}s)"


def _run(number: int, name: str, fn: Callable[[], "tuple[bool, str]"]) -> AcceptanceResult:
    t0 = time.time()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failure with the reason attached
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    return AcceptanceResult(number, name, ok, detail, time.time() - t0)


def _random_models(rng: np.random.Generator, count: int) -> List[ModelParams]:
    out = []
    while len(out) < count:
        mu = rng.uniform(-0.1, 0.1)
        sigma = rng.uniform(0.05, 0.8)
        r = rng.uniform(0.01, 0.15)
        kappa = rng.uniform(0.0, 2.0)
        if r - mu + kappa * sigma > 1e-3:
            out.append(make_model(mu, sigma, r, kappa))
    return out


# ---------------------------------------------------------------------------
# criteria 1-6: boundaries
# ---------------------------------------------------------------------------

def criterion_1() -> "tuple[bool, str]":
    k = critical_kappa_floor(0.0, 0.5, 0.05)
    err = abs(k - KAPPA_HAT_REF)
    return err <= 1e-3, f"kappa_hat = {k:.6f}, |err| = {err:.2e} (tol 1e-3)"


def criterion_2() -> "tuple[bool, str]":
    sol = floor_solve(make_model(0.0, 0.5, 0.05, 0.5))
    ok = sol.regime is Regime.LOWER_BOUNDARY
    err = abs(sol.z_upper - Z_BAR_05_REF)
    return ok and err <= 1e-2, (
        f"regime {sol.regime.value}, z = {sol.z_upper:.5f}, |err| = {err:.2e} (tol 1e-2)"
    )


def criterion_3() -> "tuple[bool, str]":
    sol = floor_solve(make_model(0.0, 0.5, 0.05, 1.75))
    ok = sol.regime is Regime.TWO_SIDED
    e1 = abs(sol.z_lower - TWO_SIDED_REF[0])
    e2 = abs(sol.z_upper - TWO_SIDED_REF[1])
    return ok and e1 <= 1e-2 and e2 <= 1e-2, (
        f"(z1, z2) = ({sol.z_lower:.5f}, {sol.z_upper:.5f}), errs "
        f"({e1:.2e}, {e2:.2e}) (tol 1e-2 each)"
    )


def criterion_4() -> "tuple[bool, str]":
    rng = np.random.default_rng(20240 + 4)
    worst_res, worst_margin = 0.0, math.inf
    for m in _random_models(rng, 50):
        zb = z_bar(m)
        pair = fundamental_pair(m)
        p = slog_value(p_log(pair, zb))
        foc, _ = slog_add(p_log(pair, zb),
                          slog_mul(slog_from(-zb), p_deriv_log(pair, zb)))
        res = abs(slog_value(foc)) / p
        worst_res = max(worst_res, res)
        worst_margin = min(worst_margin, zb * m.r)
    ok = worst_margin > 1.0 and worst_res < 1e-8
    return ok, (
        f"50 models: min z_bar * r = {worst_margin:.4f} (> 1), "
        f"max FOC residual = {worst_res:.2e} (tol 1e-8)"
    )


def criterion_5() -> "tuple[bool, str]":
    kappas = np.linspace(0.0, 1.0, 21)
    sigmas = [0.05, 0.075, 0.10]
    curves = []
    for s in sigmas:
        zs = [integral_boundary(make_model(0.02, s, 0.05, k)) for k in kappas]
        if not all(a > b for a, b in zip(zs, zs[1:])):
            return False, f"integral boundary not decreasing in kappa at sigma={s}"
        curves.append(zs)
    for lo_c, hi_c in zip(curves, curves[1:]):
        if not all(h > l for l, h in zip(lo_c, hi_c)):
            return False, "integral boundary not increasing in sigma"
    zx = [exchange_boundary(make_model(0.02, 0.10, 0.05, k), 0.5) for k in kappas]
    if not all(a > b for a, b in zip(zx, zx[1:])):
        return False, "exchange boundary not decreasing in kappa"
    return True, (
        f"integral: decreasing in kappa / increasing in sigma on 3x21 grid; "
        f"exchange (K=0.5): decreasing in kappa ({zx[0]:.3f} -> {zx[-1]:.3f})"
    )


def criterion_6() -> "tuple[bool, str]":
    rng = np.random.default_rng(20240 + 6)
    worst = 0.0
    for m in _random_models(rng, 10):
        zb = z_bar(m)
        zs = exchange_boundary(m, 1e-10)
        worst = max(worst, abs(zs - zb) / zb)
    return worst < 1e-6, f"max |z*(K=1e-10) - z_bar| / z_bar = {worst:.2e} (tol 1e-6)"


# ---------------------------------------------------------------------------
# criterion 7: finite-difference oracle equivalence
# ---------------------------------------------------------------------------

def criterion_7(quick: bool = False) -> "tuple[bool, str]":
    n = 2000 if quick else 4000
    cases = [
        ("integral", make_model(0.0, 0.5, 0.05, 0.5), Payoff.integral(),
         integral_solve(make_model(0.0, 0.5, 0.05, 0.5))),
        ("exchange", make_model(0.02, 0.1, 0.05, 0.5), Payoff.exchange(0.5), None),
        ("floor", make_model(0.0, 0.5, 0.05, 1.75), Payoff.floor(), None),
    ]
    from .solvers import exchange_solve
    details = []
    for name, m, pay, sol in cases:
        if sol is None:
            sol = exchange_solve(m, 0.5) if name == "exchange" else floor_solve(m)
        rep1 = compare(sol, solve_obstacle(m, pay, GridSpec(n=n)))
        rep2 = compare(sol, solve_obstacle(m, pay, GridSpec(n=2 * n)))
        if rep1.max_rel_error >= 1e-3:
            return False, f"{name}: oracle error {rep1.max_rel_error:.2e} >= 1e-3 at N={n}"
        if rep2.max_rel_error >= rep1.max_rel_error:
            return False, f"{name}: error did not shrink under refinement"
        details.append(f"{name} {rep1.max_rel_error:.1e}->{rep2.max_rel_error:.1e}")
    return True, f"N={n} vs 2N errors: " + ", ".join(details) + " (tol 1e-3)"


# ---------------------------------------------------------------------------
# criterion 8: martingale / supermartingale suite
# ---------------------------------------------------------------------------

def criterion_8(quick: bool = False) -> "tuple[bool, str]":
    n = 20_000 if quick else 200_000
    dt = 1e-3
    m05 = make_model(0.0, 0.5, 0.05, 0.5)
    m175 = make_model(0.0, 0.5, 0.05, 1.75)
    m0k = make_model(0.0, 0.5, 0.05, 0.0)
    details = []

    def flat(model, c, gen, z0, ckpts, label, seed):
        cfg = SimConfig(n_paths=n, dt=dt, t_max=max(ckpts[-1], 100 * dt), seed=seed)
        rep = martingale_check(model, c, gen, cfg, 1.0, z0, ckpts)
        drift = rep.max_drift_sigmas()
        details.append(f"{label} {drift:.2f}sig")
        return drift <= 3.0

    # starting points sit well inside each member's resolvable region: U_c
    # explodes like e^(2/(sigma^2 z)) below its reference point, so starts
    # near c (or low starts for U_inf) put the compensating martingale mass
    # into dips far too rare to sample.  The flat checks run on the
    # kappa = 0.5 model: at the pinned dt = 1e-3 the weak Euler error of the
    # kappa = 1.75 drift coefficients exceeds the 3-sigma resolution of
    # 200k paths, so that model is exercised by the one-sided check below
    ok = True
    ok &= flat(m05, 0.0, WORST_CASE, 1.0, [0.25, 0.5, 1.0], "U0/worst", 81)
    ok &= flat(m05, 2.0, WORST_CASE, 10.0, [0.1, 0.25, 0.5], "Uc/worst", 82)
    ok &= flat(m05, INFINITY, CONSTANT_PLUS_KAPPA, 40.0, [0.1, 0.25, 0.5],
               "Uinf/+k", 83)
    ok &= flat(m0k, 0.0, CONSTANT_PLUS_KAPPA, 1.0, [0.25, 0.5, 1.0], "k=0", 84)

    # mismatched generator: strict submartingale (drift up, never down); the
    # strictness gate is a power statement about the fixed drift effect, so
    # quick runs (10x fewer paths, sqrt(10) less resolution) scale it down
    cfg = SimConfig(n_paths=n, dt=dt, t_max=1.0, seed=85)
    rep = martingale_check(m175, 2.0, CONSTANT_MINUS_KAPPA, cfg, 1.0, 10.0,
                           [0.25, 0.5, 1.0])
    lows = [(mean - rep.m0) / se for mean, se in zip(rep.means, rep.std_errors)]
    one_sided = all(x >= -3.0 for x in lows)
    strictly_up = lows[-1] >= (3.0 if not quick else 1.0)
    details.append(f"Uc/-k drift {lows[-1]:.1f}sig up")
    ok &= one_sided and strictly_up
    return bool(ok), "; ".join(details) + f" (n={n}, dt={dt:g}, 3-sigma gates)"


# ---------------------------------------------------------------------------
# criterion 9: Nash equilibrium suite
# ---------------------------------------------------------------------------

def _upper_case_model() -> ModelParams:
    # strongly recurrent downward hitting: 2 mu > 2 kappa sigma + sigma^2
    return make_model(3.45, 0.3, 3.5, 0.2)


def criterion_9(quick: bool = False) -> "tuple[bool, str]":
    n = 10_000 if quick else 100_000
    details = []
    ok = True

    def run(label, model, solution, x0, y0, seed, t_max, dt, n_paths):
        nonlocal ok
        cfg = SimConfig(n_paths=n_paths, dt=dt, t_max=t_max, seed=seed)
        rep = nash_check(model, solution, cfg, x0, y0)
        bad = [l.label for l in rep.lines if not l.ok]
        eq_line = rep.lines[-1]
        details.append(
            f"{label}: {'all ok' if not bad else 'FAIL ' + '; '.join(bad)} "
            f"(eq {eq_line.lhs:.4f} vs V {eq_line.rhs:.4f}, n={n_paths})"
        )
        ok &= not bad

    m175 = make_model(0.0, 0.5, 0.05, 1.75)
    run("floor 2C", m175, floor_solve(m175), 1.0, 1.0, 91, 60.0, 1e-3, n)
    m05 = make_model(0.0, 0.5, 0.05, 0.5)
    run("integral 4C", m05, integral_solve(m05), 1.0, 1.0, 92, 60.0, 1e-3, n)
    # the upper case stops onto a boundary the process crosses at low speed
    # while discounting fast, so its O(sqrt(dt)) crossing bias is large;
    # the configuration puts that bias (~0.3% at dt = 1e-4) well inside the
    # statistical resolution of the 3-sigma gate (~0.7% at 20k paths)
    mu_up = _upper_case_model()
    sol_up = upper_boundary_solve(mu_up, Payoff.custom(lambda z: max(1.0 - z, 0.0)))
    run("upper 3C", mu_up, sol_up, 1.0, 3.0 * sol_up.z_lower, 93, 30.0, 1e-4,
        max(n // 5, 2000))
    return bool(ok), "; ".join(details) + " (3-sigma gates)"


# ---------------------------------------------------------------------------
# criterion 10: analytic structure
# ---------------------------------------------------------------------------

def _ode_residual_fd(pair, z: float, which: str) -> float:
    """ODE residual with the second derivative from centered differences of
    the (independently computed) first derivative, scaled by the largest
    term; everything is normalized by f(z) in log space first so that the
    e^(2/(sigma^2 z)) growth of Q cannot overflow."""
    from .fundamentals import p_log_order, q_log_order

    f = p_log_order if which == "p" else q_log_order
    ref = f(pair, z, 0)[0]

    def rel(zz: float, order: int) -> float:
        lg, sg = f(pair, zz, order)
        return sg * math.exp(lg - ref)

    # Richardson-extrapolated centered difference, with the step tied to the
    # function's variation scale 1 / |dlog f / dz| (not to z): a large base
    # step keeps evaluation noise small, Richardson removes the truncation
    v1 = abs(rel(z, 1))
    h = 1e-3 / max(v1, 1.0 / max(1.0, z))

    def cdiff(hh: float) -> float:
        return (rel(z + hh, 1) - rel(z - hh, 1)) / (2 * hh)

    d2 = (4.0 * cdiff(0.5 * h) - cdiff(h)) / 3.0
    v0 = rel(z, 0)
    v1 = rel(z, 1)
    t1 = 0.5 * pair.model.sigma**2 * z**2 * d2
    t2 = (1.0 - pair.delta * z) * v1
    t3 = -pair.rho * v0
    scale = max(abs(t1), abs(t2), abs(t3), abs(v0))
    return abs(t1 + t2 + t3) / scale


def criterion_10() -> "tuple[bool, str]":
    models = [
        make_model(0.0, 0.5, 0.05, 0.5),
        make_model(0.0, 0.5, 0.05, 1.75),
        make_model(0.02, 0.1, 0.05, 0.5),
        make_model(0.05, 0.3, 0.08, 1.0),
    ]
    worst_ode = worst_wr = worst_pair = 0.0
    worst_c2 = 0.0
    for m in models:
        pair = fundamental_pair(m, DriftSign.PLUS_KAPPA)
        # keep w = 2/(sigma^2 z) below ~400: beyond that the log-space
        # representation itself quantizes values above the 1e-13 needed here
        z_lo = max(0.1, 2.2 / (400.0 * m.sigma**2))
        for z in (z_lo, 1.0, 10.0):
            worst_ode = max(worst_ode, _ode_residual_fd(pair, z, "p"),
                            _ode_residual_fd(pair, z, "q"))
            worst_wr = max(worst_wr, wronskian_residual(pair, z))
        ws = [scaled_wronskian(pair, z) for z in (z_lo, 1.0, 10.0)]
        for (la, sa), (lb, sb) in zip(ws, ws[1:]):
            if sa != sb:
                return False, "scaled Wronskian changed sign across z"
            worst_pair = max(worst_pair, abs(math.expm1(la - lb)))
        # convexity of P, Q on a log grid (rho > 0 regime)
        for z in np.geomspace(1e-3, 1e3, 41):
            if q_log_order(pair, z, 2)[1] <= 0:
                return False, f"Q'' <= 0 at z={z:g}"
            from .fundamentals import p_log_order
            if p_log_order(pair, z, 2)[1] <= 0:
                return False, f"P'' <= 0 at z={z:g}"
        # C2 pasting and convexity of U_c
        f = build_excessive(m, 0.7)
        hat = f.hat_z
        lo2 = slog_value(f.u_log(hat, 2, branch="lower"))
        hi2 = slog_value(f.u_log(hat, 2, branch="upper"))
        worst_c2 = max(worst_c2, abs(lo2 - hi2) / abs(lo2))
        for z in np.geomspace(max(1e-3, 0.05 * f.c), 1e3, 41):
            if f.u_log(z, 2)[1] <= 0:
                return False, f"U_c'' <= 0 at z={z:g}"
    checks = [
        (worst_ode < 1e-8, f"ODE residual {worst_ode:.1e} (tol 1e-8)"),
        (worst_pair < 1e-9, f"Wronskian pairwise {worst_pair:.1e} (tol 1e-9)"),
        (worst_wr < 1e-8, f"Wronskian vs formula {worst_wr:.1e} (tol 1e-8)"),
        (worst_c2 < 1e-6, f"C2 pasting {worst_c2:.1e} (tol 1e-6)"),
    ]
    ok = all(c for c, _ in checks)
    return ok, "; ".join(d for _, d in checks) + "; convexity grids all positive"


# ---------------------------------------------------------------------------
# runner
# ---------------------------------------------------------------------------

_CRITERIA: Sequence = (
    (1, "floor critical ambiguity", lambda quick: criterion_1()),
    (2, "floor single boundary", lambda quick: criterion_2()),
    (3, "floor two-sided boundaries", lambda quick: criterion_3()),
    (4, "integral first-order condition (50 random models)", lambda quick: criterion_4()),
    (5, "boundary monotonicity in kappa and sigma", lambda quick: criterion_5()),
    (6, "exchange K->0 consistency", lambda quick: criterion_6()),
    (7, "finite-difference oracle equivalence", criterion_7),
    (8, "martingale/supermartingale suite", criterion_8),
    (9, "Nash equilibrium suite", criterion_9),
    (10, "analytic structure suite", lambda quick: criterion_10()),
)


def run_acceptance(
    numbers: Optional[Sequence[int]] = None,
    quick: bool = False,
    report: Optional[Callable[[str], None]] = None,
) -> List[AcceptanceResult]:
    """Run the requested criteria (all by default), reporting line by line."""
    results = []
    for number, name, fn in _CRITERIA:
        if numbers is not None and number not in numbers:
            continue
        res = _run(number, name, lambda fn=fn: fn(quick))
        if quick and number in (7, 8, 9):
            res.detail += " [quick]"
        results.append(res)
        if report is not None:
            report(res.line())
    return results
