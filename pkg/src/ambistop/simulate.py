"""Monte Carlo verification layer: stopped-value estimates, martingale
checkpoint profiles, and Nash-equilibrium deviation checks.

Every estimate is reproducible from (seed, path_index) alone; see
:mod:`ambistop.philox`.  Horizon truncation is reported, never hidden:
``truncation_bias_bound`` carries e^(-r t_max) times the empirical
maximum payoff over unstopped paths, scaled by the unstopped fraction.

A note on the martingale checks: M_t = e^(-rt) X_t U_c(Z_t) explodes as
Z -> 0 for any finite reference point c > 0 (U_c inherits the e^(2/(s^2 z))
blow-up of the decreasing solution), so those checks need a start with
y0 > 0.  The c = 0 member is flat near zero (U_0 -> 1) and may start from
y0 = 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    InvalidInitialState,
    SimulationError,
    StartInStopRegion,
    StepTooLarge,
)
from .excessive import ExcessiveFunction, build_excessive, eval_u
from .model import ModelParams
from .paths import GEN_MINUS, GEN_PLUS, GEN_WORST, run_snapshots, run_stopping
from .solvers import Regime, StoppingSolution, value as solution_value


@dataclass(frozen=True)
class SimConfig:
    """Engine settings.  ``t_max`` defaults to 40/r at the call site."""

    n_paths: int
    dt: float
    t_max: Optional[float] = None
    seed: int = 0
    scheme: str = "euler-logx-z"

    def __post_init__(self) -> None:
        if self.n_paths < 1:
            raise InvalidInitialState(f"n_paths must be >= 1, got {self.n_paths}")
        if not (self.dt > 0.0):
            raise InvalidInitialState(f"dt must be > 0, got {self.dt}")
        if self.t_max is not None and self.t_max < 100.0 * self.dt:
            raise InvalidInitialState("t_max must be at least 100 * dt")
        if self.scheme != "euler-logx-z":
            raise InvalidInitialState(f"unknown scheme {self.scheme!r}")

    def horizon(self, model: ModelParams) -> float:
        return self.t_max if self.t_max is not None else 40.0 / model.r


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_stopped: int
    truncation_bias_bound: float


#: generator selectors accepted by the simulation entry points
WORST_CASE = "worst-case"
CONSTANT_PLUS_KAPPA = "plus-kappa"
CONSTANT_MINUS_KAPPA = "minus-kappa"

_GEN_MODES = {
    WORST_CASE: GEN_WORST,
    CONSTANT_PLUS_KAPPA: GEN_PLUS,
    CONSTANT_MINUS_KAPPA: GEN_MINUS,
}


def _resolve_generator(generator, model: ModelParams, switch_z: Optional[float]):
    """Map a generator spec onto (mode, switch, theta_fn)."""
    if callable(generator):
        kappa = model.kappa

        def checked(z: np.ndarray) -> np.ndarray:
            th = np.asarray(generator(z), dtype=np.float64)
            if np.any(np.abs(th) > kappa + 1e-12):
                raise SimulationError(
                    "custom generator violates |theta| <= kappa"
                )
            return th

        return GEN_WORST, 0.0, checked
    if generator not in _GEN_MODES:
        raise SimulationError(
            f"unknown generator {generator!r}; expected one of "
            f"{sorted(_GEN_MODES)} or a callable theta(z)"
        )
    mode = _GEN_MODES[generator]
    if mode == GEN_WORST:
        if switch_z is None:
            mode = GEN_PLUS  # Q-member solutions: worst case is theta == +kappa
            return mode, 0.0, None
        return mode, float(switch_z), None
    return mode, 0.0, None


def _stop_band(solution: StoppingSolution) -> Tuple[float, float]:
    """(stop_lo, stop_hi) encoding; negative = absent (see paths module)."""
    if solution.regime is Regime.LOWER_BOUNDARY:
        return -1.0, float(solution.z_upper)
    if solution.regime is Regime.UPPER_BOUNDARY:
        return float(solution.z_lower), -1.0
    return float(solution.z_lower), float(solution.z_upper)


def _in_stop_region(band: Tuple[float, float], z: float) -> bool:
    lo, hi = band
    if lo >= 0.0 and z <= lo:
        return True
    if hi > 0.0 and z >= hi:
        return True
    return False


def simulate_value(
    model: ModelParams,
    solution: StoppingSolution,
    generator,
    config: SimConfig,
    x0: float,
    y0: float,
    band: Optional[Tuple[float, float]] = None,
    backend: Optional[str] = None,
    return_payoffs: bool = False,
):
    """Estimate E[e^(-r tau) X_tau g(Z_tau)] for the solution's stopping rule.

    ``band`` overrides the stopping boundaries (used by the deviation
    checks); ``generator`` is one of the named selectors or theta(z).
    With ``return_payoffs`` the per-path discounted payoffs come back too
    (common-random-number comparisons need them).
    """
    if not (x0 > 0.0) or y0 < 0.0 or not math.isfinite(x0 + y0):
        raise InvalidInitialState(f"require x0 > 0, y0 >= 0; got ({x0}, {y0})")
    stop_lo, stop_hi = band if band is not None else _stop_band(solution)
    z0 = y0 / x0
    payoff = solution.payoff
    if _in_stop_region((stop_lo, stop_hi), z0):
        pay = payoff.value(x0, y0)
        est = McEstimate(pay, 0.0, config.n_paths, 0.0)
        if return_payoffs:
            return est, np.full(config.n_paths, pay)
        return est

    t_max = config.horizon(model)
    n_steps = int(round(t_max / config.dt))
    mode, switch, theta_fn = _resolve_generator(generator, model, solution.switch_z)
    tau, logx, z_stop, stopped, steps, big = run_stopping(
        config.seed, config.n_paths, math.log(x0), z0, config.dt, n_steps,
        model.mu, model.sigma, model.kappa, mode, switch, stop_lo, stop_hi,
        theta_fn=theta_fn, backend=backend,
    )
    total_steps = int(steps.sum())
    if total_steps > 0 and big.sum() > 1e-3 * total_steps:
        raise StepTooLarge(
            f"explicit-step heuristic tripped on {big.sum()} of {total_steps} steps; "
            "reduce dt"
        )
    g = payoff.g_vec(z_stop)
    pay = np.where(stopped, np.exp(-model.r * tau + logx) * g, 0.0)
    n_stop = int(stopped.sum())
    mean = float(pay.mean())
    se = float(pay.std(ddof=1) / math.sqrt(config.n_paths)) if config.n_paths > 1 else 0.0
    if n_stop < config.n_paths:
        live = ~stopped
        live_pay = np.exp(logx[live]) * g[live]
        bound = math.exp(-model.r * t_max) * float(live_pay.max()) \
            * (config.n_paths - n_stop) / config.n_paths
    else:
        bound = 0.0
    est = McEstimate(mean, se, n_stop, bound)
    if return_payoffs:
        return est, pay
    return est


# ---------------------------------------------------------------------------
# martingale / supermartingale checkpoints
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MartingaleReport:
    c: float
    generator: str
    m0: float
    times: List[float]
    means: List[float]
    std_errors: List[float]

    def max_drift_sigmas(self) -> float:
        """Largest |mean(t) - M0| / SE(t) over the checkpoints."""
        worst = 0.0
        for m, s in zip(self.means, self.std_errors):
            if s > 0.0:
                worst = max(worst, abs(m - self.m0) / s)
        return worst


def _u_table(f: ExcessiveFunction, z_lo: float, z_hi: float, n: int = 3000):
    """Cubic spline of log U_c over a log-z grid covering [z_lo, z_hi]."""
    z_lo = max(z_lo * 0.999, 1e-300)
    z_hi = z_hi * 1.001
    logz = np.linspace(math.log(z_lo), math.log(z_hi), n)
    logu = np.array([f.u_log(math.exp(lz))[0] for lz in logz])
    return CubicSpline(logz, logu)


def martingale_check(
    model: ModelParams,
    c: float,
    generator,
    config: SimConfig,
    x0: float,
    y0: float,
    checkpoints: Sequence[float],
    backend: Optional[str] = None,
) -> MartingaleReport:
    """Sample means of M_t = e^(-rt) X_t U_c(Z_t) at the checkpoints.

    Under the generator matched to U_c (bang-bang at hat_z_c for finite c,
    constant +kappa for c = inf) the profile is flat at M_0 in expectation;
    under any other admissible generator it can only drift upward.
    """
    if not (x0 > 0.0) or y0 < 0.0:
        raise InvalidInitialState(f"require x0 > 0, y0 >= 0; got ({x0}, {y0})")
    f = build_excessive(model, c)
    z0 = y0 / x0
    if z0 == 0.0:
        if f.c != 0.0:
            raise InvalidInitialState(
                "finite-c martingale checks need y0 > 0 (U_c(0+) is infinite)"
            )
        m0 = x0  # U_0(0+) = 1
    else:
        m0 = x0 * eval_u(f, z0)
    ck = sorted(float(t) for t in checkpoints)
    if not ck or ck[0] < 0.0:
        raise InvalidInitialState("checkpoints must be nonnegative and nonempty")
    t_max = config.horizon(model)
    if ck[-1] > t_max:
        raise InvalidInitialState("checkpoints must not exceed t_max")
    steps = np.unique(np.round(np.array(ck) / config.dt).astype(np.int64))
    mode, switch, theta_fn = _resolve_generator(generator, model, f.hat_z)
    logx, z = run_snapshots(
        config.seed, config.n_paths, math.log(x0), z0, config.dt, steps,
        model.mu, model.sigma, model.kappa, mode, switch,
        theta_fn=theta_fn, backend=backend,
    )
    z_lo, z_hi = float(z.min()), float(z.max())
    spline = _u_table(f, z_lo, z_hi)
    times, means, ses = [], [], []
    for i, s in enumerate(steps):
        log_m = -model.r * (s * config.dt) + logx[i] + spline(np.log(z[i]))
        m = np.exp(log_m)
        times.append(float(s * config.dt))
        means.append(float(m.mean()))
        ses.append(float(m.std(ddof=1) / math.sqrt(config.n_paths)))
    gen_name = generator if isinstance(generator, str) else "custom"
    return MartingaleReport(c=f.c, generator=gen_name, m0=m0,
                            times=times, means=means, std_errors=ses)


# ---------------------------------------------------------------------------
# Nash equilibrium checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NashCheckLine:
    label: str
    lhs: float
    rhs: float
    tolerance: float   # 3 * relevant standard error
    ok: bool


@dataclass(frozen=True)
class NashReport:
    analytic_value: float
    equilibrium: McEstimate
    lines: List[NashCheckLine] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def all_ok(self) -> bool:
        return all(line.ok for line in self.lines)


def _deviated_bands(solution: StoppingSolution, shrink: float = 0.1):
    """Continuation band shrunk and expanded by the given fraction."""
    if solution.regime is Regime.LOWER_BOUNDARY:
        z = solution.z_upper
        return [("stop earlier (0.9 z*)", (-1.0, 0.9 * z)),
                ("stop later (1.1 z*)", (-1.0, 1.1 * z))]
    if solution.regime is Regime.UPPER_BOUNDARY:
        z = solution.z_lower
        return [("stop earlier (1.1 z*)", (1.1 * z, -1.0)),
                ("stop later (0.9 z*)", (0.9 * z, -1.0))]
    z1, z2 = solution.z_lower, solution.z_upper
    return [("band shrunk 10%", (z1 * (1.0 + shrink), z2 * (1.0 - shrink))),
            ("band expanded 10%", (z1 * (1.0 - shrink), z2 * (1.0 + shrink)))]


def nash_check(
    model: ModelParams,
    solution: StoppingSolution,
    config: SimConfig,
    x0: float,
    y0: float,
    backend: Optional[str] = None,
) -> NashReport:
    """Empirical Nash-equilibrium test for a solved stopping problem.

    Three families of comparisons, all with common random numbers:

    (i)   nature deviates: constant +/-kappa generators at the optimal
          stopping rule must not lower the estimate;
    (ii)  the stopper deviates: 10% band perturbations at the worst-case
          generator must not raise it;
    (iii) the equilibrium estimate matches the analytic value within
          3 standard errors.
    """
    z0 = y0 / x0
    if _in_stop_region(_stop_band(solution), z0):
        raise StartInStopRegion(f"(x0, y0) = ({x0}, {y0}) is not in the continuation region")
    notes: List[str] = []
    if solution.regime is Regime.UPPER_BOUNDARY and \
            2.0 * model.mu <= 2.0 * model.kappa * model.sigma + model.sigma**2:
        notes.append(
            "upper-boundary hitting may be transient here "
            "(2 mu <= 2 kappa sigma + sigma^2); estimates carry truncation bias"
        )
    eq, eq_pay = simulate_value(model, solution, WORST_CASE, config, x0, y0,
                                backend=backend, return_payoffs=True)
    lines: List[NashCheckLine] = []

    for label, gen in (("nature deviates to +kappa", CONSTANT_PLUS_KAPPA),
                       ("nature deviates to -kappa", CONSTANT_MINUS_KAPPA)):
        dev, dev_pay = simulate_value(model, solution, gen, config, x0, y0,
                                      backend=backend, return_payoffs=True)
        diff = dev_pay - eq_pay
        se = float(diff.std(ddof=1) / math.sqrt(len(diff)))
        lines.append(NashCheckLine(label, dev.mean, eq.mean, 3.0 * se,
                                   dev.mean >= eq.mean - 3.0 * se))

    for label, band in _deviated_bands(solution):
        dev, dev_pay = simulate_value(model, solution, WORST_CASE, config, x0,
                                      y0, band=band, backend=backend,
                                      return_payoffs=True)
        diff = eq_pay - dev_pay
        se = float(diff.std(ddof=1) / math.sqrt(len(diff)))
        lines.append(NashCheckLine(f"stopper deviates: {label}", dev.mean,
                                   eq.mean, 3.0 * se,
                                   dev.mean <= eq.mean + 3.0 * se))

    v = solution_value(solution, x0, y0)
    tol = 3.0 * eq.std_error
    lines.append(NashCheckLine("equilibrium matches analytic value", eq.mean,
                               v, tol, abs(eq.mean - v) <= tol + eq.truncation_bias_bound))
    return NashReport(analytic_value=v, equilibrium=eq, lines=lines, notes=notes)


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def write_estimates_csv(path: str, rows: Sequence[Tuple[str, McEstimate]],
                        config: SimConfig) -> None:
    """One row per labelled estimate: quantity, mean, std_error, n_paths, dt, seed."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["quantity", "mean", "std_error", "n_paths", "dt", "seed"])
        for label, est in rows:
            w.writerow([
                label, f"{est.mean:.12g}", f"{est.std_error:.12g}",
                config.n_paths, f"{config.dt:.12g}", config.seed,
            ])
