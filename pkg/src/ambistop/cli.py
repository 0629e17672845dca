"""Command-line front end: solve/verify workflows and figure-style CSV sweeps.

Commands
--------
roots           characteristic roots for both drift regimes
boundary        optimal boundary / regime for one model + payoff
value-curve     V(1, z), the payoff, and the worst-case generator on a z-range
sweep-kappa     boundary as a function of kappa (and a sigma list)
critical-kappa  floor-option critical ambiguity level
simulate        Monte Carlo estimate of the solved stopping value
verify          run the acceptance suite, one PASS/FAIL line per criterion

Conventions
-----------
* ranges: ``a:b:n`` means n+1 equally spaced points including both ends;
  plain comma lists give discrete sets (``0.05,0.075,0.1``)
* a flat key=value config file supplies model keys (mu, sigma, r, kappa,
  payoff, strike); explicit flags win over the file
* CSV output: UTF-8, comma separator, 12 significant digits; rows sorted
  by the sweep key, so identical inputs give byte-identical files
* AMBISTOP_THREADS caps sweep parallelism; AMBISTOP_BACKEND picks the
  numba or numpy simulation kernels
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, List, Optional, Sequence

from . import __version__
from .errors import (
    AmbistopError,
    ConfigError,
    ModelValidationError,
    NumericsError,
    SimulationError,
    SolverError,
)
from .model import DriftSign, ModelParams, Payoff, characteristic_roots, make_model
from .simulate import (
    CONSTANT_MINUS_KAPPA,
    CONSTANT_PLUS_KAPPA,
    WORST_CASE,
    SimConfig,
    simulate_value,
)
from .solvers import Regime, solve, value, worst_case_generator

_FMT = "{:.12g}"


def _fmt(x) -> str:
    if isinstance(x, float):
        return _FMT.format(x)
    return str(x)


def parse_range(spec: str) -> List[float]:
    """``a:b:n`` -> n+1 inclusive points; ``x,y,z`` -> that list; ``x`` -> [x]."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range must be a:b:n, got {spec!r}")
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1:
            raise ConfigError(f"range step count must be >= 1, got {n}")
        if not b > a:
            raise ConfigError(f"range must be increasing, got {spec!r}")
        return [a + (b - a) * i / n for i in range(n + 1)]
    if "," in spec:
        vals = [float(p) for p in spec.split(",") if p.strip()]
        if not vals:
            raise ConfigError(f"empty list {spec!r}")
        return vals
    return [float(spec)]


def read_config(path: str) -> dict:
    """Flat key=value file; '#' starts a comment."""
    out = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value")
                k, v = line.split("=", 1)
                out[k.strip().lower()] = v.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return out


def _model_from(args, cfg: dict) -> ModelParams:
    def pick(name, default=None):
        v = getattr(args, name, None)
        if v is not None:
            return v
        if name in cfg:
            return float(cfg[name])
        if default is not None:
            return default
        raise ConfigError(f"missing model parameter --{name}")

    return make_model(pick("mu"), pick("sigma"), pick("r"), pick("kappa"))


def _payoff_from(args, cfg: dict) -> Payoff:
    name = getattr(args, "payoff", None) or cfg.get("payoff") or "integral"
    name = name.strip().lower()
    if name == "integral":
        return Payoff.integral()
    if name == "floor":
        return Payoff.floor()
    if name == "exchange":
        strike = getattr(args, "strike", None)
        if strike is None:
            strike = float(cfg.get("strike", 0.0) or 0.0)
        if strike <= 0.0:
            raise ConfigError("exchange payoff needs --strike > 0")
        return Payoff.exchange(strike)
    raise ConfigError(f"unknown payoff {name!r} (integral, exchange, floor)")


def _emit(rows: Sequence[Sequence], header: Sequence[str], out: Optional[str]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _n_workers() -> int:
    env = os.environ.get("AMBISTOP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"AMBISTOP_THREADS must be an integer, got {env!r}")
    return min(4, os.cpu_count() or 1)


def _parallel_map(fn, items: Iterable):
    items = list(items)
    workers = min(_n_workers(), max(1, len(items)))
    if workers == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_roots(args, cfg) -> int:
    model = _model_from(args, cfg)
    rows = []
    for sign in (DriftSign.PLUS_KAPPA, DriftSign.MINUS_KAPPA):
        roots = characteristic_roots(model, sign)
        rows.append([sign.name.lower(), roots.psi, roots.phi, roots.b])
    _emit(rows, ["drift_sign", "psi", "phi", "b"], args.out)
    return 0


def _solution_row(model, payoff):
    sol = solve(model, payoff)
    return [
        payoff.kind.value, sol.regime.value,
        sol.z_lower if sol.z_lower is not None else "",
        sol.z_upper if sol.z_upper is not None else "",
        sol.c_star if sol.c_star is not None else "",
        sol.pi_star,
        sol.switch_z if sol.switch_z is not None else "",
    ]


def cmd_boundary(args, cfg) -> int:
    model = _model_from(args, cfg)
    payoff = _payoff_from(args, cfg)
    _emit([_solution_row(model, payoff)],
          ["payoff", "regime", "z_lower", "z_upper", "c_star", "pi_star", "switch_z"],
          args.out)
    return 0


def cmd_value_curve(args, cfg) -> int:
    model = _model_from(args, cfg)
    payoff = _payoff_from(args, cfg)
    zs = parse_range(args.z)
    if any(z < 0 for z in zs):
        raise ConfigError("z range must be nonnegative")
    sol = solve(model, payoff)
    rows = []
    for z in zs:
        v = value(sol, 1.0, z)
        theta = worst_case_generator(sol, 1.0, z)
        rows.append([z, payoff.g(z), v, theta])
    _emit(rows, ["z", "payoff", "value", "generator"], args.out)
    return 0


def cmd_sweep_kappa(args, cfg) -> int:
    payoff = _payoff_from(args, cfg)
    kappas = parse_range(args.kappa if args.kappa else "0:1:50")
    sigmas = parse_range(args.sigma) if args.sigma else [float(cfg.get("sigma", 0.1))]
    mu = args.mu if args.mu is not None else float(cfg.get("mu", 0.0))
    r = args.r if args.r is not None else float(cfg.get("r", 0.05))

    def one(point):
        s, k = point
        model = make_model(mu, s, r, k)
        sol = solve(model, payoff)
        boundary = sol.z_upper if sol.regime is not Regime.UPPER_BOUNDARY else sol.z_lower
        lower = sol.z_lower if sol.regime is Regime.TWO_SIDED else ""
        return [s, k, boundary, lower, sol.regime.value]

    points = [(s, k) for s in sigmas for k in kappas]
    rows = _parallel_map(one, points)
    rows.sort(key=lambda row: (row[0], row[1]))
    _emit(rows, ["sigma", "kappa", "boundary", "lower_boundary", "regime"], args.out)
    return 0


def cmd_critical_kappa(args, cfg) -> int:
    mu = args.mu if args.mu is not None else float(cfg.get("mu", 0.0))
    sigma = args.sigma if args.sigma is not None else float(cfg.get("sigma", 0.5))
    r = args.r if args.r is not None else float(cfg.get("r", 0.05))
    from .solvers import critical_kappa_floor

    k = critical_kappa_floor(mu, sigma, r, kappa_max=args.kappa_max)
    _emit([[mu, sigma, r, k]], ["mu", "sigma", "r", "critical_kappa"], args.out)
    return 0


_GENERATORS = {
    "worst-case": WORST_CASE,
    "plus-kappa": CONSTANT_PLUS_KAPPA,
    "minus-kappa": CONSTANT_MINUS_KAPPA,
}


def cmd_simulate(args, cfg) -> int:
    model = _model_from(args, cfg)
    payoff = _payoff_from(args, cfg)
    if args.generator not in _GENERATORS:
        raise ConfigError(f"unknown generator {args.generator!r}")
    sol = solve(model, payoff)
    config = SimConfig(n_paths=args.paths, dt=args.dt, t_max=args.t_max,
                       seed=args.seed)
    est = simulate_value(model, sol, _GENERATORS[args.generator], config,
                         args.x0, args.y0)
    analytic = value(sol, args.x0, args.y0)
    _emit(
        [["mc_value", est.mean, est.std_error, est.n_stopped,
          est.truncation_bias_bound, analytic, args.paths, args.dt, args.seed]],
        ["quantity", "mean", "std_error", "n_stopped", "truncation_bound",
         "analytic_value", "n_paths", "dt", "seed"],
        args.out,
    )
    return 0


def cmd_verify(args, cfg) -> int:
    from .acceptance import run_acceptance

    numbers = None
    if args.criteria:
        numbers = [int(p) for p in args.criteria.split(",")]
    results = run_acceptance(numbers=numbers, quick=args.quick, report=print)
    return 0 if all(r.passed for r in results) else 5


# ---------------------------------------------------------------------------
# parser / entry point
# ---------------------------------------------------------------------------

def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mu", type=float, default=None, help="GBM drift")
    p.add_argument("--sigma", type=float, default=None, help="volatility (> 0)")
    p.add_argument("--r", type=float, default=None, help="discount rate (> 0)")
    p.add_argument("--kappa", type=float, default=None, help="ambiguity radius (>= 0)")


def _add_payoff_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--payoff", choices=["integral", "exchange", "floor"],
                   default=None)
    p.add_argument("--strike", type=float, default=None,
                   help="exchange strike K > 0")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ambistop",
        description="Optimal exercise timing of integral options under drift ambiguity",
    )
    ap.add_argument("--version", action="version", version=f"ambistop {__version__}")
    ap.add_argument("--config", default=None,
                    help="flat key=value file with model defaults")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("roots", help="characteristic roots of the regime quadratic")
    _add_model_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_roots)

    p = sub.add_parser("boundary", help="optimal boundary and regime")
    _add_model_flags(p)
    _add_payoff_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_boundary)

    p = sub.add_parser("value-curve", help="V(1, z) over a z range")
    _add_model_flags(p)
    _add_payoff_flags(p)
    p.add_argument("--z", required=True, help="range a:b:n or comma list")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_value_curve)

    p = sub.add_parser("sweep-kappa", help="boundary as a function of kappa")
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--sigma", default=None, help="comma list or range of sigmas")
    p.add_argument("--kappa", default=None, help="range a:b:n (default 0:1:50)")
    _add_payoff_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_sweep_kappa)

    p = sub.add_parser("critical-kappa", help="floor-option critical ambiguity")
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--kappa-max", type=float, default=10.0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_critical_kappa)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of the stopped value")
    _add_model_flags(p)
    _add_payoff_flags(p)
    p.add_argument("--x0", type=float, default=1.0)
    p.add_argument("--y0", type=float, default=0.0)
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-max", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--generator", default="worst-case",
                   choices=sorted(_GENERATORS))
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("verify", help="run the acceptance suite (PASS/FAIL lines)")
    p.add_argument("--criteria", default=None,
                   help="comma list of criterion numbers (default: all)")
    p.add_argument("--quick", action="store_true",
                   help="scale the Monte Carlo criteria down for a fast pass")
    p.set_defaults(fn=cmd_verify)
    return ap


_EXIT_CODES = (
    (ConfigError, 2),
    (ModelValidationError, 2),
    (SolverError, 3),
    (NumericsError, 3),
    (SimulationError, 4),
)


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    cfg = read_config(args.config) if args.config else {}
    try:
        return args.fn(args, cfg)
    except AmbistopError as exc:
        for klass, code in _EXIT_CODES:
            if isinstance(exc, klass):
                print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
                return code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
