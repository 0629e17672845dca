"""Finite-difference oracle: policy iteration on the worst-case obstacle
problem in the reduced coordinate z.

The analytic machinery never touches this module; it discretizes the
complementarity system

    max( g - h,  min over theta in {-kappa, +kappa} of L_theta h ) = 0,
    L_theta h = (sigma^2 z^2 / 2) h'' + (1 - (mu - sigma theta) z) h'
                - (r - mu + sigma theta) h,

directly on a log-spaced grid, which makes it the independent reference
for the solver's values and boundaries.  (Equivalently the nonlinear form
sigma^2 z^2 h''/2 + (1 - mu z) h' - (r - mu) h - kappa sigma |h - z h'| = 0
off the stopping set, with theta* = kappa sgn(h - z h').)

Discretization: central differences wherever they keep the row an
M-matrix row, first-order upwind otherwise (selected per node and per
theta by the sign test 2a >= +-nu h); entrance behavior at z_min is the
one-sided transport row (no boundary data), and the right edge carries
Dirichlet h = g, valid because every payoff here stops near +inf.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import solve_banded

from .errors import BadGrid, MismatchedModel, NoConvergence
from .excessive import z_bar
from .model import ModelParams, Payoff
from .solvers import Regime, StoppingSolution, value as solution_value


@dataclass(frozen=True)
class GridSpec:
    """Log-spaced grid; None bounds default to the entrance/stop heuristics
    z_min = 1e-4 / r and z_max = 50 max(1/r, z_bar)."""

    n: int = 1000
    z_min: Optional[float] = None
    z_max: Optional[float] = None

    def resolve(self, model: ModelParams) -> Tuple[float, float, int]:
        if self.n < 200:
            raise BadGrid(f"need at least 200 nodes, got {self.n}")
        z_min = self.z_min if self.z_min is not None else 1e-4 / model.r
        z_max = self.z_max if self.z_max is not None else \
            50.0 * max(1.0 / model.r, z_bar(model))
        if not (0.0 < z_min < z_max):
            raise BadGrid(f"bad grid bounds ({z_min}, {z_max})")
        return z_min, z_max, self.n


@dataclass(frozen=True)
class GridSolution:
    model: ModelParams
    payoff: Payoff
    z_nodes: np.ndarray
    h_values: np.ndarray
    active_theta: np.ndarray     # +-kappa per node
    stop_mask: np.ndarray
    iterations: int
    residual: float

    def stop_intervals(self):
        """Contiguous stopped index ranges as (z_left, z_right) pairs."""
        out = []
        m = self.stop_mask
        i = 0
        n = len(m)
        while i < n:
            if m[i]:
                j = i
                while j + 1 < n and m[j + 1]:
                    j += 1
                out.append((float(self.z_nodes[i]), float(self.z_nodes[j])))
                i = j + 1
            else:
                i += 1
        return out


def _operator_rows(z: np.ndarray, sigma: float, delta: float, rho: float):
    """(lo, di, up) for L h = 0 rows at interior nodes, hybrid central/upwind."""
    hm = z[1:-1] - z[:-2]
    hp = z[2:] - z[1:-1]
    zi = z[1:-1]
    a = 0.5 * sigma**2 * zi**2
    nu = 1.0 - delta * zi

    lo_c = 2.0 * a / (hm * (hm + hp)) - nu * hp / (hm * (hm + hp))
    up_c = 2.0 * a / (hp * (hm + hp)) + nu * hm / (hp * (hm + hp))
    di_c = -2.0 * a / (hm * hp) + nu * (hp - hm) / (hm * hp) - rho

    pos = nu >= 0.0
    lo_u = 2.0 * a / (hm * (hm + hp)) + np.where(pos, 0.0, -nu / hm)
    up_u = 2.0 * a / (hp * (hm + hp)) + np.where(pos, nu / hp, 0.0)
    di_u = -2.0 * a / (hm * hp) - np.abs(nu) / np.where(pos, hp, hm) - rho

    central_ok = (lo_c >= 0.0) & (up_c >= 0.0)
    lo = np.where(central_ok, lo_c, lo_u)
    up = np.where(central_ok, up_c, up_u)
    di = np.where(central_ok, di_c, di_u)
    if np.any(di >= 0.0):
        raise BadGrid("operator diagonal not negative; refine the grid")
    return lo, di, up


def solve_obstacle(
    model: ModelParams,
    payoff: Payoff,
    grid_spec: GridSpec = GridSpec(),
    max_iter: int = 2000,
    value_tol: float = 1e-12,
) -> GridSolution:
    """Howard policy iteration over the doubled action set {stop} u {-k, +k}."""
    z_min, z_max, n = grid_spec.resolve(model)
    z = np.geomspace(z_min, z_max, n)
    g = payoff.g_vec(z)
    kappa, sigma = model.kappa, model.sigma

    # theta = +kappa -> drift mu - kappa sigma, rate rho_plus; theta = -kappa mirrored
    rows = []
    for theta in (kappa, -kappa):
        rows.append(_operator_rows(z, sigma, model.mu - sigma * theta,
                                   model.r - model.mu + sigma * theta))
    (lo_p, di_p, up_p), (lo_m, di_m, up_m) = rows

    # entrance row at node 0: pure transport + killing, per theta
    nu0 = [1.0 - (model.mu - sigma * t) * z[0] for t in (kappa, -kappa)]
    rho0 = [model.r - model.mu + sigma * t for t in (kappa, -kappa)]
    dz0 = z[1] - z[0]
    di0 = np.array([-nu0[i] / dz0 - rho0[i] for i in range(2)])
    up0 = np.array([nu0[i] / dz0 for i in range(2)])
    if np.any(di0 >= 0.0):
        raise BadGrid("entrance row diagonal not negative")

    hm = z[1:-1] - z[:-2]
    hp = z[2:] - z[1:-1]
    dz_last = z[-1] - z[-2]

    def improve(h):
        # nature's bang-bang policy from the sign of h - z h' (the analytic
        # worst-case rule); ranking candidate values instead can limit-cycle
        # when the minus-kappa regime carries a negative effective rate
        dh = np.empty(n)
        dh[1:-1] = (-hp / (hm * (hm + hp))) * h[:-2] \
            + ((hp - hm) / (hm * hp)) * h[1:-1] \
            + (hm / (hp * (hm + hp))) * h[2:]
        dh[0] = (h[1] - h[0]) / (z[1] - z[0])
        dh[-1] = (h[-1] - h[-2]) / dz_last
        th = np.where(h - z * dh >= 0.0, 0, 1).astype(np.int64)
        # the stopper's policy: candidate continuation value under that theta
        cont = np.empty(n)
        c_p = (lo_p * h[:-2] + up_p * h[2:]) / (-di_p)
        c_m = (lo_m * h[:-2] + up_m * h[2:]) / (-di_m)
        cont[1:-1] = np.where(th[1:-1] == 0, c_p, c_m)
        cont[0] = up0[th[0]] * h[1] / (-di0[th[0]])
        cont[-1] = g[-1]
        # strict test with a machine-scale margin so exact ties cannot flutter
        st = g > cont + 1e-14 * np.maximum(1.0, np.abs(cont))
        st[-1] = True
        return th, st

    def solve_policy(theta_new, stop_new, lam=0.0, h_prev=None):
        # lam > 0 adds the implicit pseudo-time term -lam (h - h_prev) on
        # continuation rows, restoring the M-matrix property when the
        # minus-kappa regime carries a negative effective rate
        lo = np.where(theta_new[1:-1] == 0, lo_p, lo_m)
        di = np.where(theta_new[1:-1] == 0, di_p, di_m) - lam
        up = np.where(theta_new[1:-1] == 0, up_p, up_m)
        ab = np.zeros((3, n))
        rhs = np.zeros(n)
        interior_stop = stop_new[1:-1]
        ab[0, 2:] = np.where(interior_stop, 0.0, up)
        ab[1, 1:-1] = np.where(interior_stop, 1.0, di)
        ab[2, :-2] = np.where(interior_stop, 0.0, lo)
        damp_rhs = 0.0 if h_prev is None else -lam * h_prev[1:-1]
        rhs[1:-1] = np.where(interior_stop, g[1:-1], damp_rhs)
        if stop_new[0]:
            ab[1, 0] = 1.0
            rhs[0] = g[0]
        else:
            k = theta_new[0]
            ab[1, 0] = di0[k] - lam
            ab[0, 1] = up0[k]
            rhs[0] = 0.0 if h_prev is None else -lam * h_prev[0]
        ab[1, -1] = 1.0
        rhs[-1] = g[-1]
        return solve_banded((1, 1), ab, rhs)

    def policy_loop(lam, budget):
        # start from the all-continue solution so iterates descend onto
        # the obstacle rather than creeping up from it
        theta_idx = np.zeros(n, dtype=np.int64)
        stop = np.zeros(n, dtype=bool)
        stop[-1] = True
        h = np.maximum(solve_policy(theta_idx, stop), g)
        g_scale = max(1.0, float(np.max(np.abs(g))))
        for it in range(1, budget + 1):
            theta_new, stop_new = improve(h)
            h_new = solve_policy(theta_new, stop_new, lam=lam, h_prev=h)
            moved = float(np.max(np.abs(h_new - h)))
            h = h_new
            if not np.all(np.isfinite(h)) or np.max(np.abs(h)) > 1e9 * g_scale:
                raise NoConvergence("policy iterates diverged")
            if it >= 2 and moved <= value_tol * max(1.0, float(np.max(np.abs(h)))):
                return h, theta_new, stop_new, it
        raise NoConvergence(f"policy iteration did not settle in {budget} sweeps")

    try:
        h, theta_idx, stop, iterations = policy_loop(0.0, max_iter)
    except NoConvergence:
        # negative minus-kappa rate with a stiff growth mode: damp
        lam = max(0.0, -model.rho_minus) + 0.1 * model.r
        h, theta_idx, stop, iterations = policy_loop(lam, 4 * max_iter)

    residual = _complementarity_residual(
        h, g, (lo_p, di_p, up_p), (lo_m, di_m, up_m), di0, up0)
    if residual > 1e-9 * max(1.0, float(np.max(np.abs(h)))):
        raise NoConvergence(
            f"complementarity residual {residual:.2e} above tolerance after "
            f"{iterations} sweeps"
        )
    active = np.where(theta_idx == 0, kappa, -kappa)
    return GridSolution(model=model, payoff=payoff, z_nodes=z, h_values=h,
                        active_theta=active, stop_mask=stop,
                        iterations=iterations, residual=residual)


def _complementarity_residual(h, g, rows_p, rows_m, di0, up0):
    """max over nodes of |max(g - h, (min_theta L h) / |diag|)|, the scaled
    discrete complementarity defect."""
    lo_p, di_p, up_p = rows_p
    lo_m, di_m, up_m = rows_m
    r_p = (lo_p * h[:-2] + di_p * h[1:-1] + up_p * h[2:]) / np.abs(di_p)
    r_m = (lo_m * h[:-2] + di_m * h[1:-1] + up_m * h[2:]) / np.abs(di_m)
    r_cont = np.minimum(r_p, r_m)
    defect = np.abs(np.maximum(g[1:-1] - h[1:-1], r_cont))
    r0 = min((di0[k] * h[0] + up0[k] * h[1]) / abs(di0[k]) for k in range(2))
    defect0 = abs(max(g[0] - h[0], r0))
    return float(max(defect.max(), defect0))


# ---------------------------------------------------------------------------
# comparison against the analytic solution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CompareReport:
    max_rel_error: float
    n_interior: int
    boundary_offsets_cells: Tuple[int, ...]

    def worst_boundary_offset(self) -> int:
        return max(self.boundary_offsets_cells) if self.boundary_offsets_cells else 0


def compare(solution: StoppingSolution, oracle: GridSolution,
            edge_cells: int = 5) -> CompareReport:
    """Max relative error of analytic V(1, z) against the oracle on interior
    nodes, plus free-boundary discrepancies in grid cells."""
    if solution.model != oracle.model:
        raise MismatchedModel("solution and oracle use different models")
    if solution.payoff.kind != oracle.payoff.kind or \
            solution.payoff.strike != oracle.payoff.strike:
        raise MismatchedModel("solution and oracle use different payoffs")
    z = oracle.z_nodes[edge_cells:-edge_cells]
    h = oracle.h_values[edge_cells:-edge_cells]
    analytic = np.array([solution_value(solution, 1.0, zz) for zz in z])
    rel = np.abs(analytic - h) / np.maximum(np.abs(analytic), 1e-300)
    offsets = []
    boundaries = []
    if solution.regime is Regime.TWO_SIDED:
        boundaries = [solution.z_lower, solution.z_upper]
    elif solution.regime is Regime.LOWER_BOUNDARY:
        boundaries = [solution.z_upper]
    else:
        boundaries = [solution.z_lower]
    edges = _stop_edges(oracle)
    for b in boundaries:
        if not edges:
            offsets.append(len(oracle.z_nodes))
            continue
        cell_b = int(np.searchsorted(oracle.z_nodes, b))
        offsets.append(min(abs(cell_b - e) for e in edges))
    return CompareReport(max_rel_error=float(rel.max()), n_interior=len(z),
                         boundary_offsets_cells=tuple(offsets))


def _stop_edges(oracle: GridSolution):
    """Node indices where stop_mask switches (free-boundary locations)."""
    m = oracle.stop_mask.astype(np.int8)
    return list(np.nonzero(np.diff(m) != 0)[0] + 1)


def dump_csv(oracle: GridSolution, path: str) -> None:
    """(z, h, theta, stop) rows for debugging."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["z", "h", "theta", "stop"])
        for z, h, t, s in zip(oracle.z_nodes, oracle.h_values,
                              oracle.active_theta, oracle.stop_mask):
            w.writerow([f"{z:.12g}", f"{h:.12g}", f"{t:.12g}", int(s)])
