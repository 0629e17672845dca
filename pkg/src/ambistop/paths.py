"""Euler path engines for the controlled pair (X, Z).

Dynamics under a density generator theta (piecewise constant within a
step, frozen at the step start):

    d log X = (mu - sigma theta - sigma^2/2) dt + sigma dW
    dZ      = (1 - (mu - sigma^2 - sigma theta) Z) dt - sigma Z dW

X is advanced exactly in log space; Z by explicit Euler.  The *same*
Brownian increment drives both, with opposite diffusion signs.  Stopping
is detected by boundary crossing of Z with linear interpolation of the
crossing time inside the step (a known O(sqrt(dt)) bias source, bounded
empirically by the dt-halving invariant in the test suite).

Generator modes: 0 = bang-bang kappa*sgn(switch_z - Z), 1 = constant
+kappa, 2 = constant -kappa.  Arbitrary theta(z) callables are supported
by the numpy engine only.

Boundary encoding: stop_lo < 0 means "no lower stopping boundary";
stop_hi <= 0 means "no upper stopping boundary".
"""

from __future__ import annotations

import math

import numpy as np

from ._backend import njit, pick
from .philox import normals4, normals4_np

GEN_WORST = 0
GEN_PLUS = 1
GEN_MINUS = 2


@njit(cache=True)
def _stop_kernel(seed, n_paths, logx0, z0, dt, n_steps, mu, sigma, kappa,
                 gen_mode, switch_z, stop_lo, stop_hi,
                 out_tau, out_logx, out_zstop, out_stopped, out_steps, out_big):
    sq_dt = math.sqrt(dt)
    for p in range(n_paths):
        logx = logx0
        z = z0
        n0 = n1 = n2 = n3 = 0.0
        stopped = False
        s = 0
        while s < n_steps:
            lane = s & 3
            if lane == 0:
                n0, n1, n2, n3 = normals4(np.uint64(seed), np.uint64(p),
                                          np.uint64(s >> 2))
            if lane == 0:
                xi = n0
            elif lane == 1:
                xi = n1
            elif lane == 2:
                xi = n2
            else:
                xi = n3
            if gen_mode == 0:
                theta = kappa if switch_z - z >= 0.0 else -kappa
            elif gen_mode == 1:
                theta = kappa
            else:
                theta = -kappa
            drift = 1.0 - (mu - sigma * sigma - sigma * theta) * z
            # entrance regime (z of order dt) is additive; the relative-step
            # stability test only makes sense at multiplicative scales
            if abs(drift) * dt > 0.5 * max(abs(z), 20.0 * dt):
                out_big[p] += 1
            dw = sq_dt * xi
            z_new = z + drift * dt - sigma * z * dw
            dlx = (mu - sigma * theta - 0.5 * sigma * sigma) * dt + sigma * dw
            s += 1
            hit_hi = stop_hi > 0.0 and z_new >= stop_hi
            hit_lo = stop_lo >= 0.0 and z_new <= stop_lo
            if hit_hi or hit_lo:
                if hit_hi and hit_lo:
                    lam_hi = (stop_hi - z) / (z_new - z)
                    lam_lo = (stop_lo - z) / (z_new - z)
                    if lam_hi <= lam_lo:
                        lam, bound = lam_hi, stop_hi
                    else:
                        lam, bound = lam_lo, stop_lo
                elif hit_hi:
                    lam = (stop_hi - z) / (z_new - z)
                    bound = stop_hi
                else:
                    lam = (stop_lo - z) / (z_new - z)
                    bound = stop_lo
                if lam < 0.0:
                    lam = 0.0
                elif lam > 1.0:
                    lam = 1.0
                out_tau[p] = (s - 1 + lam) * dt
                out_logx[p] = logx + lam * dlx
                out_zstop[p] = bound
                out_stopped[p] = True
                stopped = True
                break
            z = z_new
            logx += dlx
        out_steps[p] = s
        if not stopped:
            out_tau[p] = n_steps * dt
            out_logx[p] = logx
            out_zstop[p] = z
            out_stopped[p] = False


@njit(cache=True)
def _snapshot_kernel(seed, n_paths, logx0, z0, dt, ckpt_steps, mu, sigma,
                     kappa, gen_mode, switch_z, out_logx, out_z):
    sq_dt = math.sqrt(dt)
    n_ck = ckpt_steps.shape[0]
    last = ckpt_steps[n_ck - 1]
    for p in range(n_paths):
        logx = logx0
        z = z0
        n0 = n1 = n2 = n3 = 0.0
        k = 0
        if n_ck > 0 and ckpt_steps[0] == 0:
            out_logx[0, p] = logx
            out_z[0, p] = z
            k = 1
        for s in range(last):
            lane = s & 3
            if lane == 0:
                n0, n1, n2, n3 = normals4(np.uint64(seed), np.uint64(p),
                                          np.uint64(s >> 2))
            if lane == 0:
                xi = n0
            elif lane == 1:
                xi = n1
            elif lane == 2:
                xi = n2
            else:
                xi = n3
            if gen_mode == 0:
                theta = kappa if switch_z - z >= 0.0 else -kappa
            elif gen_mode == 1:
                theta = kappa
            else:
                theta = -kappa
            dw = sq_dt * xi
            z = z + (1.0 - (mu - sigma * sigma - sigma * theta) * z) * dt \
                - sigma * z * dw
            logx += (mu - sigma * theta - 0.5 * sigma * sigma) * dt + sigma * dw
            while k < n_ck and s + 1 == ckpt_steps[k]:
                out_logx[k, p] = logx
                out_z[k, p] = z
                k += 1


# ---------------------------------------------------------------------------
# numpy engine (same per-(path, step) streams, vectorized across paths)
# ---------------------------------------------------------------------------

def _theta_of(gen_mode, kappa, switch_z, z, theta_fn):
    if theta_fn is not None:
        return np.asarray(theta_fn(z), dtype=np.float64)
    if gen_mode == GEN_WORST:
        return np.where(switch_z - z >= 0.0, kappa, -kappa)
    if gen_mode == GEN_PLUS:
        return np.full_like(z, kappa)
    return np.full_like(z, -kappa)


def _stop_numpy(seed, n_paths, logx0, z0, dt, n_steps, mu, sigma, kappa,
                gen_mode, switch_z, stop_lo, stop_hi, theta_fn=None):
    idx = np.arange(n_paths, dtype=np.uint64)
    logx = np.full(n_paths, logx0)
    z = np.full(n_paths, z0)
    out_tau = np.full(n_paths, n_steps * dt)
    out_logx = np.empty(n_paths)
    out_zstop = np.empty(n_paths)
    out_stopped = np.zeros(n_paths, dtype=bool)
    out_steps = np.zeros(n_paths, dtype=np.int64)
    out_big = np.zeros(n_paths, dtype=np.int64)
    sq_dt = math.sqrt(dt)
    block = None
    for s in range(n_steps):
        if idx.size == 0:
            break
        lane = s & 3
        if lane == 0:
            block = normals4_np(seed, idx, s >> 2)
        xi = block[:, lane]
        theta = _theta_of(gen_mode, kappa, switch_z, z, theta_fn)
        drift = 1.0 - (mu - sigma * sigma - sigma * theta) * z
        big = np.abs(drift) * dt > 0.5 * np.maximum(np.abs(z), 20.0 * dt)
        if big.any():
            np.add.at(out_big, idx[big].astype(np.int64), 1)
        dw = sq_dt * xi
        z_new = z + drift * dt - sigma * z * dw
        dlx = (mu - sigma * theta - 0.5 * sigma * sigma) * dt + sigma * dw
        hit_hi = (z_new >= stop_hi) if stop_hi > 0.0 else np.zeros_like(z, dtype=bool)
        hit_lo = (z_new <= stop_lo) if stop_lo >= 0.0 else np.zeros_like(z, dtype=bool)
        hit = hit_hi | hit_lo
        if hit.any():
            zi, zn = z[hit], z_new[hit]
            lam_hi = np.where(hit_hi[hit], (stop_hi - zi) / (zn - zi), np.inf)
            lam_lo = np.where(hit_lo[hit], (stop_lo - zi) / (zn - zi), np.inf)
            use_hi = lam_hi <= lam_lo
            lam = np.clip(np.where(use_hi, lam_hi, lam_lo), 0.0, 1.0)
            bound = np.where(use_hi, stop_hi, stop_lo)
            ix = idx[hit].astype(np.int64)
            out_tau[ix] = (s + lam) * dt
            out_logx[ix] = logx[hit] + lam * dlx[hit]
            out_zstop[ix] = bound
            out_stopped[ix] = True
            out_steps[ix] = s + 1
            keep = ~hit
            idx, logx, z = idx[keep], logx[keep], z[keep]
            z_new, dlx = z_new[keep], dlx[keep]
            block = block[keep]
        z = z_new
        logx = logx + dlx
    alive = idx.astype(np.int64)
    out_logx[alive] = logx
    out_zstop[alive] = z
    out_steps[alive] = n_steps
    return out_tau, out_logx, out_zstop, out_stopped, out_steps, out_big


def _snapshot_numpy(seed, n_paths, logx0, z0, dt, ckpt_steps, mu, sigma,
                    kappa, gen_mode, switch_z, theta_fn=None):
    idx = np.arange(n_paths, dtype=np.uint64)
    logx = np.full(n_paths, logx0)
    z = np.full(n_paths, z0)
    n_ck = len(ckpt_steps)
    out_logx = np.empty((n_ck, n_paths))
    out_z = np.empty((n_ck, n_paths))
    k = 0
    if n_ck > 0 and ckpt_steps[0] == 0:
        out_logx[0] = logx
        out_z[0] = z
        k = 1
    sq_dt = math.sqrt(dt)
    block = None
    for s in range(int(ckpt_steps[-1])):
        lane = s & 3
        if lane == 0:
            block = normals4_np(seed, idx, s >> 2)
        xi = block[:, lane]
        theta = _theta_of(gen_mode, kappa, switch_z, z, theta_fn)
        dw = sq_dt * xi
        z = z + (1.0 - (mu - sigma * sigma - sigma * theta) * z) * dt \
            - sigma * z * dw
        logx = logx + (mu - sigma * theta - 0.5 * sigma * sigma) * dt + sigma * dw
        while k < n_ck and s + 1 == ckpt_steps[k]:
            out_logx[k] = logx
            out_z[k] = z
            k += 1
    return out_logx, out_z


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def run_stopping(seed, n_paths, logx0, z0, dt, n_steps, mu, sigma, kappa,
                 gen_mode, switch_z, stop_lo, stop_hi, theta_fn=None,
                 backend=None):
    """Simulate until Z exits (stop_lo, stop_hi) or n_steps elapse.

    Returns (tau, logx, z_stop, stopped, steps, big_step_count) arrays.
    """
    if theta_fn is not None:
        backend = "numpy"  # arbitrary callables only run vectorized
    chosen = pick(backend)
    if chosen == "numpy":
        return _stop_numpy(seed, n_paths, logx0, z0, dt, n_steps, mu, sigma,
                           kappa, gen_mode, switch_z, stop_lo, stop_hi, theta_fn)
    out_tau = np.empty(n_paths)
    out_logx = np.empty(n_paths)
    out_zstop = np.empty(n_paths)
    out_stopped = np.zeros(n_paths, dtype=np.bool_)
    out_steps = np.zeros(n_paths, dtype=np.int64)
    out_big = np.zeros(n_paths, dtype=np.int64)
    _stop_kernel(np.uint64(seed), n_paths, logx0, z0, dt, n_steps, mu, sigma,
                 kappa, gen_mode, switch_z, stop_lo, stop_hi,
                 out_tau, out_logx, out_zstop, out_stopped, out_steps, out_big)
    return out_tau, out_logx, out_zstop, out_stopped, out_steps, out_big


def run_snapshots(seed, n_paths, logx0, z0, dt, ckpt_steps, mu, sigma, kappa,
                  gen_mode, switch_z, theta_fn=None, backend=None):
    """Free-running simulation; returns (logX, Z) at the checkpoint steps,
    each of shape (n_checkpoints, n_paths)."""
    ckpt_steps = np.asarray(ckpt_steps, dtype=np.int64)
    if theta_fn is not None:
        backend = "numpy"
    chosen = pick(backend)
    if chosen == "numpy":
        return _snapshot_numpy(seed, n_paths, logx0, z0, dt, ckpt_steps, mu,
                               sigma, kappa, gen_mode, switch_z, theta_fn)
    out_logx = np.empty((len(ckpt_steps), n_paths))
    out_z = np.empty((len(ckpt_steps), n_paths))
    _snapshot_kernel(np.uint64(seed), n_paths, logx0, z0, dt, ckpt_steps, mu,
                     sigma, kappa, gen_mode, switch_z, out_logx, out_z)
    return out_logx, out_z
