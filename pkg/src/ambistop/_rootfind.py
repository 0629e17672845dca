"""Bracket-then-bisect root finding for the monotone equations this
package produces.

Bisection guarantees the bracket; a single secant step at the end buys
back most of the accuracy a dedicated Brent solver would give, which is
all the smooth monotone targets here need.
"""

from __future__ import annotations

import math
from typing import Callable, Tuple

from .errors import BracketFailure, NoSignChange


def expand_bracket(
    f: Callable[[float], float],
    lo: float,
    f_lo: float | None = None,
    factor: float = 1.8,
    hi_cap: float = math.inf,
    max_steps: int = 400,
) -> Tuple[float, float, float, float]:
    """Geometric expansion upward from ``lo`` until f changes sign.

    Returns (a, b, fa, fb) with fa*fb <= 0.  Raises
    :class:`BracketFailure` reporting the scanned range otherwise.
    """
    fa = f(lo) if f_lo is None else f_lo
    if fa == 0.0:
        return lo, lo, fa, fa
    a = lo
    b = lo * factor if lo > 0.0 else 1e-8
    for _ in range(max_steps):
        if b > hi_cap:
            break
        fb = f(b)
        if fa * fb <= 0.0:
            return a, b, fa, fb
        a, fa = b, fb
        b *= factor
    raise BracketFailure(
        f"no sign change on [{lo:g}, {min(b, hi_cap):g}] (f({lo:g}) = {f_lo if f_lo is not None else fa:g})"
    )


def bisect(
    f: Callable[[float], float],
    a: float,
    b: float,
    fa: float,
    fb: float,
    rel_width: float = 1e-12,
    max_iter: int = 200,
    secant_polish: bool = True,
) -> float:
    """Bisect a bracketing interval down to width rel_width * max(1, |x|),
    then take one secant step (kept only if it stays inside the bracket)."""
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise BracketFailure(f"not a bracket: f({a:g})={fa:g}, f({b:g})={fb:g}")
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        if (b - a) <= rel_width * max(1.0, abs(mid)):
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if fa * fm < 0.0:
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    if secant_polish and fb != fa:
        x = b - fb * (b - a) / (fb - fa)
        if a <= x <= b:
            return x
    return 0.5 * (a + b)


def scan_bracket(
    f: Callable[[float], float],
    grid,
) -> Tuple[float, float, float, float]:
    """Find the first sign change of f along an explicit grid.

    Used where no monotonicity is available (e.g. the floor-option
    reference-point search).  Raises :class:`NoSignChange` with the scanned
    range and endpoint values otherwise.
    """
    xs = list(grid)
    f0 = f(xs[0])
    for x0, x1 in zip(xs, xs[1:]):
        f1 = f(x1)
        if f0 == 0.0:
            return x0, x0, f0, f0
        if f0 * f1 <= 0.0:
            return x0, x1, f0, f1
        f0 = f1
    raise NoSignChange(
        f"no sign change on scan [{xs[0]:g}, {xs[-1]:g}]: f ends at {f0:g}"
    )
