"""Small root-finding and line-search helpers used by the solvers.

Everything here works on scalar callables and is deterministic.
"""

from __future__ import annotations

import math
from typing import Callable

from .errors import BracketError, ConvergenceError

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def newton_bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    df: Callable[[float], float] | None = None,
    x0: float | None = None,
    f_lo: float | None = None,
    f_hi: float | None = None,
    abs_residual: float = 0.0,
    max_iter: int = 200,
) -> float:
    """Find the root of ``f`` in ``[lo, hi]`` by Newton steps safeguarded by bisection.

    ``f(lo)`` and ``f(hi)`` must have opposite signs.  When ``df`` is given,
    Newton steps are attempted and fall back to bisection whenever they leave
    the current bracket; otherwise a secant/bisection hybrid is used.  Stops
    when the residual drops below ``abs_residual`` or the bracket collapses to
    machine width.
    """
    a, b = float(lo), float(hi)
    fa = f(a) if f_lo is None else f_lo
    fb = f(b) if f_hi is None else f_hi
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise BracketError(f"no sign change on [{lo}, {hi}] (f={fa}, {fb})")
    x = 0.5 * (a + b) if x0 is None else min(max(x0, a), b)
    fx = f(x)
    xp, fp = a, fa  # previous point, for secant steps
    for _ in range(max_iter):
        if fx == 0.0 or abs(fx) <= abs_residual:
            return x
        if fa * fx < 0.0:
            b, fb = x, fx
        else:
            a, fa = x, fx
        if b - a <= 4.0 * math.ulp(max(abs(a), abs(b))):
            return a if abs(fa) < abs(fb) else b
        step_ok = False
        if df is not None:
            d = df(x)
            if d != 0.0 and math.isfinite(d):
                xn = x - fx / d
                step_ok = a < xn < b
        if not step_ok and fp != fx:
            xn = x - fx * (x - xp) / (fx - fp)
            step_ok = a < xn < b
        if not step_ok:
            xn = 0.5 * (a + b)
        xp, fp = x, fx
        x = xn
        fx = f(x)
    return x


def expand_bracket_down(
    f: Callable[[float], float],
    start: float,
    sign: float = 1.0,
    factor: float = 2.0,
    limit: float = -1e12,
) -> tuple[float, float]:
    """Walk ``start`` toward ``-inf`` until ``sign * f`` turns positive.

    Returns ``(lo, f(lo))``.  Intended for monotone tails where the sign
    change is guaranteed.
    """
    lo = float(start)
    for _ in range(200):
        val = f(lo)
        if sign * val > 0.0:
            return lo, val
        lo *= factor
        if lo < limit:
            break
    raise BracketError(f"could not bracket below {start}")


def golden_section_max(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    rel_tol: float = 1e-8,
    max_iter: int = 200,
) -> tuple[float, float]:
    """Golden-section maximization of a unimodal ``f`` on ``[lo, hi]``.

    Returns ``(argmax, max)``.  On non-unimodal input it still returns a
    local maximizer, which callers guard with value comparisons.
    """
    a, b = float(lo), float(hi)
    span = b - a
    c = b - _GOLDEN * span
    d = a + _GOLDEN * span
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if (b - a) <= rel_tol * max(1.0, abs(a), abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    if fc >= fd:
        return c, fc
    return d, fd


def require_converged(ok: bool, message: str) -> None:
    if not ok:
        raise ConvergenceError(message)
