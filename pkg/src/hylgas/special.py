"""Polylogarithm family, Riemann zeta, the W_-1 Lambert branch, and the
Brownian-bridge return weight.

Evaluation strategy for ``Li_s(z)`` on ``z in [0, 1]``:

* ``z <= 0.99``: direct series with a geometric tail bound, summed exactly
  with ``math.fsum``.
* ``z in (0.99, 1)``: expansion of ``Li_s(e^delta)`` around ``delta = ln z``:
  ``Gamma(1-s)(-delta)^(s-1) + sum_k zeta(s-k) delta^k / k!`` for non-integer
  ``s``, and the variant with the ``ln(-delta)`` term for integer ``s``.  The
  direct series converges too slowly there, and downstream code needs the
  cancellation-free difference ``Li_s(e^delta) - zeta(s)`` (same expansion
  with the ``k=0`` term dropped), exposed as :func:`polylog_minus_zeta`.

Zeta values (including the analytic continuation to ``s < 1`` needed for the
expansion coefficients) come from Borwein's alternating-series algorithm plus
the functional equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DomainError

__all__ = [
    "PrecisionPolicy",
    "DEFAULT_POLICY",
    "polylog",
    "polylog_minus_zeta",
    "zeta",
    "lambert_w_m1",
    "bridge_return_weight",
]

_SERIES_Z_MAX = 0.99
_BRANCH_POINT = -1.0 / math.e


@dataclass(frozen=True)
class PrecisionPolicy:
    """Relative tolerance and series cap for the numeric kernel."""

    rel_tol: float = 1e-12
    max_terms: int = 10_000_000

    def __post_init__(self) -> None:
        if not 0.0 < self.rel_tol <= 1e-6:
            raise DomainError(f"rel_tol must be in (0, 1e-6], got {self.rel_tol}")
        if self.max_terms < 1000:
            raise DomainError(f"max_terms must be >= 1000, got {self.max_terms}")


DEFAULT_POLICY = PrecisionPolicy()


@lru_cache(maxsize=8)
def _borwein_coeffs(n: int) -> tuple[float, ...]:
    # d_k = n * sum_{i<=k} (n+i-1)! 4^i / ((n-i)! (2i)!), computed in exact
    # integer arithmetic before conversion to float.
    d = []
    acc = 0
    for i in range(n + 1):
        acc += math.factorial(n + i - 1) * 4**i // (math.factorial(n - i) * math.factorial(2 * i))
        d.append(n * acc)
    return tuple(float(v) for v in d)


def _eta(s: float, n: int = 48) -> float:
    # Borwein's algorithm for the Dirichlet eta function, s > 0.
    d = _borwein_coeffs(n)
    dn = d[n]
    total = 0.0
    sign = 1.0
    for k in range(n):
        total += sign * (d[k] - dn) / (k + 1) ** s
        sign = -sign
    return -total / dn


def _zeta_any(s: float) -> float:
    """Riemann zeta on the real line (s != 1), via eta and reflection."""
    if s == 1.0:
        raise DomainError("zeta has a pole at s=1")
    if s > 0.0:
        return _eta(s) / (1.0 - 2.0 ** (1.0 - s))
    if s == 0.0:
        return -0.5
    # functional equation; 1-s > 1 so the eta route applies on the right
    return 2.0**s * math.pi ** (s - 1.0) * math.sin(0.5 * math.pi * s) * math.gamma(1.0 - s) * _zeta_any(1.0 - s)


def zeta(s: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """Riemann zeta for ``s > 1``."""
    if s <= 1.0:
        raise DomainError(f"zeta(s) requires s > 1, got s={s}")
    return _zeta_any(s)


def _series_sum(s: float, z: float, policy: PrecisionPolicy) -> float:
    # extended-precision accumulation keeps the summation error ~n*2^-64
    total = np.longdouble(0.0)
    j0 = 1
    chunk = 128
    log_z = math.log(z)
    while True:
        j = np.arange(j0, j0 + chunk, dtype=float)
        t = np.exp(j * log_z - s * np.log(j)).astype(np.longdouble)
        total += t.sum()
        j_next = j0 + chunk
        tail_bound = math.exp(j_next * log_z) / (j_next**s * (1.0 - z))
        if tail_bound <= 0.25 * policy.rel_tol * float(total):
            break
        j0 = j_next
        chunk = min(2 * chunk, 1 << 20)
        if j0 > policy.max_terms:
            raise ConvergenceError(f"polylog series needs more than {policy.max_terms} terms")
    return float(total)


def _is_integer_order(s: float) -> bool:
    return abs(s - round(s)) < 1e-9


def _expansion_terms(s: float, delta: float, policy: PrecisionPolicy, skip_k0: bool):
    """Terms of the Robinson expansion of Li_s(e^delta) for small -delta."""
    if delta >= 0.0:
        raise DomainError("expansion requires delta < 0")
    terms = []
    if _is_integer_order(s):
        n = round(s)
        harmonic = sum(1.0 / i for i in range(1, n))
        terms.append(delta ** (n - 1) / math.factorial(n - 1) * (harmonic - math.log(-delta)))
        k_skip = n - 1
    else:
        terms.append(math.gamma(1.0 - s) * (-delta) ** (s - 1.0))
        k_skip = None
    k0 = 1 if skip_k0 else 0
    fact = math.factorial(k0)
    powd = delta**k0
    scale = max(abs(t) for t in terms)
    small = 0
    for k in range(k0, 300):
        if k != k_skip:
            term = _zeta_any(s - k) * powd / fact
            terms.append(term)
            scale = max(scale, abs(term))
            if abs(term) <= 0.25 * policy.rel_tol * scale:
                small += 1
                if small >= 2:
                    break
            else:
                small = 0
        powd *= delta
        fact *= k + 1
    return terms


def polylog(s: float, z: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """``Li_s(z) = sum_{j>=1} z^j / j^s`` for real order ``s > 0``, ``z in [0, 1]``.

    Raises :class:`DomainError` for ``z`` outside ``[0, 1]`` and for the
    divergent endpoint ``z = 1`` with ``s <= 1``.
    """
    if not s > 0.0:
        raise DomainError(f"polylog order must be > 0, got s={s}")
    if z < 0.0 or z > 1.0:
        raise DomainError(f"polylog argument must be in [0, 1], got z={z}")
    if z == 0.0:
        return 0.0
    if z == 1.0:
        if s <= 1.0:
            raise DomainError(f"polylog(s, 1) diverges for s <= 1 (s={s})")
        return _zeta_any(s)
    if z <= _SERIES_Z_MAX:
        return _series_sum(s, z, policy)
    if abs(s - 1.0) < 1e-9:
        return -math.log1p(-z)
    return math.fsum(_expansion_terms(s, math.log(z), policy, skip_k0=False))


def polylog_minus_zeta(s: float, delta: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """``Li_s(e^delta) - zeta(s)`` for ``s > 1`` and ``delta <= 0``, cancellation-free.

    For small ``-delta`` the k=0 expansion term (which is exactly ``zeta(s)``)
    is dropped analytically, so the result keeps full relative accuracy even
    when it is many orders of magnitude below ``zeta(s)``.
    """
    if s <= 1.0:
        raise DomainError(f"polylog_minus_zeta requires s > 1, got s={s}")
    if delta > 0.0:
        raise DomainError(f"polylog_minus_zeta requires delta <= 0, got {delta}")
    if delta == 0.0:
        return 0.0
    if delta >= math.log(_SERIES_Z_MAX):
        return math.fsum(_expansion_terms(s, delta, policy, skip_k0=True))
    return _series_sum(s, math.exp(delta), policy) - _zeta_any(s)


def lambert_w_m1(x: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """The ``-1`` branch of Lambert W on ``[-1/e, 0)``.

    Returns ``y <= -1`` with ``y e^y = x`` to residual ``rel_tol * |x|``,
    by bracketed bisection refined with Newton steps from the initial guess
    ``ln(-x) - ln(-ln(-x))``; a branch-point series takes over where the
    Newton derivative degenerates.
    """
    if x >= 0.0:
        raise DomainError(f"lambert_w_m1 requires x < 0, got x={x}")
    if x < _BRANCH_POINT:
        if x >= _BRANCH_POINT * (1.0 + 1e-14):
            x = _BRANCH_POINT
        else:
            raise DomainError(f"lambert_w_m1 requires x >= -1/e, got x={x}")
    if x == _BRANCH_POINT:
        return -1.0
    t = 2.0 * (1.0 + math.e * x)
    if 0.0 <= t < 1e-12:
        p = math.sqrt(t)
        return -1.0 - p - p * p / 3.0 - 11.0 * p**3 / 72.0

    def f(y: float) -> float:
        return y * math.exp(y) - x

    def df(y: float) -> float:
        return (1.0 + y) * math.exp(y)

    log_mx = math.log(-x)
    y0 = log_mx - math.log(-log_mx) if log_mx < -1.0 else -1.5
    hi = -1.0
    lo = min(y0 - 2.0, -2.0)
    f_lo = f(lo)
    while f_lo <= 0.0:
        lo *= 2.0
        if lo < -1e6:
            raise ConvergenceError("lambert_w_m1 bracket expansion failed")
        f_lo = f(lo)
    from .numerics import newton_bisect

    return newton_bisect(
        f, lo, hi, df=df, x0=y0, f_lo=f_lo, f_hi=f(hi),
        abs_residual=0.25 * policy.rel_tol * abs(x),
    )


def bridge_return_weight(d: int, beta: float, j: int) -> float:
    """On-diagonal heat-kernel weight ``(2 pi)^(-d/2) (beta j)^(-d/2)``."""
    if int(d) != d or d < 3:
        raise DomainError(f"dimension must be an integer >= 3, got {d}")
    if beta <= 0.0:
        raise DomainError(f"beta must be > 0, got {beta}")
    if int(j) != j or j < 1:
        raise DomainError(f"loop length must be an integer >= 1, got {j}")
    return (2.0 * math.pi) ** (-0.5 * d) * (beta * j) ** (-0.5 * d)
