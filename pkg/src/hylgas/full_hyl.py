"""Full-cycle HYL rate function (no short-loop cut-off) and the pressure-gap
witness showing it differs from the partial model.

The rate function acts on cycle-density vectors x = (x_1, ..., x_jmax):

    raw(x) = sum_j x_j (ln(j x_j / p_j) - 1) - mu beta D + (a beta/2) D^2
             - (b beta/2) sum_j j^2 x_j^2 - beta/(2(a-b)) (mu - a D)_+^2,

with D = sum_j j x_j and p_j the bridge return weight.  The additive
constants of the published form only shift the minimum; here p_tilde is fixed
self-consistently so that min I = 0, which is all the (shift-invariant) gap
computation needs.

Stationary points satisfy ln(j x_j / p_j) + gamma(D) j = b beta j^2 x_j with
the scalar gamma(D) = beta(aD - mu) + a beta (mu - aD)_+ / (a - b), so for
fixed D every coordinate solves x = c e^{alpha x} (small root).  The solver
scans D for consistency roots of F(D) = sum_j j x_j(D) - D, which enumerates
all stationary points; a projected-gradient certificate is attached to the
winner.  A generic projected-gradient path handles arbitrary smooth addons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BracketError, ConvergenceError, DomainError
from . import thermo
from .thermo import ModelParams
from .condensate import HYLParams

__all__ = [
    "CycleDensityVector",
    "FullRateMinimum",
    "full_rate",
    "full_rate_grad",
    "minimize_full_rate",
    "pressure_gap",
]

_GRAD_TOL = 1e-8


@dataclass(frozen=True)
class CycleDensityVector:
    """Densities of loops of each length, x[k] for length j = k+1."""

    x: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.x, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise DomainError("cycle-density vector must be a nonempty 1-D array")
        if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
            raise DomainError("cycle densities must be finite and >= 0")
        object.__setattr__(self, "x", arr)

    @property
    def jmax(self) -> int:
        return self.x.size

    def total_density(self) -> float:
        j = np.arange(1, self.x.size + 1, dtype=float)
        return float(j @ self.x)


@dataclass(frozen=True)
class FullRateMinimum:
    x_star: CycleDensityVector
    value: float
    grad_norm: float
    p_tilde: float


def _weights(params: ModelParams, jmax: int) -> np.ndarray:
    j = np.arange(1, jmax + 1, dtype=float)
    return (2.0 * math.pi) ** (-0.5 * params.d) * (params.beta * j) ** (-0.5 * params.d)


def _gamma(params: ModelParams, hyl: HYLParams, mu: float, D: float) -> float:
    beta = params.beta
    return beta * (hyl.a * D - mu) + hyl.a * beta * max(mu - hyl.a * D, 0.0) / (hyl.a - hyl.b)


def _raw_rate(params: ModelParams, hyl: HYLParams, mu: float, x: np.ndarray) -> float:
    beta = params.beta
    jmax = x.size
    j = np.arange(1, jmax + 1, dtype=float)
    p = _weights(params, jmax)
    D = float(j @ x)
    if not math.isfinite(D):
        return math.inf
    pos = x > 0.0
    entropy = float(np.sum(x[pos] * (np.log(j[pos] * x[pos] / p[pos]) - 1.0)))
    quad = -0.5 * hyl.b * beta * float(np.sum(j**2 * x**2))
    kink = -0.5 * beta / (hyl.a - hyl.b) * max(mu - hyl.a * D, 0.0) ** 2
    return entropy - mu * beta * D + 0.5 * hyl.a * beta * D * D + quad + kink


def full_rate(params: ModelParams, hyl: HYLParams, mu: float,
              x: CycleDensityVector | np.ndarray, p_tilde: float) -> float:
    """Rate-function value ``raw(x) - P(beta, 0) + p_tilde`` (extended real)."""
    hyl.require_grand_canonical()
    arr = x.x if isinstance(x, CycleDensityVector) else np.asarray(x, dtype=float)
    return _raw_rate(params, hyl, mu, arr) - thermo.pressure(params, 0.0) + p_tilde


def full_rate_grad(params: ModelParams, hyl: HYLParams, mu: float,
                   x: CycleDensityVector | np.ndarray) -> np.ndarray:
    """Analytic gradient; entries at x_j = 0 are -inf (the entropy pulls in)."""
    hyl.require_grand_canonical()
    arr = x.x if isinstance(x, CycleDensityVector) else np.asarray(x, dtype=float)
    beta = params.beta
    jmax = arr.size
    j = np.arange(1, jmax + 1, dtype=float)
    p = _weights(params, jmax)
    D = float(j @ arr)
    gam = _gamma(params, hyl, mu, D)
    with np.errstate(divide="ignore"):
        logterm = np.where(arr > 0.0, np.log(np.maximum(j * arr, 1e-320) / p), -np.inf)
    return logterm + gam * j - hyl.b * beta * j**2 * arr


def _coordinate_roots(c: np.ndarray, alpha: np.ndarray) -> np.ndarray | None:
    """Small roots of x = c e^{alpha x} per coordinate; None when a root is missing."""
    x = c.copy()
    active = c > 0.0
    if np.any(math.e * alpha[active] * c[active] > 1.0 - 1e-12):
        return None
    with np.errstate(over="ignore", divide="ignore"):
        for _ in range(60):
            xa = x[active]
            g = np.log(xa / c[active]) - alpha[active] * xa
            gp = 1.0 / xa - alpha[active]
            step = g / gp
            xa_new = xa - step
            bad = ~np.isfinite(xa_new) | (xa_new <= 0.0)
            xa_new[bad] = xa[bad] * 0.5
            x[active] = xa_new
            if np.max(np.abs(step / np.maximum(xa_new, 1e-300))) < 1e-14:
                break
    return x


def _solve_given_density(params: ModelParams, hyl: HYLParams, mu: float, jmax: int,
                         D: float, x1_addon: bool) -> np.ndarray | None:
    beta = params.beta
    j = np.arange(1, jmax + 1, dtype=float)
    p = _weights(params, jmax)
    gam = _gamma(params, hyl, mu, D)
    with np.errstate(under="ignore"):
        c = p / j * np.exp(-gam * j)
    alpha = hyl.b * beta * j**2
    if x1_addon:
        alpha = alpha.copy()
        alpha[0] = 0.0  # the (b beta/2) x_1^2 addon cancels the j=1 counter-term
    return _coordinate_roots(c, alpha)


def _density_mismatch(params: ModelParams, hyl: HYLParams, mu: float, jmax: int,
                      D: float, x1_addon: bool) -> float:
    x = _solve_given_density(params, hyl, mu, jmax, D, x1_addon)
    if x is None:
        return math.nan
    j = np.arange(1, jmax + 1, dtype=float)
    return float(j @ x) - D


def _stationary_points(params: ModelParams, hyl: HYLParams, mu: float, jmax: int,
                       x1_addon: bool) -> list[np.ndarray]:
    """All solutions of F(D) = 0 found by sign-scan plus bisection."""
    f = lambda D: _density_mismatch(params, hyl, mu, jmax, D, x1_addon)
    d_hi = max(1.0, 2.0 * max(mu, 0.0) / hyl.a + 1.0)
    while f(d_hi) > 0.0:
        d_hi *= 2.0
        if d_hi > 1e9:
            raise BracketError("full-rate density scan found no upper bracket")
    grid = np.linspace(0.0, d_hi, 240)
    vals = np.array([f(float(D)) for D in grid])
    roots: list[float] = []
    for k in range(len(grid) - 1):
        a_val, b_val = vals[k], vals[k + 1]
        if math.isnan(a_val) or math.isnan(b_val):
            continue
        if a_val == 0.0:
            roots.append(float(grid[k]))
        if a_val * b_val < 0.0:
            lo, hi = float(grid[k]), float(grid[k + 1])
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                v = f(mid)
                if math.isnan(v):
                    break
                if v * a_val > 0.0:
                    lo = mid
                else:
                    hi = mid
            roots.append(0.5 * (lo + hi))
    out = []
    for D in roots:
        x = _solve_given_density(params, hyl, mu, jmax, D, x1_addon)
        if x is not None:
            out.append(x)
    return out


def _objective(params: ModelParams, hyl: HYLParams, mu: float, x: np.ndarray,
               addon: Callable[[np.ndarray], float] | None) -> float:
    v = _raw_rate(params, hyl, mu, x)
    if addon is not None:
        v += addon(x)
    return v


def _grad_with_addon(params, hyl, mu, x, addon_grad) -> np.ndarray:
    g = full_rate_grad(params, hyl, mu, x)
    if addon_grad is not None:
        g = g + addon_grad(x)
    return g


def _fd_gradient(fn: Callable[[np.ndarray], float], x: np.ndarray) -> np.ndarray:
    g = np.zeros_like(x)
    for k in range(x.size):
        h = 1e-7 * max(abs(x[k]), 1e-7)
        xp = x.copy(); xp[k] += h
        xm = x.copy(); xm[k] = max(xm[k] - h, 0.0)
        g[k] = (fn(xp) - fn(xm)) / (xp[k] - xm[k])
    return g


def _certificate(params, hyl, mu, x, addon_grad) -> float:
    g = _grad_with_addon(params, hyl, mu, x, addon_grad)
    proj = np.where(x > 1e-250, g, np.minimum(g, 0.0))
    return float(np.max(np.abs(np.where(np.isfinite(proj), proj, 0.0))))


def _projected_gradient(params: ModelParams, hyl: HYLParams, mu: float, x0: np.ndarray,
                        addon, addon_grad, max_iter: int = 500) -> tuple[np.ndarray, float]:
    """L-BFGS-B inner solve plus a scaled projected-gradient polish."""
    from scipy.optimize import minimize as sp_minimize

    beta = params.beta
    jmax = x0.size
    j = np.arange(1, jmax + 1, dtype=float)

    def fun(x):
        return _objective(params, hyl, mu, x, addon)

    def jac(x):
        return _grad_with_addon(params, hyl, mu, x, addon_grad)

    res = sp_minimize(fun, np.maximum(x0, 1e-300), jac=jac, method="L-BFGS-B",
                      bounds=[(1e-300, None)] * jmax,
                      options={"maxiter": 4000, "ftol": 1e-18, "gtol": 1e-12})
    x = np.asarray(res.x)
    gnorm = _certificate(params, hyl, mu, x, addon_grad)
    if gnorm <= _GRAD_TOL:
        return x, gnorm
    # coordinate optima span hundreds of orders of magnitude, which additive
    # steps cannot traverse; Gauss-Seidel sweeps with exact scalar solves do
    for _ in range(40):
        x = _coordinate_sweep(params, hyl, mu, x, addon_grad)
        gnorm = _certificate(params, hyl, mu, x, addon_grad)
        if gnorm <= _GRAD_TOL:
            return x, gnorm
    return x, _certificate(params, hyl, mu, x, addon_grad)


def _coordinate_sweep(params: ModelParams, hyl: HYLParams, mu: float,
                      x: np.ndarray, addon_grad) -> np.ndarray:
    """One pass of exact single-coordinate stationarity solves."""
    jmax = x.size
    x = x.copy()
    for k in range(jmax):
        jk = float(k + 1)

        def g_k(v: float) -> float:
            x[k] = v
            return float(_grad_with_addon(params, hyl, mu, x, addon_grad)[k])

        old = x[k]
        lo = 1e-300
        g_lo = g_k(lo)
        if g_lo >= 0.0:  # optimum pinned at the boundary
            x[k] = 0.0
            continue
        hi = max(old, 1e-12)
        g_hi = g_k(hi)
        tries = 0
        while g_hi < 0.0:
            hi *= 10.0
            g_hi = g_k(hi)
            tries += 1
            if tries > 400:
                x[k] = old
                break
        else:
            for _ in range(200):
                mid = math.sqrt(lo * hi)  # geometric bisection across scales
                if g_k(mid) < 0.0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= 1e-14 * hi:
                    break
            x[k] = 0.5 * (lo + hi)
    return x


def _minimize_raw(params: ModelParams, hyl: HYLParams, mu: float, jmax: int,
                  fast_addon: str) -> tuple[np.ndarray, float, float]:
    """Minimize raw (+ fast addon); returns (x, value, grad_norm)."""
    x1_addon = fast_addon == "x1sq"
    addon = (lambda x: 0.5 * hyl.b * params.beta * x[0] ** 2) if x1_addon else None
    addon_grad = None
    if x1_addon:
        def addon_grad(x):
            g = np.zeros_like(x)
            g[0] = hyl.b * params.beta * x[0]
            return g

    candidates = _stationary_points(params, hyl, mu, jmax, x1_addon)
    if not candidates:
        raise ConvergenceError("no stationary point found by the density scan")
    best = min(candidates, key=lambda x: _objective(params, hyl, mu, x, addon))
    g = _grad_with_addon(params, hyl, mu, best, addon_grad)
    proj = np.where(best > 0.0, g, np.minimum(g, 0.0))
    gnorm = float(np.max(np.abs(np.where(np.isfinite(proj), proj, 0.0))))
    if gnorm > _GRAD_TOL:
        best, gnorm = _projected_gradient(params, hyl, mu, best, addon, addon_grad)
        if gnorm > _GRAD_TOL:
            raise ConvergenceError(f"gradient certificate {gnorm:.3e} above {_GRAD_TOL}")
    return best, _objective(params, hyl, mu, best, addon), gnorm


def minimize_full_rate(
    params: ModelParams,
    hyl: HYLParams,
    mu: float,
    jmax: int,
    objective_addon: Callable[[np.ndarray], float] | None = None,
    addon_grad: Callable[[np.ndarray], np.ndarray] | None = None,
) -> FullRateMinimum:
    """Best stationary point of I (+ optional addon) with a gradient certificate.

    ``p_tilde`` is fixed so that ``min I = 0``; the reported ``value`` is
    therefore ``min(I + addon)`` in that normalization.  Addon-free and the
    built-in x1^2 case are solved by the exact density-consistency scan;
    arbitrary smooth addons run projected gradient from the addon-free
    minimizer (finite-difference addon gradients when none is supplied).
    """
    hyl.require_grand_canonical()
    if jmax < 50:
        raise DomainError(f"jmax must be >= 50, got {jmax}")
    x0, m0, g0 = _minimize_raw(params, hyl, mu, jmax, "none")
    p_tilde = thermo.pressure(params, 0.0) - m0
    if objective_addon is None:
        return FullRateMinimum(CycleDensityVector(x0), 0.0, g0, p_tilde)
    ag = addon_grad
    if ag is None:
        ag = lambda x: _fd_gradient(objective_addon, x)
    x1, gnorm = _projected_gradient(params, hyl, mu, x0, objective_addon, ag)
    if gnorm > _GRAD_TOL:
        raise ConvergenceError(f"gradient certificate {gnorm:.3e} above {_GRAD_TOL}")
    value = _objective(params, hyl, mu, x1, objective_addon) - m0
    return FullRateMinimum(CycleDensityVector(x1), value, gnorm, p_tilde)


def pressure_gap(params: ModelParams, hyl: HYLParams, mu: float, jmax: int = 500,
                 stability_tol: float = 1e-8, max_doublings: int = 4) -> float:
    """Truncated witness ``-(1/beta) inf { I + (b beta/2) x_1^2 }`` (< 0).

    This upper-bounds the difference between the partial and full model
    pressures.  ``jmax`` is doubled until the value is stable to
    ``stability_tol``.
    """
    hyl.require_grand_canonical()

    def witness(jm: int) -> float:
        _, m0, _ = _minimize_raw(params, hyl, mu, jm, "none")
        _, m1, _ = _minimize_raw(params, hyl, mu, jm, "x1sq")
        return -(m1 - m0) / params.beta

    value = witness(jmax)
    for _ in range(max_doublings):
        jmax *= 2
        new = witness(jmax)
        if abs(new - value) <= stability_tol * max(1.0, abs(new)):
            return new
        value = new
    raise ConvergenceError(f"pressure gap not stable to {stability_tol} after jmax={jmax}")
