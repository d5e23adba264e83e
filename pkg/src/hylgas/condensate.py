"""Variational solver for the interacting-loop condensate.

Everything is driven by one scalar problem: maximize

    R(t) = b * beta * t^2 / 2 - I(rho - t)      over t in [0, rho),

where I is the free rate function at reference chemical potential 0.  The
maximizer t* is the condensate (interlacement) density rho_bar.  Above the
free critical density the maximum is always interior and splits as
rho_bar = rho_S + rho_e with rho_e = rho - rho_c the free excess; below it
the zero branch competes with the interior one, and the crossover density
rho_c_hyl is where they tie (producing the jump in rho_bar).

Structure used by the solver: R'(t) = beta*(b t + mu(rho - t)) is concave
(R'' is strictly decreasing in t), so R' has at most two zeros and the
candidate maximizers are exactly {0, rightmost zero of R'}.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .errors import BracketError, DivergenceError, DomainError
from .numerics import golden_section_max, newton_bisect
from . import thermo
from .thermo import ModelParams

__all__ = [
    "HYLParams",
    "CondensateSolution",
    "CriticalPoint",
    "GMFSolution",
    "excess_objective",
    "excess_objective_prime",
    "solve_rho_bar",
    "critical_density_hyl",
    "b_critical",
    "free_energy",
    "rho_gc",
    "pressure_hyl",
    "gmf_solve",
]

COEXISTENCE_RTOL = 1e-10


@dataclass(frozen=True)
class HYLParams:
    """Interaction strengths: mean-field repulsion ``a`` and counter-term ``b``.

    The variational solvers need ``b > 0`` (``b = 0`` is the free/mean-field
    case, admitted only by the finite-volume and sampling modules);
    grand-canonical operations additionally require ``a > b > 0``.
    """

    b: float
    a: float = 0.0

    def __post_init__(self) -> None:
        if self.b < 0.0:
            raise DomainError(f"counter-term strength b must be >= 0, got {self.b}")
        if self.a < 0.0:
            raise DomainError(f"mean-field strength a must be >= 0, got {self.a}")

    def require_counterterm(self) -> None:
        if not self.b > 0.0:
            raise DomainError(f"this operation needs a counter-term b > 0, got b={self.b}")

    def require_grand_canonical(self) -> None:
        if not self.a > self.b > 0.0:
            raise DomainError(f"grand-canonical operations need a > b > 0, got a={self.a}, b={self.b}")


@dataclass(frozen=True)
class CondensateSolution:
    """Maximizer structure of the condensate variational problem at one density."""

    rho_total: float
    rho_e: float
    rho_S: float
    rho_bar: float
    S_value: float  # S_0 on the supercritical branch, S_1 below
    branch: Literal["zero", "interior", "coexistence"]
    objective_curvature: float | None = None  # R'' at the interior maximizer
    coexisting_rho_S: float | None = None  # second maximizer at a coexistence point


@dataclass(frozen=True)
class CriticalPoint:
    rho_c_hyl: float
    jump_size: float


@dataclass(frozen=True)
class GMFSolution:
    x_min: float
    L: float
    phase: Literal["subcritical", "supercritical", "at_rc"]
    limiting_params: dict
    unique: bool
    candidates: tuple[float, ...]
    separation_margin: float


def _R(params: ModelParams, hyl: HYLParams, rho: float, t: float) -> float:
    return 0.5 * hyl.b * params.beta * t * t - thermo.rate_I(params, 0.0, rho - t)


def _R_prime(params: ModelParams, hyl: HYLParams, rho: float, t: float) -> float:
    return params.beta * (hyl.b * t + thermo.mu_of_rho(params, rho - t))


def _R_second(params: ModelParams, hyl: HYLParams, rho: float, t: float) -> float:
    y = rho - t
    if y >= thermo.critical_density(params):
        return params.beta * hyl.b
    return params.beta * hyl.b - thermo.rate_I_second(params, y)


def excess_objective(params: ModelParams, hyl: HYLParams, rho_o: float, x: float) -> float:
    """Branch objective at trial condensate coordinate ``x``.

    Supercritical (``rho_o > rho_c``): ``Q(x) - I(rho_c - x)`` with
    ``Q(x) = (beta b/2) [(x + rho_e)^2 - rho_e^2]`` and ``rho_e = rho_o - rho_c``.
    Subcritical: ``R(x) = b beta x^2/2 - I(rho_o - x)``.
    """
    if not rho_o > 0.0:
        raise DomainError(f"rho_o must be > 0, got {rho_o}")
    rho_c = thermo.critical_density(params)
    if rho_o > rho_c:
        if not 0.0 <= x <= rho_c:
            raise DomainError(f"x must lie in [0, rho_c] supercritically, got {x}")
        rho_e = rho_o - rho_c
        return _R(params, hyl, rho_o, x + rho_e) - 0.5 * hyl.b * params.beta * rho_e * rho_e
    if not 0.0 <= x < rho_o:
        raise DomainError(f"x must lie in [0, rho_o) subcritically, got {x}")
    return _R(params, hyl, rho_o, x)


def excess_objective_prime(params: ModelParams, hyl: HYLParams, rho_o: float, x: float) -> float:
    """Derivative of :func:`excess_objective` in ``x``:
    ``beta b (x + rho_e) + beta mu(rho_c - x)`` supercritically,
    ``beta b x + beta mu(rho_o - x)`` below."""
    rho_c = thermo.critical_density(params)
    if rho_o > rho_c:
        rho_e = rho_o - rho_c
        return _R_prime(params, hyl, rho_o, x + rho_e)
    return _R_prime(params, hyl, rho_o, x)


def _interior_maximizer(params: ModelParams, hyl: HYLParams, rho: float) -> float | None:
    """Rightmost zero of R' on (0, rho), or None when R' <= 0 throughout."""
    # push the upper end toward rho until R' is negative there
    y = min(1e-6 * rho, 1e-9)
    t_hi = rho - y
    while _R_prime(params, hyl, rho, t_hi) >= 0.0:
        y *= 1e-3
        if y < rho * 1e-250:
            raise BracketError("R' does not turn negative; b*rho out of tractable range")
        t_hi = rho - y
    # R' is concave: golden section locates its maximum
    t_peak, rp_peak = golden_section_max(
        lambda t: _R_prime(params, hyl, rho, t), 0.0, t_hi, rel_tol=1e-10
    )
    if rp_peak <= 0.0:
        return None
    f = lambda t: _R_prime(params, hyl, rho, t)
    return newton_bisect(
        f, t_peak, t_hi,
        df=lambda t: _R_second(params, hyl, rho, t),
        f_lo=rp_peak, f_hi=f(t_hi),
        abs_residual=1e-14 * max(1.0, hyl.b * params.beta * rho),
    )


def solve_rho_bar(params: ModelParams, hyl: HYLParams, rho: float) -> CondensateSolution:
    """Solve the condensate variational problem at total density ``rho``.

    Above rho_c the branch is always interior; below, the interior candidate
    (when it exists) competes with t = 0, with ties within
    ``COEXISTENCE_RTOL`` reported as branch ``"coexistence"``.
    """
    if not rho > 0.0:
        raise DomainError(f"rho must be > 0, got {rho}")
    hyl.require_counterterm()
    rho_c = thermo.critical_density(params)
    rho_e = max(rho - rho_c, 0.0)
    supercritical = rho > rho_c

    t_star = _interior_maximizer(params, hyl, rho)
    r_zero = _R(params, hyl, rho, 0.0)  # = -I(rho)

    def interior_solution(t: float, branch: str, coexisting: float | None = None) -> CondensateSolution:
        s1 = _R(params, hyl, rho, t)
        s_value = s1 - 0.5 * hyl.b * params.beta * rho_e * rho_e if supercritical else s1
        return CondensateSolution(
            rho_total=rho,
            rho_e=rho_e,
            rho_S=t - rho_e,
            rho_bar=t,
            S_value=s_value,
            branch=branch,  # type: ignore[arg-type]
            objective_curvature=_R_second(params, hyl, rho, t),
            coexisting_rho_S=coexisting,
        )

    if supercritical:
        if t_star is None or t_star <= rho_e:
            raise BracketError("supercritical interior maximizer not found (unexpected)")
        return interior_solution(t_star, "interior")

    if t_star is None:
        return CondensateSolution(
            rho_total=rho, rho_e=0.0, rho_S=0.0, rho_bar=0.0,
            S_value=r_zero, branch="zero",
        )
    r_star = _R(params, hyl, rho, t_star)
    gap = r_star - r_zero
    if abs(gap) <= COEXISTENCE_RTOL * max(1.0, abs(r_star)):
        sol = interior_solution(t_star, "coexistence", coexisting=0.0)
        return sol
    if gap > 0.0:
        return interior_solution(t_star, "interior")
    return CondensateSolution(
        rho_total=rho, rho_e=0.0, rho_S=0.0, rho_bar=0.0,
        S_value=r_zero, branch="zero",
    )


def _branch_gap(params: ModelParams, hyl: HYLParams, rho: float) -> float:
    """R(interior candidate) - R(0); -inf when no interior candidate exists."""
    t_star = _interior_maximizer(params, hyl, rho)
    if t_star is None:
        return -math.inf
    return _R(params, hyl, rho, t_star) - _R(params, hyl, rho, 0.0)


@lru_cache(maxsize=256)
def _critical_density_hyl_cached(params: ModelParams, hyl: HYLParams) -> CriticalPoint:
    rho_c = thermo.critical_density(params)
    gap_at_rc = _branch_gap(params, hyl, rho_c)
    if not gap_at_rc > 0.0:
        return CriticalPoint(rho_c_hyl=rho_c, jump_size=0.0)
    hi = rho_c
    lo = 0.5 * rho_c
    while _branch_gap(params, hyl, lo) > 0.0:
        lo *= 0.5
        if lo < 1e-12 * rho_c:
            raise BracketError("interior branch persists to rho -> 0; cannot locate rho_c_hyl")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _branch_gap(params, hyl, mid) > 0.0:
            hi = mid
        else:
            lo = mid
    rho_star = 0.5 * (lo + hi)
    jump = _interior_maximizer(params, hyl, rho_star)
    return CriticalPoint(rho_c_hyl=rho_star, jump_size=0.0 if jump is None else jump)


def critical_density_hyl(params: ModelParams, hyl: HYLParams) -> CriticalPoint:
    """Shifted critical density rho_c_hyl = sup{rho: rho_bar(rho) = 0} and the
    size of the condensate jump there (0 when the transition is continuous)."""
    return _critical_density_hyl_cached(params, hyl)


def b_critical(params: ModelParams) -> float:
    """b_c = 1/rho'(0), the counter-term strength above which the critical
    density shifts for d >= 5.  Diverging rho'(0) makes every b > 0 shift the
    transition in d = 3, 4, reported as a :class:`DivergenceError`."""
    if params.d < 5:
        raise DivergenceError(
            f"b_critical is 0+ for d={params.d}: every b > 0 shifts the critical density"
        )
    return 1.0 / thermo.density_prime(params, 0.0)


def free_energy(params: ModelParams, hyl: HYLParams, rho: float) -> float:
    """Canonical free energy
    ``f(rho) = (rho - rho_bar) mu(rho - rho_bar) - int_0^{mu(rho - rho_bar)} density - b rho_bar^2 / 2``.

    The integral equals ``(P(mu(..)) - P(0)) / beta``, so no quadrature is
    needed; the result also equals ``-S_1 / beta``.
    """
    sol = solve_rho_bar(params, hyl, rho)
    x = rho - sol.rho_bar
    mu_x = thermo.mu_of_rho(params, x)
    integral = thermo.pressure_diff(params, mu_x) / params.beta
    return x * mu_x - integral - 0.5 * hyl.b * sol.rho_bar**2


def _s1(params: ModelParams, hyl: HYLParams, rho: float) -> float:
    sol = solve_rho_bar(params, hyl, rho)
    if sol.rho_e > 0.0:
        return sol.S_value + 0.5 * hyl.b * params.beta * sol.rho_e**2
    return sol.S_value


def _J(params: ModelParams, hyl: HYLParams, mu: float, rho: float) -> float:
    beta = params.beta
    return (
        _s1(params, hyl, rho)
        - 0.5 * hyl.a * beta * rho * rho
        + beta * mu * rho
        - thermo.rate_I(params, 0.0, rho)
    )


def _J_prime(params: ModelParams, hyl: HYLParams, mu: float, rho: float, crit: CriticalPoint) -> float:
    beta = params.beta
    if rho <= crit.rho_c_hyl:
        mu_shift = thermo.mu_of_rho(params, rho)
    else:
        sol = solve_rho_bar(params, hyl, rho)
        mu_shift = thermo.mu_of_rho(params, rho - sol.rho_bar)
    return beta * (mu - hyl.a * rho - mu_shift - thermo.mu_of_rho(params, rho))


def rho_gc(params: ModelParams, hyl: HYLParams, mu: float, tol: float = 1e-9) -> float:
    """Grand-canonical density: the unique maximizer of
    ``J(rho) = beta b rho_bar^2/2 - I(rho - rho_bar) - beta a rho^2/2 + beta mu rho - I(rho)``.

    J' decreases on either side of the kink at rho_c_hyl (where rho_bar
    jumps), so the maximizer is the zero of J' on one of the branches or the
    kink itself; all candidates are compared by value.
    """
    hyl.require_grand_canonical()
    crit = critical_density_hyl(params, hyl)
    k = crit.rho_c_hyl
    beta = params.beta
    candidates: list[float] = [k]

    # branch below the kink: J'/beta = mu - a rho - 2 mu_free(rho)
    def jp_low(rho: float) -> float:
        return mu - hyl.a * rho - 2.0 * thermo.mu_of_rho(params, rho)

    if jp_low(k) < 0.0:
        lo = k * 1e-6
        while jp_low(lo) <= 0.0:
            lo *= 1e-3
            if lo < k * 1e-200:
                raise BracketError("rho_gc lower bracket expansion failed")
        candidates.append(newton_bisect(jp_low, lo, k, abs_residual=0.0))

    # branch above the kink
    def jp_high(rho: float) -> float:
        return _J_prime(params, hyl, mu, rho, crit) / beta

    rho_hi = max(2.0 * k, (abs(mu) + 1.0) / hyl.a)
    start = k * (1.0 + 1e-10)
    if jp_high(start) > 0.0:
        while jp_high(rho_hi) > 0.0:
            rho_hi *= 2.0
            if rho_hi > 1e12:
                raise BracketError("rho_gc upper bracket expansion failed")
        candidates.append(newton_bisect(jp_high, start, rho_hi, abs_residual=0.0))

    best = max(candidates, key=lambda r: _J(params, hyl, mu, r))
    if abs(best - k) > 1e-9 * max(k, best):
        resid = jp_low(best) if best < k else jp_high(best)
        if abs(resid) > tol * max(1.0, abs(mu) + hyl.a * best):
            raise BracketError(f"stationarity residual {resid} exceeds tolerance at rho={best}")
    return best


def pressure_hyl(params: ModelParams, hyl: HYLParams, mu: float) -> float:
    """Grand-canonical pressure
    ``sup_rho { mu rho - a rho^2/2 - I(rho)/beta - f(rho) }``, evaluated at
    the maximizer rho_gc."""
    hyl.require_grand_canonical()
    rho_star = rho_gc(params, hyl, mu)
    return _J(params, hyl, mu, rho_star) / params.beta


def gmf_solve(
    params: ModelParams,
    G: Callable[[float], float] | np.ndarray,
    x_max: float | None = None,
    grid_points: int = 10_000,
    refinement_rounds: int = 3,
    value_rtol: float = 1e-9,
) -> GMFSolution:
    """Minimize ``I + G`` on ``[0, x_max]`` by grid scan with local refinement.

    ``G`` is either a callable (extended-real valued, bounded below) or a
    table of shape (n, 2) with columns (x, value); tables are interpolated
    linearly and treated as +inf outside their range.  Multiple minima within
    ``value_rtol`` are reported via ``unique=False`` and the candidate list;
    ``separation_margin`` is the smallest excess of I+G over the minimum
    outside a small neighborhood of the minimizer (the level-set condition
    checked a posteriori).
    """
    if isinstance(G, np.ndarray):
        table = np.asarray(G, dtype=float)
        if table.ndim != 2 or table.shape[1] != 2:
            raise DomainError("tabulated G must have shape (n, 2)")
        xs_t, vs_t = table[:, 0], table[:, 1]
        if x_max is None:
            x_max = float(xs_t[-1])

        def G_fn(x: float) -> float:
            if x < xs_t[0] or x > xs_t[-1]:
                return math.inf
            return float(np.interp(x, xs_t, vs_t))
    else:
        G_fn = G
        if x_max is None:
            raise DomainError("x_max is required when G is a callable")

    def F(x: float) -> float:
        g = G_fn(x)
        if not g < math.inf:
            return math.inf
        return thermo.rate_I(params, 0.0, x) + g

    lo, hi = 0.0, float(x_max)
    xs = np.linspace(lo, hi, grid_points)
    vals = np.array([F(float(x)) for x in xs])
    if not np.any(np.isfinite(vals)):
        raise DomainError("I + G is +inf on the whole grid")
    step = xs[1] - xs[0]
    i_best = int(np.nanargmin(np.where(np.isfinite(vals), vals, np.inf)))
    coarse_xs, coarse_vals = xs, vals

    for _ in range(refinement_rounds):
        lo_r = max(lo, xs[max(i_best - 2, 0)])
        hi_r = min(hi, xs[min(i_best + 2, len(xs) - 1)])
        xs = np.linspace(lo_r, hi_r, 41)
        vals = np.array([F(float(x)) for x in xs])
        i_best = int(np.nanargmin(np.where(np.isfinite(vals), vals, np.inf)))
    x_min = float(xs[i_best])
    L = float(vals[i_best])

    # non-uniqueness scan on the coarse grid: near-minimal points are grouped
    # into plateaus; several plateaus, or one wide plateau, both flag ties
    tol = value_rtol * max(1.0, abs(L))
    near = np.isfinite(coarse_vals) & (coarse_vals <= L + tol)
    idx = np.flatnonzero(near)
    plateaus: list[list[float]] = []
    for i in idx:
        x = float(coarse_xs[i])
        if not plateaus or x - plateaus[-1][1] > 2.5 * step:
            plateaus.append([x, x])
        else:
            plateaus[-1][1] = x
    groups = [0.5 * (p[0] + p[1]) for p in plateaus]
    max_width = max((p[1] - p[0] for p in plateaus), default=0.0)
    unique = len(plateaus) <= 1 and max_width <= 3.0 * step
    eps_sep = 4.0 * step
    outside = np.abs(coarse_xs - x_min) > eps_sep
    finite_outside = outside & np.isfinite(coarse_vals)
    margin = float(np.min(coarse_vals[finite_outside]) - L) if np.any(finite_outside) else math.inf

    rho_c = thermo.critical_density(params)
    band = max(2.0 * step, 1e-9 * rho_c)
    if abs(x_min - rho_c) <= band:
        phase = "at_rc"
        limiting = {"mu": 0.0, "interlacement_density": 0.0}
    elif x_min < rho_c:
        phase = "subcritical"
        limiting = {"mu": thermo.mu_of_rho(params, x_min) if x_min > 0 else -math.inf}
    else:
        phase = "supercritical"
        limiting = {"mu": 0.0, "interlacement_density": x_min - rho_c}
    return GMFSolution(
        x_min=x_min, L=L, phase=phase, limiting_params=limiting,
        unique=unique, candidates=tuple(groups), separation_margin=margin,
    )
