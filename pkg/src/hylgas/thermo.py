"""Free Bose gas thermodynamics: pressure, density, their inverses and
derivatives, the large-deviation rate function of the particle density, and
truncated (cycle-length <= q) variants.

Conventions: ``mu <= 0`` on the free branch throughout; the rate function
``rate_I(params, mu_ref, x)`` is the Legendre transform of
``phi(t) = P(mu_ref + t/beta) - P(mu_ref)`` and vanishes at
``x = density(mu_ref)`` (and on all of ``[rho_c, inf)`` when ``mu_ref = 0``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from .errors import DivergenceError, DomainError
from .numerics import expand_bracket_down, newton_bisect
from .special import DEFAULT_POLICY, PrecisionPolicy, lambert_w_m1, polylog, polylog_minus_zeta, zeta

__all__ = [
    "ModelParams",
    "ThermoPoint",
    "AsymptoticCheck",
    "pressure",
    "pressure_diff",
    "density",
    "density_diff",
    "critical_density",
    "density_prime",
    "mu_of_rho",
    "thermo_point",
    "rate_I",
    "rate_I_prime",
    "rate_I_second",
    "pressure_q",
    "density_q",
    "mu_of_rho_q",
    "rate_I_q",
    "a_scale",
    "asymptotics_validator",
]


@dataclass(frozen=True)
class ModelParams:
    """Global physical configuration: dimension and inverse temperature."""

    d: int
    beta: float = 1.0

    def __post_init__(self) -> None:
        if int(self.d) != self.d or self.d < 3:
            raise DomainError(f"dimension must be an integer >= 3, got {self.d}")
        if not self.beta > 0.0:
            raise DomainError(f"beta must be > 0, got {self.beta}")

    @property
    def c_d(self) -> float:
        return (2.0 * math.pi) ** (-0.5 * self.d)


@dataclass(frozen=True)
class ThermoPoint:
    mu: float
    pressure: float
    density: float
    density_prime: float | None  # None where the left derivative diverges


@dataclass(frozen=True)
class AsymptoticCheck:
    exact: float
    asymptotic: float
    ratio: float


@lru_cache(maxsize=128)
def _crit_density(d: int, beta: float) -> float:
    return (2.0 * math.pi * beta) ** (-0.5 * d) * zeta(0.5 * d)


def _check_mu(mu: float) -> None:
    if mu > 0.0:
        raise DomainError(f"free branch requires mu <= 0, got mu={mu}")


def pressure(params: ModelParams, mu: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """P(mu) = c_d beta^{-d/2} Li_{d/2+1}(e^{beta mu})."""
    _check_mu(mu)
    s = 0.5 * params.d + 1.0
    return params.c_d * params.beta ** (-0.5 * params.d) * polylog(s, math.exp(params.beta * mu), policy)


def pressure_diff(params: ModelParams, mu: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """P(mu) - P(0) without cancellation; equals beta * integral_0^mu density."""
    _check_mu(mu)
    s = 0.5 * params.d + 1.0
    return params.c_d * params.beta ** (-0.5 * params.d) * polylog_minus_zeta(s, params.beta * mu, policy)


def density(params: ModelParams, mu: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """Mean particle density (2 pi beta)^{-d/2} Li_{d/2}(e^{beta mu})."""
    _check_mu(mu)
    return (2.0 * math.pi * params.beta) ** (-0.5 * params.d) * polylog(
        0.5 * params.d, math.exp(params.beta * mu), policy
    )


def density_diff(params: ModelParams, mu: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """density(mu) - critical_density, cancellation-free near mu = 0."""
    _check_mu(mu)
    return (2.0 * math.pi * params.beta) ** (-0.5 * params.d) * polylog_minus_zeta(
        0.5 * params.d, params.beta * mu, policy
    )


def critical_density(params: ModelParams) -> float:
    """rho_c = (2 pi beta)^{-d/2} zeta(d/2)."""
    return _crit_density(params.d, params.beta)


def density_prime(params: ModelParams, mu: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """d density / d mu = c_d beta^{1-d/2} Li_{d/2-1}(e^{beta mu}).

    At mu = 0 this exists only for d >= 5; for d in {3, 4} the series
    diverges and a :class:`DivergenceError` is raised.
    """
    _check_mu(mu)
    if mu == 0.0 and params.d < 5:
        raise DivergenceError(f"density_prime at mu=0 diverges for d={params.d} (exists only for d >= 5)")
    s = 0.5 * params.d - 1.0
    return params.c_d * params.beta ** (1.0 - 0.5 * params.d) * polylog(s, math.exp(params.beta * mu), policy)


def thermo_point(params: ModelParams, mu: float) -> ThermoPoint:
    dp: float | None
    try:
        dp = density_prime(params, mu)
    except DivergenceError:
        dp = None
    return ThermoPoint(mu=mu, pressure=pressure(params, mu), density=density(params, mu), density_prime=dp)


def _mu_initial_delta(params: ModelParams, rho: float, rho_c: float) -> float:
    """Initial guess for delta = beta*mu solving density(mu) = rho."""
    d, beta = params.d, params.beta
    if rho > 0.7 * rho_c:
        h = rho_c - rho
        if d == 3:
            return -((h * (2.0 * math.pi * beta) ** 1.5 / (2.0 * math.sqrt(math.pi))) ** 2) / 1.0
        if d == 4:
            c4 = (2.0 * math.pi) ** -2
            arg = -h * beta**2 / c4
            if arg > -1.0 / math.e:
                return beta * h * beta / (c4 * lambert_w_m1(arg))
            return -0.05
        return -beta * h / (params.c_d * beta ** (1.0 - 0.5 * d) * zeta(0.5 * d - 1.0))
    z0 = rho * (2.0 * math.pi * beta) ** (0.5 * d)
    return math.log(min(z0, 0.7))


def mu_of_rho(params: ModelParams, rho: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """Inverse of the density map, extended by 0 above the critical density.

    For ``rho <= rho_c`` returns the unique ``mu <= 0`` with
    ``density(mu) = rho`` (residual below ``1e-12 * rho_c``); for larger
    ``rho`` returns 0.  Solved by Newton in ``delta = beta*mu`` from a
    near-critical (or dilute) initializer, with a bracketed fallback.
    """
    if not rho > 0.0:
        raise DomainError(f"mu_of_rho requires rho > 0, got {rho}")
    rho_c = critical_density(params)
    if rho >= rho_c:
        return 0.0
    s = 0.5 * params.d
    target = (rho - rho_c) * (2.0 * math.pi * params.beta) ** s  # pmz(s, delta) target, < 0
    residual_cap = 1e-13 * rho_c * (2.0 * math.pi * params.beta) ** s

    delta = _mu_initial_delta(params, rho, rho_c)
    for _ in range(80):
        r = polylog_minus_zeta(s, delta, policy) - target
        if abs(r) <= residual_cap:
            return delta / params.beta
        slope = polylog(s - 1.0, math.exp(delta), policy)
        step = r / slope
        new = delta - step
        if new >= 0.0:
            new = 0.5 * delta
        if new < 50.0 * delta - 50.0:  # runaway step: bail to the bracketed path
            break
        delta = new

    def f(mu: float) -> float:
        return density_diff(params, mu, policy) - (rho - rho_c)

    lo, f_lo = expand_bracket_down(f, -1.0 / params.beta, sign=-1.0)
    return newton_bisect(f, lo, 0.0, f_lo=f_lo, f_hi=rho_c - rho,
                         abs_residual=1e-13 * rho_c)


def rate_I(params: ModelParams, mu_ref: float, x: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """Large-deviation rate of the particle density in the free gas.

    Piecewise: +inf for x < 0; P(mu_ref) at x = 0;
    beta x (mu(x) - mu_ref) - P(mu(x)) + P(mu_ref) on (0, rho_c];
    -x beta mu_ref - P(0) + P(mu_ref) beyond.  The value at x = rho_c is
    evaluated through the flat branch (both branches agree there).
    """
    _check_mu(mu_ref)
    if x < 0.0:
        return math.inf
    if x == 0.0:
        return pressure(params, mu_ref, policy)
    rho_c = critical_density(params)
    pd_ref = pressure_diff(params, mu_ref, policy)
    if x >= rho_c:
        return -x * params.beta * mu_ref + pd_ref
    mu_x = mu_of_rho(params, x, policy)
    return params.beta * x * (mu_x - mu_ref) - pressure_diff(params, mu_x, policy) + pd_ref


def rate_I_prime(params: ModelParams, mu_ref: float, x: float) -> float:
    """I'(x) = beta (mu(x) - mu_ref) on the strictly convex region (0, rho_c)."""
    _check_mu(mu_ref)
    if not 0.0 < x < critical_density(params):
        raise DomainError(f"rate_I_prime requires 0 < x < rho_c, got x={x}")
    return params.beta * (mu_of_rho(params, x) - mu_ref)


def rate_I_second(params: ModelParams, x: float) -> float:
    """I''(x) = beta mu'(x) = beta / rho'(mu(x)) on (0, rho_c).

    Returned from the exact derivative of the inverse map; no finite
    differences are involved (the d=3,4 endpoint behavior is genuine).
    """
    if not 0.0 < x < critical_density(params):
        raise DomainError(f"rate_I_second requires 0 < x < rho_c, got x={x}")
    return params.beta / density_prime(params, mu_of_rho(params, x))


# -- truncated variants (cycle lengths 1..q only) -----------------------------


def _check_q(q: int) -> None:
    if int(q) != q or q < 1:
        raise DomainError(f"cut-off q must be an integer >= 1, got {q}")


def _trunc_sum(params: ModelParams, q: int, mu: float, s_offset: float) -> float:
    # sum_{j<=q} e^{beta mu j} j^{-d/2-s_offset} * c_d beta^{-d/2-...} handled by caller
    s = 0.5 * params.d + s_offset
    bm = params.beta * mu
    j_stop = q
    if bm < 0.0:
        # terms below ~1e-320 cannot contribute at double precision
        j_stop = min(q, max(8, int(740.0 / -bm) + 1))
    j = np.arange(1, j_stop + 1, dtype=float)
    return float(math.fsum(np.exp(bm * j) * j ** (-s)))


def pressure_q(params: ModelParams, q: int, mu: float) -> float:
    _check_mu(mu)
    _check_q(q)
    return params.c_d * params.beta ** (-0.5 * params.d) * _trunc_sum(params, q, mu, 1.0)


def density_q(params: ModelParams, q: int, mu: float) -> float:
    _check_mu(mu)
    _check_q(q)
    return (2.0 * math.pi * params.beta) ** (-0.5 * params.d) * _trunc_sum(params, q, mu, 0.0)


def _density_q_prime(params: ModelParams, q: int, mu: float) -> float:
    return params.c_d * params.beta ** (1.0 - 0.5 * params.d) * _trunc_sum(params, q, mu, -1.0)


def mu_of_rho_q(params: ModelParams, q: int, rho: float) -> float:
    """Inverse of density_q on mu <= 0; rho must stay below density_q(0)."""
    if not rho > 0.0:
        raise DomainError(f"mu_of_rho_q requires rho > 0, got {rho}")
    _check_q(q)
    top = density_q(params, q, 0.0)
    if rho >= top:
        raise DomainError(
            f"rho={rho} is not reachable with mu <= 0 at cut-off q={q} (density_q(0)={top})"
        )

    def f(mu: float) -> float:
        return density_q(params, q, mu) - rho

    lo, f_lo = expand_bracket_down(f, -1.0 / params.beta, sign=-1.0)
    return newton_bisect(f, lo, 0.0, df=lambda m: _density_q_prime(params, q, m),
                         f_lo=f_lo, f_hi=top - rho, abs_residual=1e-13 * top)


def rate_I_q(params: ModelParams, q: int, mu_ref: float, x: float) -> float:
    """Truncated rate function I^q; same Legendre form with P^q, mu^q."""
    _check_mu(mu_ref)
    _check_q(q)
    if x < 0.0:
        return math.inf
    if x == 0.0:
        return pressure_q(params, q, mu_ref)
    mu_x = mu_of_rho_q(params, q, x)
    return (
        params.beta * x * (mu_x - mu_ref)
        - pressure_q(params, q, mu_x)
        + pressure_q(params, q, mu_ref)
    )


# -- CLT scale and asymptotics ------------------------------------------------


def a_scale(params: ModelParams, volume: float) -> float:
    """Gnedenko CLT scale of the particle number: V^{2/3} (d=3),
    sqrt(V log V) (d=4), sqrt(V) (d>=5)."""
    if not volume > 0.0:
        raise DomainError(f"volume must be > 0, got {volume}")
    if params.d == 3:
        return volume ** (2.0 / 3.0)
    if params.d == 4:
        if volume <= 1.0:
            raise DomainError("a_scale with d=4 needs volume > 1")
        return math.sqrt(volume * math.log(volume))
    return math.sqrt(volume)


def _w_branch_arg(params: ModelParams, h: float) -> float:
    c4 = (2.0 * math.pi) ** -2
    arg = -h * params.beta**2 / c4
    if arg < -1.0 / math.e:
        raise DomainError(
            f"d=4 asymptotics need h < c_4/(e beta^2) = {c4 / math.e / params.beta**2:.6g}, got h={h}"
        )
    return arg


def asymptotics_validator(
    params: ModelParams,
    kind: Literal["density_near_0", "mu_near_rc", "rate_near_rc"],
    h: float,
) -> AsymptoticCheck:
    """Exact quantity vs its leading near-critical asymptotic, plus their ratio.

    ``h`` parametrizes the distance to criticality: ``mu = -h`` for
    ``density_near_0`` and ``rho = rho_c - h`` for the other kinds.  Both
    ``exact`` and ``asymptotic`` are reported in deviation form (distance of
    the density from rho_c, the value of mu, the value of I), so the ratio
    tends to 1 as h -> 0.

    The leading constants are the corrected ones implied by
    I' = beta*mu composed with the near-critical expansion of the density:
    d=3: mu ~ -2 beta^2 pi^2 h^2 and I ~ (2/3) pi^2 beta^3 h^3;
    d=4: mu ~ h beta / (c_4 W_-1(-h beta^2/c_4)) and I ~ -h^2 beta^2 / (2 c_4 W_-1);
    d>=5: mu ~ -h/rho'(0) and I ~ beta h^2 / (2 rho'(0)).
    """
    if not h > 0.0:
        raise DomainError(f"h must be > 0, got {h}")
    d, beta = params.d, params.beta
    rho_c = critical_density(params)
    c4 = (2.0 * math.pi) ** -2

    if kind == "density_near_0":
        exact = rho_c - density(params, -h)
        if d == 3:
            asym = math.sqrt(2.0 * h) / (2.0 * math.pi * beta)
        elif d == 4:
            asym = c4 * h / beta * (1.0 + math.log(1.0 / (beta * h)))
        else:
            asym = density_prime(params, 0.0) * h
    elif kind == "mu_near_rc":
        if h >= rho_c:
            raise DomainError(f"mu_near_rc needs h < rho_c = {rho_c}")
        exact = mu_of_rho(params, rho_c - h)
        if d == 3:
            asym = -2.0 * beta**2 * math.pi**2 * h**2
        elif d == 4:
            asym = h * beta / (c4 * lambert_w_m1(_w_branch_arg(params, h)))
        else:
            asym = -h / density_prime(params, 0.0)
    elif kind == "rate_near_rc":
        if h >= rho_c:
            raise DomainError(f"rate_near_rc needs h < rho_c = {rho_c}")
        exact = rate_I(params, 0.0, rho_c - h)
        if d == 3:
            asym = (2.0 / 3.0) * math.pi**2 * beta**3 * h**3
        elif d == 4:
            asym = -(h**2) * beta**2 / (2.0 * c4 * lambert_w_m1(_w_branch_arg(params, h)))
        else:
            asym = beta * h**2 / (2.0 * density_prime(params, 0.0))
    else:
        raise DomainError(f"unknown asymptotics kind {kind!r}")

    return AsymptoticCheck(exact=exact, asymptotic=asym, ratio=exact / asym)
