"""Exact finite-volume computations on the cycle-count representation.

The free model at volume V is a compound Poisson: independent Poisson counts
n_j of loops of length j with intensity

    lambda_j = V e^{beta mu j} p_{beta j}(0) / j .

Everything here is computed in the log domain via the exact recursion

    n P(N = n) = sum_j j lambda_j P(N = n - j),

applied to the full intensity set or restricted to the short (j < q) or long
(j >= q) sector.  The counterterm-tilted long sector does not factorize over
loop types, so there the multisets of long loops are enumerated explicitly
(with a hard cap; the enumeration is exact or it raises).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Literal

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, EnumerationCapError
from . import thermo
from .thermo import ModelParams
from .condensate import HYLParams

__all__ = [
    "FiniteVolumeModel",
    "CycleCounts",
    "HYLPartition",
    "SectorCheck",
    "default_cutoff",
    "intensity",
    "log_intensity",
    "total_log_intensity_sum",
    "free_canonical_pmf",
    "free_canonical_log_pmf",
    "long_mass_pmf",
    "canonical_hyl_partition",
    "long_loop_density_exact",
    "short_sector_check",
]

ENUMERATION_CAP = 10_000_000


def default_cutoff(volume: float) -> int:
    """Default loop-length cut-off ceil(V^0.75), between the CLT scale and V."""
    return int(math.ceil(volume**0.75))


@dataclass(frozen=True)
class FiniteVolumeModel:
    """Volume, physical parameters, cut-off and (optionally) interaction/tilt.

    The volume enters only through |Lambda| = V; no spatial geometry is kept.
    """

    V: float
    params: ModelParams
    q: int
    hyl: HYLParams | None = None
    mu: float = 0.0

    def __post_init__(self) -> None:
        if not self.V > 0.0:
            raise DomainError(f"volume must be > 0, got {self.V}")
        if int(self.q) != self.q or self.q < 1:
            raise DomainError(f"cut-off q must be an integer >= 1, got {self.q}")
        if self.q > self.V:
            warnings.warn(f"q={self.q} exceeds V={self.V}; long loops are artificially excluded")
        elif self.params.d != 4 or self.V > 1.0:
            a = thermo.a_scale(self.params, self.V)
            if not a < self.q:
                warnings.warn(
                    f"q={self.q} is at or below the CLT scale a={a:.3g}; "
                    "the cut-off should sit strictly between a and V"
                )


@dataclass(frozen=True)
class CycleCounts:
    """Occupation numbers: counts[j] loops of length j."""

    counts: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for j, n in self.counts.items():
            if j < 1 or n < 0 or int(j) != j or int(n) != n:
                raise DomainError(f"invalid occupation entry {j}: {n}")

    def total(self) -> int:
        return sum(j * n for j, n in self.counts.items())

    def total_short(self, q: int) -> int:
        return sum(j * n for j, n in self.counts.items() if j < q)

    def total_long(self, q: int) -> int:
        return sum(j * n for j, n in self.counts.items() if j >= q)

    def n_loops(self) -> int:
        return sum(self.counts.values())


def intensity(model: FiniteVolumeModel, j: int) -> float:
    """lambda_j = V (2 pi)^{-d/2} (beta j)^{-d/2} e^{beta mu j} / j."""
    return math.exp(log_intensity(model, j))


def log_intensity(model: FiniteVolumeModel, j: int) -> float:
    if int(j) != j or j < 1:
        raise DomainError(f"loop length must be an integer >= 1, got {j}")
    p = model.params
    return (
        math.log(model.V)
        - 0.5 * p.d * math.log(2.0 * math.pi)
        - (0.5 * p.d + 1.0) * math.log(j)
        - 0.5 * p.d * math.log(p.beta)
        + p.beta * model.mu * j
    )


def _log_j_lambda(model: FiniteVolumeModel, n_max: int,
                  sector: Literal["all", "short", "long"]) -> np.ndarray:
    """log(j * lambda_j) for j = 1..n_max, -inf outside the sector."""
    p = model.params
    j = np.arange(1, n_max + 1, dtype=float)
    out = (
        math.log(model.V)
        - 0.5 * p.d * math.log(2.0 * math.pi * p.beta)
        - 0.5 * p.d * np.log(j)
        + p.beta * model.mu * j
    )
    if sector == "short":
        out[int(model.q) - 1:] = -np.inf
    elif sector == "long":
        out[: int(model.q) - 1] = -np.inf
    elif sector != "all":
        raise DomainError(f"unknown sector {sector!r}")
    return out


def _power_tail(s: float, q: int) -> float:
    """sum_{j >= q} j^{-s} via Euler-Maclaurin (s > 1)."""
    j0 = max(int(q), 64)
    head = sum(j ** (-s) for j in range(int(q), j0))
    tail = (
        j0 ** (1.0 - s) / (s - 1.0)
        + 0.5 * j0 ** (-s)
        + s / 12.0 * j0 ** (-s - 1.0)
        - s * (s + 1.0) * (s + 2.0) / 720.0 * j0 ** (-s - 3.0)
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) / 30240.0 * j0 ** (-s - 5.0)
    )
    return head + tail


def total_log_intensity_sum(model: FiniteVolumeModel,
                            sector: Literal["all", "short", "long"] = "all") -> float:
    """sum_j lambda_j over the sector (the Poisson normalizer exponent)."""
    if model.mu > 0.0:
        raise DomainError("the free loop soup requires mu <= 0 (intensities are not summable)")
    p = model.params
    pref = model.V * p.c_d * p.beta ** (-0.5 * p.d)
    s = 0.5 * p.d + 1.0
    if sector == "all":
        return model.V * thermo.pressure(p, model.mu)
    if sector == "short":
        j = np.arange(1, int(model.q), dtype=float)
        if j.size == 0:
            return 0.0
        return pref * float(np.sum(np.exp(p.beta * model.mu * j) * j ** (-s)))
    if sector == "long":
        q = int(model.q)
        if model.mu == 0.0:
            return pref * _power_tail(s, q)
        # exponential tilt: direct summation converges geometrically
        total = 0.0
        j = q
        while True:
            term = math.exp(p.beta * model.mu * j) * j ** (-s)
            total += term
            j += 1
            if term <= 1e-17 * total or j > q + 10_000_000:
                break
        return pref * total
    raise DomainError(f"unknown sector {sector!r}")


def free_canonical_log_pmf(model: FiniteVolumeModel, n_max: int,
                           sector: Literal["all", "short", "long"] = "all") -> np.ndarray:
    """log P(N_sector = n) for n = 0..n_max, exact via the recursion."""
    if int(n_max) != n_max or n_max < 0:
        raise DomainError(f"n_max must be an integer >= 0, got {n_max}")
    n_max = int(n_max)
    log_T = np.full(n_max + 1, -np.inf)
    log_T[0] = 0.0
    if n_max > 0:
        lw = np.concatenate([[-np.inf], _log_j_lambda(model, n_max, sector)])  # index by j
        for n in range(1, n_max + 1):
            terms = lw[1 : n + 1] + log_T[n - 1 :: -1]
            m = terms.max()
            if m == -np.inf:
                continue
            log_T[n] = -math.log(n) + m + math.log(np.sum(np.exp(terms - m)))
    return log_T - total_log_intensity_sum(model, sector)


def free_canonical_pmf(model: FiniteVolumeModel, n_max: int) -> np.ndarray:
    """P(N = n) for n = 0..n_max under the free grand-canonical law."""
    return np.exp(free_canonical_log_pmf(model, n_max, "all"))


def long_mass_pmf(model: FiniteVolumeModel, x: int) -> float:
    """Exact P(N_long = x): total length of loops with length >= q."""
    if int(x) != x or x < 0:
        raise DomainError(f"x must be an integer >= 0, got {x}")
    return float(np.exp(free_canonical_log_pmf(model, int(x), "long")[int(x)]))


def _long_partitions(m: int, q: int, cap: int) -> Iterator[dict[int, int]]:
    """Multisets of parts >= q summing to m (m = 0 yields the empty multiset)."""
    budget = [cap]

    def rec(remaining: int, max_part: int, acc: list[int]) -> Iterator[list[int]]:
        if remaining == 0:
            budget[0] -= 1
            if budget[0] < 0:
                raise EnumerationCapError(
                    f"long-loop partition enumeration exceeded the cap of {cap}"
                )
            yield acc
            return
        top = min(remaining, max_part)
        for part in range(top, q - 1, -1):
            yield from rec(remaining - part, part, acc + [part])

    for parts in rec(int(m), int(m), []):
        mult: dict[int, int] = {}
        for p in parts:
            mult[p] = mult.get(p, 0) + 1
        yield mult


@dataclass(frozen=True)
class HYLPartition:
    """Counterterm-tilted canonical partition function at fixed N.

    ``log_z_joint`` is log E[e^{-beta H} 1{N = n}] under the free law (the
    object with the heavy-tail prefactor); ``log_z_conditional`` divides out
    P(N = n), matching the Radon-Nikodym normalizer whose volume-rate gives
    the free energy.  ``long_spectrum`` maps each long-sector mass m to the
    log-weight of its cell inside the joint sum.
    """

    log_z_joint: float
    log_z_conditional: float
    long_spectrum: dict[int, float]


def canonical_hyl_partition(model: FiniteVolumeModel, N: int,
                            cap: int = ENUMERATION_CAP) -> HYLPartition:
    """Exact Z = sum_m W_long(m) P_short(N - m) with the counter-term tilt
    exp((b beta / 2V) sum_{k>=q} k^2 n_k^2) on the enumerated long sector."""
    if model.hyl is None:
        raise DomainError("canonical_hyl_partition needs a model with hyl parameters")
    if int(N) != N or N < 0:
        raise DomainError(f"N must be an integer >= 0, got {N}")
    N = int(N)
    q = int(model.q)
    b = model.hyl.b
    beta = model.params.beta
    log_short = free_canonical_log_pmf(model, N, "short")
    long_norm = total_log_intensity_sum(model, "long")

    masses = [0] + list(range(q, N + 1))
    spectrum: dict[int, float] = {}
    for m in masses:
        cell_terms = []
        for mult in _long_partitions(m, q, cap):
            lw = -long_norm
            tilt = 0.0
            for j, n in mult.items():
                lw += n * log_intensity(model, j) - math.lgamma(n + 1)
                tilt += j * j * n * n
            lw += 0.5 * b * beta / model.V * tilt
            cell_terms.append(lw)
        if not cell_terms:
            continue
        cell = float(logsumexp(cell_terms)) + float(log_short[N - m])
        if math.isfinite(cell):
            spectrum[m] = cell
    if not spectrum:
        raise DomainError(f"no configuration reaches N={N} (q={q})")
    log_joint = float(logsumexp(list(spectrum.values())))
    log_full = float(free_canonical_log_pmf(model, N, "all")[N])
    return HYLPartition(
        log_z_joint=log_joint,
        log_z_conditional=log_joint - log_full,
        long_spectrum=spectrum,
    )


def long_loop_density_exact(model: FiniteVolumeModel, N: int,
                            cap: int = ENUMERATION_CAP) -> float:
    """E[N_long] / V under the exact counterterm-tilted canonical law."""
    part = canonical_hyl_partition(model, N, cap)
    ms = np.array(sorted(part.long_spectrum))
    lw = np.array([part.long_spectrum[int(m)] for m in ms])
    w = np.exp(lw - lw.max())
    return float((ms * w).sum() / w.sum() / model.V)


@dataclass(frozen=True)
class SectorCheck:
    log_pmf_short: float
    log_pmf_full: float
    pmf_short: float
    pmf_full: float
    ratio: float


def short_sector_check(model: FiniteVolumeModel, y: int) -> SectorCheck:
    """P(N_short = y) against P(N = y); their ratio tends to 1 in the volume."""
    if int(y) != y or y < 0:
        raise DomainError(f"y must be an integer >= 0, got {y}")
    y = int(y)
    ls = float(free_canonical_log_pmf(model, y, "short")[y])
    lf = float(free_canonical_log_pmf(model, y, "all")[y])
    return SectorCheck(
        log_pmf_short=ls,
        log_pmf_full=lf,
        pmf_short=math.exp(ls),
        pmf_full=math.exp(lf),
        ratio=math.exp(ls - lf),
    )
