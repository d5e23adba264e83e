"""Metropolis sampling of cycle-count ensembles.

States are occupation maps {loop length: count}.  The canonical chain fixes
N = sum j n_j and uses three moves:

* split: pick a loop of length j >= 2 uniformly, cut it at a uniform point;
* merge: pick an unordered pair of loops uniformly, concatenate them;
* reslice: pick an ordered pair of distinct loops, move a geometric number
  of units from source to target (mean ~sqrt(V) when the source is a long
  loop, matching the fluctuation scale of the long-loop mass).

Grand-canonical chains add insert/delete with a power-law length proposal
capped at j_cap.  Detailed balance holds w.r.t. the full target: a delete of
a loop longer than j_cap has no reverse insert and is auto-rejected, while
merges still reach arbitrary lengths reversibly.

Acceptance uses exact proposal-ratio bookkeeping; the energy difference per
move touches O(1) occupation numbers.  Detailed balance is enforced by unit
tests which assemble the full transition matrix on enumerable state spaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Literal

import numpy as np

from .errors import DomainError
from .finite_volume import CycleCounts, FiniteVolumeModel, log_intensity

__all__ = [
    "SamplerConfig",
    "EstimateReport",
    "MetropolisKernel",
    "sample_canonical_hyl",
    "sample_grand_canonical",
    "estimate_long_density",
    "estimate_gc_density",
]

CANONICAL_MOVES = ("split", "merge", "reslice")
GRAND_MOVES = CANONICAL_MOVES + ("insert", "delete")


@dataclass(frozen=True)
class SamplerConfig:
    seed: int
    sweeps: int
    burn_in: int = 0
    n_chains: int = 1
    move_weights: dict[str, float] | None = None  # defaults per ensemble
    j_cap: int | None = None  # grand-canonical insert cap; default ~8V
    thin: int = 1

    def __post_init__(self) -> None:
        if self.n_chains < 1:
            raise DomainError("n_chains must be >= 1")
        if not 0 <= self.burn_in < self.sweeps:
            raise DomainError("burn_in must satisfy 0 <= burn_in < sweeps")
        if self.thin < 1:
            raise DomainError("thin must be >= 1")
        if self.move_weights is not None:
            total = sum(self.move_weights.values())
            if abs(total - 1.0) > 1e-12 or any(w < 0 for w in self.move_weights.values()):
                raise DomainError("move_weights must be nonnegative and sum to 1")


@dataclass(frozen=True)
class EstimateReport:
    mean: float
    std_error: float
    ess: float
    acceptance_rates: dict[str, float]
    n_samples: int

    def __post_init__(self) -> None:
        if self.std_error < 0.0:
            raise DomainError("std_error must be >= 0")


class _State:
    """Mutable occupation state with O(1)-maintained aggregates."""

    __slots__ = ("counts", "q", "M", "M2", "N", "SC")

    def __init__(self, counts: dict[int, int], q: int):
        self.counts = {j: n for j, n in counts.items() if n > 0}
        self.q = q
        self.M = sum(self.counts.values())
        self.M2 = sum(n for j, n in self.counts.items() if j >= 2)
        self.N = sum(j * n for j, n in self.counts.items())
        self.SC = sum(j * j * n * n for j, n in self.counts.items() if j >= q)

    def get(self, j: int) -> int:
        return self.counts.get(j, 0)

    def apply(self, delta: dict[int, int]) -> None:
        for j, dn in delta.items():
            if dn == 0:
                continue
            old = self.counts.get(j, 0)
            new = old + dn
            if new < 0:
                raise DomainError(f"negative occupation at length {j}")
            if new:
                self.counts[j] = new
            else:
                self.counts.pop(j, None)
            self.M += dn
            if j >= 2:
                self.M2 += dn
            self.N += j * dn
            if j >= self.q:
                self.SC += j * j * (new * new - old * old)

    def pick_loop(self, rng, min_len: int = 1) -> int:
        """Length of a uniformly chosen loop (among those with length >= min_len)."""
        pool = self.M if min_len == 1 else self.M2
        u = rng.integers(pool)
        acc = 0
        for j, n in self.counts.items():
            if j >= min_len:
                acc += n
                if u < acc:
                    return j
        raise AssertionError("loop pick fell through")

    def snapshot(self) -> CycleCounts:
        return CycleCounts(dict(self.counts))


def _default_weights(ensemble: str) -> dict[str, float]:
    if ensemble == "canonical":
        return {"split": 0.4, "merge": 0.4, "reslice": 0.2}
    return {"split": 0.25, "merge": 0.25, "reslice": 0.1, "insert": 0.2, "delete": 0.2}


class MetropolisKernel:
    """Single-proposal Metropolis kernel for cycle-count ensembles."""

    def __init__(
        self,
        model: FiniteVolumeModel,
        ensemble: Literal["canonical", "grand"] = "canonical",
        interaction: Literal["free", "pmf", "hyl"] = "hyl",
        move_weights: dict[str, float] | None = None,
        j_cap: int | None = None,
    ):
        self.model = model
        self.ensemble = ensemble
        self.interaction = interaction
        if ensemble not in ("canonical", "grand"):
            raise DomainError(f"unknown ensemble {ensemble!r}")
        if interaction not in ("free", "pmf", "hyl"):
            raise DomainError(f"unknown interaction {interaction!r}")
        if ensemble == "grand":
            if interaction == "free":
                if model.mu > 0.0:
                    raise DomainError("the free grand-canonical measure requires mu <= 0")
            else:
                if model.hyl is None:
                    raise DomainError("pmf/hyl interactions need hyl parameters")
                if interaction == "hyl":
                    model.hyl.require_grand_canonical()
                elif model.hyl.a <= 0.0:
                    raise DomainError("pmf interaction needs a > 0")
        if interaction == "hyl" and model.hyl is None:
            raise DomainError("hyl interaction needs hyl parameters")
        p = model.params
        self._log_lam_const = (
            math.log(model.V) - 0.5 * p.d * math.log(2.0 * math.pi * p.beta)
        )
        self._lam_exp = 0.5 * p.d + 1.0
        self._mu_term = p.beta * model.mu if ensemble == "grand" else 0.0
        b = model.hyl.b if model.hyl is not None else 0.0
        self._t_sc = 0.5 * b * p.beta / model.V if interaction == "hyl" else 0.0
        a = model.hyl.a if model.hyl is not None else 0.0
        self._t_n2 = (
            -0.5 * a * p.beta / model.V
            if (ensemble == "grand" and interaction in ("pmf", "hyl"))
            else 0.0
        )
        self.weights = dict(move_weights or _default_weights(ensemble))
        allowed = GRAND_MOVES if ensemble == "grand" else CANONICAL_MOVES
        if set(self.weights) - set(allowed):
            raise DomainError(f"moves {set(self.weights) - set(allowed)} not allowed for {ensemble}")
        self._move_names = tuple(self.weights)
        probs = np.array([self.weights[m] for m in self._move_names])
        if abs(probs.sum() - 1.0) > 1e-12:
            raise DomainError("move weights must sum to 1")
        self._move_cdf = np.cumsum(probs)
        self._theta_long = 1.0 - 1.0 / math.sqrt(model.V)
        if ensemble == "grand":
            cap = j_cap if j_cap is not None else max(1000, int(8 * model.V))
            j = np.arange(1, cap + 1, dtype=float)
            w = j ** (-self._lam_exp)
            self._ins_logp = np.log(w) - math.log(w.sum())
            self._ins_cdf = np.cumsum(w / w.sum())
            self.j_cap = cap
        else:
            self.j_cap = None

    # -- target weights ---------------------------------------------------

    def log_lam(self, j: int) -> float:
        return self._log_lam_const - self._lam_exp * math.log(j) + self._mu_term * j

    def log_weight(self, counts: dict[int, int]) -> float:
        """Full unnormalized log target weight of a configuration."""
        lw = 0.0
        N = 0
        for j, n in counts.items():
            lw += n * self.log_lam(j) - math.lgamma(n + 1)
            N += j * n
            if j >= self.model.q:
                lw += self._t_sc * j * j * n * n
        lw += self._t_n2 * N * N
        return lw

    def _dlog_pi(self, state: _State, delta: dict[int, int]) -> float:
        d = 0.0
        dN = 0
        for j, dn in delta.items():
            if dn == 0:
                continue
            old = state.get(j)
            new = old + dn
            d += dn * self.log_lam(j) + math.lgamma(old + 1) - math.lgamma(new + 1)
            dN += j * dn
            if j >= self.model.q:
                d += self._t_sc * j * j * (new * new - old * old)
        if dN and self._t_n2:
            d += self._t_n2 * ((state.N + dN) ** 2 - state.N**2)
        return d

    # -- geometric reslice step -------------------------------------------

    def _theta(self, source_len: int) -> float:
        return self._theta_long if source_len >= self.model.q else 0.0

    def _log_geo(self, delta: int, theta: float) -> float:
        if delta < 1:
            return -math.inf
        if theta == 0.0:
            return 0.0 if delta == 1 else -math.inf
        return (delta - 1) * math.log(theta) + math.log1p(-theta)

    # -- proposals ----------------------------------------------------------

    def propose(self, state: _State, rng) -> tuple[dict[int, int], float, float, str] | None:
        """One proposal: (delta, log q_fwd, log q_rev, move) or None (stay)."""
        move = self._move_names[int(np.searchsorted(self._move_cdf, rng.random()))]
        lw = {m: math.log(w) if w > 0 else -math.inf for m, w in self.weights.items()}
        if move == "split":
            if state.M2 < 1:
                return None
            j = state.pick_loop(rng, min_len=2)
            c = int(rng.integers(1, j))
            a, b = min(c, j - c), max(c, j - c)
            k = 1 if a == b else 2
            delta = {j: -1}
            delta[a] = delta.get(a, 0) + 1
            delta[b] = delta.get(b, 0) + 1
            logq_f = lw["split"] + math.log(state.get(j) / state.M2) + math.log(k / (j - 1))
            na, nb = state.get(a) + delta[a], state.get(b) + delta[b]
            pairs = 0.5 * na * (na - 1) if a == b else na * nb
            m_new = state.M + 1
            logq_r = lw["merge"] + math.log(pairs) - math.log(0.5 * m_new * (m_new - 1))
            return delta, logq_f, logq_r, "split"
        if move == "merge":
            if state.M < 2:
                return None
            a = state.pick_loop(rng)
            # second pick uniform among the remaining loops
            u = rng.integers(state.M - 1)
            acc = 0
            b = -1
            for jj, n in state.counts.items():
                acc += n - (1 if jj == a else 0)
                if u < acc:
                    b = jj
                    break
            j = a + b
            delta = {j: 1}
            delta[a] = delta.get(a, 0) - 1
            delta[b] = delta.get(b, 0) - 1
            na, nb = state.get(a), state.get(b)
            pairs = 0.5 * na * (na - 1) if a == b else na * nb
            logq_f = lw["merge"] + math.log(pairs) - math.log(0.5 * state.M * (state.M - 1))
            nj_new = state.get(j) + delta.get(j, 0)
            m2_new = state.M2 + sum(dn for jj, dn in delta.items() if jj >= 2)
            k = 1 if a == b else 2
            logq_r = lw["split"] + math.log(nj_new / m2_new) + math.log(k / (j - 1))
            return delta, logq_f, logq_r, "merge"
        if move == "reslice":
            if state.M < 2:
                return None
            a = state.pick_loop(rng)
            u = rng.integers(state.M - 1)
            acc = 0
            b = -1
            for jj, n in state.counts.items():
                acc += n - (1 if jj == a else 0)
                if u < acc:
                    b = jj
                    break
            theta = self._theta(a)
            step = int(rng.geometric(1.0 - theta)) if theta > 0.0 else 1
            if step >= a:
                return None  # source would vanish; invalid proposal
            src_new, tgt_new = a - step, b + step
            delta: dict[int, int] = {}
            for jj, dn in ((a, -1), (src_new, 1), (b, -1), (tgt_new, 1)):
                delta[jj] = delta.get(jj, 0) + dn
            logq_f = (
                lw["reslice"]
                + math.log(state.get(a) / state.M)
                + math.log((state.get(b) - (1 if a == b else 0)) / (state.M - 1))
                + self._log_geo(step, theta)
            )
            n_src = state.get(tgt_new) + delta.get(tgt_new, 0)
            n_tgt = state.get(src_new) + delta.get(src_new, 0)
            logq_r = (
                lw["reslice"]
                + math.log(n_src / state.M)
                + math.log((n_tgt - (1 if tgt_new == src_new else 0)) / (state.M - 1))
                + self._log_geo(step, self._theta(tgt_new))
            )
            return delta, logq_f, logq_r, "reslice"
        if move == "insert":
            u = rng.random()
            j = int(np.searchsorted(self._ins_cdf, u) + 1)
            delta = {j: 1}
            logq_f = lw["insert"] + float(self._ins_logp[j - 1])
            logq_r = lw["delete"] + math.log((state.get(j) + 1) / (state.M + 1))
            return delta, logq_f, logq_r, "insert"
        if move == "delete":
            if state.M < 1:
                return None
            j = state.pick_loop(rng)
            delta = {j: -1}
            logq_f = lw["delete"] + math.log(state.get(j) / state.M)
            logq_r = lw["insert"] + float(self._ins_logp[j - 1])
            return delta, logq_f, logq_r, "delete"
        raise AssertionError(move)

    def step(self, state: _State, rng) -> tuple[bool, str]:
        """One Metropolis step in place; returns (accepted, move_name)."""
        prop = self.propose(state, rng)
        if prop is None:
            return False, "none"
        delta, logq_f, logq_r, move = prop
        log_alpha = self._dlog_pi(state, delta) + logq_r - logq_f
        if log_alpha >= 0.0 or rng.random() < math.exp(log_alpha):
            state.apply(delta)
            return True, move
        return False, move

    # -- exact transition matrix on enumerable spaces -----------------------

    def enumerate_transitions(self, counts: dict[int, int]) -> dict[tuple, float]:
        """Aggregated transition probabilities from one state (diagonal excluded)."""
        state = _State(dict(counts), self.model.q)
        out: dict[tuple, float] = {}
        lw_x = self.log_weight(state.counts)

        def push(delta: dict[int, int], q_f: float, logq_f: float, logq_r: float) -> None:
            y = dict(state.counts)
            for jj, dn in delta.items():
                y[jj] = y.get(jj, 0) + dn
                if y[jj] == 0:
                    del y[jj]
            log_alpha = min(0.0, self.log_weight(y) - lw_x + logq_r - logq_f)
            key = tuple(sorted(y.items()))
            out[key] = out.get(key, 0.0) + q_f * math.exp(log_alpha)

        w = self.weights
        if w.get("split", 0.0) > 0.0 and state.M2 >= 1:
            for j, n in state.counts.items():
                if j < 2:
                    continue
                for a in range(1, j // 2 + 1):
                    b = j - a
                    k = 1 if a == b else 2
                    delta = {j: -1}
                    delta[a] = delta.get(a, 0) + 1
                    delta[b] = delta.get(b, 0) + 1
                    logq_f = math.log(w["split"] * (n / state.M2) * (k / (j - 1)))
                    na, nb = state.get(a) + delta[a], state.get(b) + delta[b]
                    pairs = 0.5 * na * (na - 1) if a == b else na * nb
                    m_new = state.M + 1
                    logq_r = math.log(w.get("merge", 0.0) * pairs / (0.5 * m_new * (m_new - 1))) \
                        if w.get("merge", 0.0) > 0 else -math.inf
                    push(delta, math.exp(logq_f), logq_f, logq_r)
        if w.get("merge", 0.0) > 0.0 and state.M >= 2:
            lengths = sorted(state.counts)
            for ia, a in enumerate(lengths):
                for b in lengths[ia:]:
                    na, nb = state.get(a), state.get(b)
                    pairs = 0.5 * na * (na - 1) if a == b else na * nb
                    if pairs <= 0:
                        continue
                    j = a + b
                    delta = {j: 1}
                    delta[a] = delta.get(a, 0) - 1
                    delta[b] = delta.get(b, 0) - 1
                    q_f = w["merge"] * pairs / (0.5 * state.M * (state.M - 1))
                    nj_new = state.get(j) + delta.get(j, 0)
                    m2_new = state.M2 + sum(dn for jj, dn in delta.items() if jj >= 2)
                    k = 1 if a == b else 2
                    logq_r = math.log(w.get("split", 0.0) * (nj_new / m2_new) * (k / (j - 1))) \
                        if w.get("split", 0.0) > 0 else -math.inf
                    push(delta, q_f, math.log(q_f), logq_r)
        if w.get("reslice", 0.0) > 0.0 and state.M >= 2:
            for a, na in state.counts.items():
                for b, nb in state.counts.items():
                    pick = na * (nb - (1 if a == b else 0))
                    if pick <= 0:
                        continue
                    p_pick = w["reslice"] * pick / (state.M * (state.M - 1))
                    theta = self._theta(a)
                    for step in range(1, a):
                        lgeo = self._log_geo(step, theta)
                        if lgeo == -math.inf:
                            continue
                        delta = {}
                        for jj, dn in ((a, -1), (a - step, 1), (b, -1), (b + step, 1)):
                            delta[jj] = delta.get(jj, 0) + dn
                        q_f = p_pick * math.exp(lgeo)
                        n_src = state.get(b + step) + delta.get(b + step, 0)
                        n_tgt = state.get(a - step) + delta.get(a - step, 0)
                        rev_pick = n_src * (n_tgt - (1 if b + step == a - step else 0))
                        logq_r = (
                            math.log(w["reslice"] * rev_pick / (state.M * (state.M - 1)))
                            + self._log_geo(step, self._theta(b + step))
                        ) if rev_pick > 0 else -math.inf
                        push(delta, q_f, math.log(q_f), logq_r)
        if w.get("insert", 0.0) > 0.0:
            for j in range(1, self.j_cap + 1):
                delta = {j: 1}
                q_f = w["insert"] * math.exp(float(self._ins_logp[j - 1]))
                logq_r = math.log(w.get("delete", 0.0) * (state.get(j) + 1) / (state.M + 1)) \
                    if w.get("delete", 0.0) > 0 else -math.inf
                push(delta, q_f, math.log(q_f), logq_r)
        if w.get("delete", 0.0) > 0.0 and state.M >= 1:
            for j, n in state.counts.items():
                delta = {j: -1}
                q_f = w["delete"] * n / state.M
                logq_r = (math.log(w.get("insert", 0.0)) + float(self._ins_logp[j - 1])) \
                    if (w.get("insert", 0.0) > 0 and j <= self.j_cap) else -math.inf
                push(delta, q_f, math.log(q_f), logq_r)
        return out


def _chain_rngs(cfg: SamplerConfig):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(cfg.n_chains)]


def _with_long_loop(n_total: int, m0: int, q: int) -> dict[int, int]:
    if max(q, 2) <= m0 <= n_total:
        counts = {m0: 1}
        if n_total > m0:
            counts[1] = n_total - m0
        return counts
    return {1: int(n_total)} if n_total > 0 else {}


def _initial_canonical(model: FiniteVolumeModel, N: int) -> dict[int, int]:
    """Phase-aware warm start: a macroscopic loop sized by the variational
    prediction when one is expected, all unit loops otherwise.

    Nucleating a macroscopic loop from small ones crosses an exponentially
    suppressed transition state, so cold starts cannot equilibrate the
    condensed phase; the initializer only accelerates equilibration and the
    stationary law is untouched (no guarantee survives exactly at the
    coexistence density, where the basins tie).
    """
    from . import condensate, thermo

    rho = N / model.V
    if model.hyl is not None and model.hyl.b > 0.0:
        target = condensate.solve_rho_bar(model.params, model.hyl, rho).rho_bar
    else:
        target = max(rho - thermo.critical_density(model.params), 0.0)
    return _with_long_loop(int(N), int(round(target * model.V)), int(model.q))


def _initial_grand(model: FiniteVolumeModel, interaction: str) -> dict[int, int]:
    from . import condensate, thermo

    params = model.params
    if interaction == "free":
        rho_star, rho_bar = thermo.density(params, model.mu), 0.0
    elif interaction == "pmf":
        rho_star = _pmf_density_argmax(params, model.hyl, model.mu)
        rho_bar = max(rho_star - thermo.critical_density(params), 0.0)
    else:
        rho_star = condensate.rho_gc(params, model.hyl, model.mu)
        sol = condensate.solve_rho_bar(params, model.hyl, rho_star)
        rho_bar = sol.rho_bar
    n_total = max(1, int(round(rho_star * model.V)))
    return _with_long_loop(n_total, int(round(rho_bar * model.V)), int(model.q))


def _pmf_density_argmax(params, hyl, mu: float) -> float:
    from . import thermo

    beta = params.beta
    hi = max(2.0 * thermo.critical_density(params), 2.0 * abs(mu) / hyl.a + 0.1)
    xs = np.linspace(1e-6, hi, 600)
    vals = [beta * mu * x - 0.5 * hyl.a * beta * x * x - thermo.rate_I(params, 0.0, float(x))
            for x in xs]
    return float(xs[int(np.argmax(vals))])


def sample_canonical_hyl(model: FiniteVolumeModel, N: int, cfg: SamplerConfig) -> Iterator[CycleCounts]:
    """Markov chain on {sum j n_j = N} targeting the counterterm-tilted law.

    Yields a snapshot every ``cfg.thin`` sweeps (one proposal per sweep) from
    the first chain; burn-in sweeps are not yielded.
    """
    if N < 1:
        raise DomainError(f"canonical sampling needs N >= 1, got {N}")
    kernel = MetropolisKernel(model, "canonical", "hyl" if model.hyl and model.hyl.b else "free",
                              cfg.move_weights)
    rng = _chain_rngs(cfg)[0]
    state = _State(_initial_canonical(model, int(N)), model.q)
    for sweep in range(cfg.sweeps):
        kernel.step(state, rng)
        if __debug__ and state.N != N:
            raise AssertionError("canonical move changed the particle number")
        if sweep >= cfg.burn_in and (sweep - cfg.burn_in) % cfg.thin == 0:
            yield state.snapshot()


def sample_grand_canonical(
    model: FiniteVolumeModel,
    cfg: SamplerConfig,
    interaction: Literal["free", "pmf", "hyl"],
) -> Iterator[CycleCounts]:
    """Grand-canonical chain with insert/delete moves on top of the canonical set."""
    kernel = MetropolisKernel(model, "grand", interaction, cfg.move_weights, cfg.j_cap)
    rng = _chain_rngs(cfg)[0]
    state = _State(_initial_grand(model, interaction), model.q)
    for sweep in range(cfg.sweeps):
        kernel.step(state, rng)
        if sweep >= cfg.burn_in and (sweep - cfg.burn_in) % cfg.thin == 0:
            yield state.snapshot()


def _batch_means_report(series_per_chain: list[np.ndarray], acc: dict[str, float],
                        n_batches: int = 32) -> EstimateReport:
    all_samples = np.concatenate(series_per_chain)
    mean = float(all_samples.mean())
    batch_means = []
    for series in series_per_chain:
        nb = min(n_batches, max(1, series.size // 16))
        for chunk in np.array_split(series, nb):
            if chunk.size:
                batch_means.append(chunk.mean())
    batch_means = np.asarray(batch_means)
    if batch_means.size > 1:
        se = float(batch_means.std(ddof=1) / math.sqrt(batch_means.size))
    else:
        se = float("nan")
    var_naive = float(all_samples.var(ddof=1)) if all_samples.size > 1 else 0.0
    ess = var_naive / se**2 if se and se > 0 and var_naive > 0 else float(all_samples.size)
    ess = min(ess, float(all_samples.size))
    return EstimateReport(mean=mean, std_error=se, ess=ess, acceptance_rates=acc,
                          n_samples=int(all_samples.size))


def _run_estimator(kernel: MetropolisKernel, init: dict[int, int], cfg: SamplerConfig,
                   observable) -> EstimateReport:
    series = []
    acc_count: dict[str, int] = {}
    prop_count: dict[str, int] = {}
    for rng in _chain_rngs(cfg):
        state = _State(dict(init), kernel.model.q)
        vals = np.empty((cfg.sweeps - cfg.burn_in + cfg.thin - 1) // cfg.thin)
        k = 0
        for sweep in range(cfg.sweeps):
            ok, move = kernel.step(state, rng)
            prop_count[move] = prop_count.get(move, 0) + 1
            if ok:
                acc_count[move] = acc_count.get(move, 0) + 1
            if sweep >= cfg.burn_in and (sweep - cfg.burn_in) % cfg.thin == 0:
                vals[k] = observable(state)
                k += 1
        series.append(vals[:k])
    rates = {
        m: acc_count.get(m, 0) / prop_count[m] for m in prop_count if m != "none"
    }
    return _batch_means_report(series, rates)


def estimate_long_density(model: FiniteVolumeModel, N: int, cfg: SamplerConfig) -> EstimateReport:
    """Monte Carlo estimate of E[N_long]/V under the canonical HYL law."""
    if N < 1:
        raise DomainError(f"canonical sampling needs N >= 1, got {N}")
    kernel = MetropolisKernel(model, "canonical", "hyl" if model.hyl and model.hyl.b else "free",
                              cfg.move_weights)
    q, V = model.q, model.V

    def observable(state: _State) -> float:
        return sum(j * n for j, n in state.counts.items() if j >= q) / V

    return _run_estimator(kernel, _initial_canonical(model, int(N)), cfg, observable)


def estimate_gc_density(model: FiniteVolumeModel, cfg: SamplerConfig,
                        interaction: Literal["free", "pmf", "hyl"]) -> EstimateReport:
    """Monte Carlo estimate of the total density N/V in a grand-canonical run."""
    kernel = MetropolisKernel(model, "grand", interaction, cfg.move_weights, cfg.j_cap)
    V = model.V
    return _run_estimator(kernel, _initial_grand(model, interaction), cfg, lambda st: st.N / V)
