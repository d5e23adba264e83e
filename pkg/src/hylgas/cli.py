"""Command-line front end: phase-diagram tables, validation suites, and
Monte Carlo simulation runs, emitted as CSV or JSON.

Exit codes: 0 on success (all checks passing for `validate`), 1 when a
validation suite fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .condensate import HYLParams, critical_density_hyl, rho_gc, solve_rho_bar
from .errors import DomainError
from .finite_volume import (
    FiniteVolumeModel,
    default_cutoff,
    free_canonical_log_pmf,
    long_loop_density_exact,
    long_mass_pmf,
    total_log_intensity_sum,
)
from .full_hyl import pressure_gap
from .monte_carlo import MetropolisKernel, SamplerConfig, _State, _initial_canonical, _initial_grand
from .thermo import ModelParams, asymptotics_validator, critical_density

SCHEMA_VERSION = "1"
VALIDATE_SUITES = ("asymptotics", "finite-volume", "mc-vs-exact", "pressure-gap")


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _emit(rows: list[dict], header: list[str], args, extra_config: dict) -> None:
    out = Path(args.out) if args.out else None
    if args.output == "csv":
        lines = [",".join(header)]
        lines += [",".join(_fmt(r[h]) for h in header) for r in rows]
        text = "\n".join(lines) + "\n"
    else:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "config": extra_config,
            "columns": header,
            "rows": [[r[h] for h in header] for r in rows],
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _grid(spec: str) -> np.ndarray:
    try:
        start, stop, points = spec.split(":")
        start, stop, points = float(start), float(stop), int(points)
    except ValueError as exc:
        raise DomainError(f"grid must be start:stop:points, got {spec!r}") from exc
    if points < 2 or not start < stop:
        raise DomainError("grid needs points >= 2 and start < stop")
    return np.linspace(start, stop, points)


def _resolved_config(args, keys) -> dict:
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def cmd_phase_diagram(args) -> int:
    params = ModelParams(d=args.d, beta=args.beta)
    grid = _grid(args.grid)
    rows = []
    if args.ensemble == "canonical":
        hyl = HYLParams(b=args.b)
        for rho in grid:
            sol = solve_rho_bar(params, hyl, float(rho))
            rows.append(
                {
                    "rho": float(rho),
                    "rho_bar": sol.rho_bar,
                    "bulk_density": float(rho) - sol.rho_bar,
                    "branch": sol.branch,
                }
            )
        header = ["rho", "rho_bar", "bulk_density", "branch"]
    else:
        if args.a is None:
            raise DomainError("grand-canonical phase diagram needs --a")
        hyl = HYLParams(b=args.b, a=args.a)
        for mu in grid:
            r = rho_gc(params, hyl, float(mu))
            sol = solve_rho_bar(params, hyl, r)
            rows.append(
                {
                    "mu": float(mu),
                    "rho_gc": r,
                    "rho_bar": sol.rho_bar,
                    "bulk_density": r - sol.rho_bar,
                }
            )
        header = ["mu", "rho_gc", "rho_bar", "bulk_density"]
    cfg = _resolved_config(args, ("d", "beta", "a", "b", "ensemble", "grid", "output"))
    _emit(rows, header, args, cfg)
    return 0


def _suite_asymptotics(args) -> list[dict]:
    params = ModelParams(d=args.d, beta=args.beta)
    rows = []
    hs = (1e-3, 1e-4, 1e-5)
    for kind in ("rate_near_rc", "mu_near_rc", "density_near_0"):
        devs = [abs(asymptotics_validator(params, kind, h).ratio - 1.0) for h in hs]
        trend_ok = devs[-1] < devs[0]
        final_tol = 0.15 if args.d == 4 else args.tol
        rows.append(
            {
                "check": f"{kind}-trend",
                "measured": devs[-1],
                "tolerance": final_tol,
                "passed": bool(trend_ok and devs[-1] < final_tol),
            }
        )
    return rows


def _suite_finite_volume(args) -> list[dict]:
    from scipy.special import logsumexp

    params = ModelParams(d=args.d, beta=args.beta)
    V = args.volume or 2000.0
    q = args.q or default_cutoff(V)
    model = FiniteVolumeModel(V=V, params=params, q=q, mu=0.0)
    rows = []
    # sector factorization at small size
    small = FiniteVolumeModel(V=5.0, params=params, q=3, mu=0.0)
    n = 12
    log_all = free_canonical_log_pmf(small, n, "all")
    log_s = free_canonical_log_pmf(small, n, "short")
    log_l = free_canonical_log_pmf(small, n, "long")
    worst = max(
        abs(logsumexp([log_s[k - mm] + log_l[mm] for mm in range(k + 1)]) - log_all[k])
        for k in range(n + 1)
    )
    rows.append({"check": "sector-factorization", "measured": worst, "tolerance": 1e-12,
                 "passed": bool(worst < 1e-12)})
    # heavy-tail law of the long-loop mass
    c_d = params.c_d
    worst_dev = 0.0
    for x in (int(V / 2), int(V), int(2 * V)):
        exact = long_mass_pmf(model, x)
        asym = params.beta * V * c_d / (params.beta * x) ** (0.5 * params.d + 1.0)
        worst_dev = max(worst_dev, abs(exact / asym - 1.0))
    rows.append({"check": "long-mass-heavy-tail", "measured": worst_dev, "tolerance": 0.1,
                 "passed": bool(worst_dev < 0.1)})
    return rows


def _suite_mc_vs_exact(args) -> list[dict]:
    params = ModelParams(d=args.d, beta=args.beta)
    rows = []
    # detailed balance on the N=6 partition space
    from .condensate import HYLParams as HP

    model = FiniteVolumeModel(V=5.0, params=params, q=3, hyl=HP(b=0.7, a=2.4), mu=0.0)
    kernel = MetropolisKernel(model, "canonical", "hyl")
    states = _partition_states(6)
    T = np.zeros((len(states), len(states)))
    index = {s: i for i, s in enumerate(states)}
    for s in states:
        for y, p in kernel.enumerate_transitions(dict(s)).items():
            if y != s:
                T[index[s], index[y]] += p
    log_pi = np.array([kernel.log_weight(dict(s)) for s in states])
    pi = np.exp(log_pi - log_pi.max())
    pi /= pi.sum()
    flows = pi[:, None] * T
    worst = float(np.max(np.abs(flows - flows.T)))
    rows.append({"check": "detailed-balance-N6", "measured": worst, "tolerance": 1e-12,
                 "passed": bool(worst < 1e-12)})
    # supercritical estimate vs the exact engine at moderate volume
    from .monte_carlo import estimate_long_density

    V = args.volume or 300.0
    q = args.q or int(math.ceil(V**0.7))
    rho = 2.2 * critical_density(params)
    N = int(rho * V)
    hyl = HP(b=args.b)
    m = FiniteVolumeModel(V=V, params=params, q=q, hyl=hyl, mu=0.0)
    exact = long_loop_density_exact(m, N)
    cfg = SamplerConfig(seed=args.seed, sweeps=args.sweeps or 300_000,
                        burn_in=args.burn_in or 50_000, thin=10)
    rep = estimate_long_density(m, N, cfg)
    z = abs(rep.mean - exact) / rep.std_error if rep.std_error > 0 else math.inf
    rows.append({"check": "supercritical-long-density-z", "measured": z, "tolerance": 3.0,
                 "passed": bool(z <= 3.0)})
    return rows


def _suite_pressure_gap(args) -> list[dict]:
    params = ModelParams(d=args.d, beta=args.beta)
    hyl = HYLParams(b=args.b, a=args.a if args.a is not None else 2.0 * args.b)
    gap = pressure_gap(params, hyl, args.mu or 0.0, jmax=300, stability_tol=1e-6)
    return [{"check": "pressure-gap-witness", "measured": gap, "tolerance": -1e-8,
             "passed": bool(gap < -1e-8)}]


def _partition_states(N: int):
    def rec(n, m):
        if n == 0:
            yield ()
            return
        for first in range(min(n, m), 0, -1):
            for rest in rec(n - first, first):
                yield (first,) + rest

    out = []
    for part in rec(N, N):
        counts: dict[int, int] = {}
        for p in part:
            counts[p] = counts.get(p, 0) + 1
        out.append(tuple(sorted(counts.items())))
    return out


def cmd_validate(args) -> int:
    suites = {
        "asymptotics": _suite_asymptotics,
        "finite-volume": _suite_finite_volume,
        "mc-vs-exact": _suite_mc_vs_exact,
        "pressure-gap": _suite_pressure_gap,
    }
    rows = suites[args.suite](args)
    header = ["check", "measured", "tolerance", "passed"]
    cfg = _resolved_config(args, ("suite", "d", "beta", "a", "b", "mu", "volume", "q",
                                  "seed", "sweeps", "burn_in", "tol"))
    _emit(rows, header, args, cfg)
    return 0 if all(r["passed"] for r in rows) else 1


def cmd_simulate(args) -> int:
    params = ModelParams(d=args.d, beta=args.beta)
    V = args.volume
    q = args.q or default_cutoff(V)
    hyl = HYLParams(b=args.b, a=args.a if args.a is not None else 0.0)
    cfg = SamplerConfig(seed=args.seed, sweeps=args.sweeps, burn_in=args.burn_in,
                        n_chains=args.chains, thin=args.thin)
    if args.ensemble == "canonical":
        if args.N is not None:
            N = args.N
        elif args.rho is not None:
            N = int(args.rho * V)
        else:
            raise DomainError("canonical simulation needs --rho or --N")
        model = FiniteVolumeModel(V=V, params=params, q=q, hyl=hyl, mu=0.0)
        kernel = MetropolisKernel(model, "canonical", "hyl" if hyl.b > 0 else "free")
        init = _initial_canonical(model, N)
    else:
        if args.mu is None:
            raise DomainError("grand-canonical simulation needs --mu")
        model = FiniteVolumeModel(V=V, params=params, q=q, hyl=hyl, mu=args.mu)
        interaction = "hyl" if hyl.b > 0 else ("pmf" if hyl.a > 0 else "free")
        kernel = MetropolisKernel(model, "grand", interaction)
        init = _initial_grand(model, interaction)

    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])
    state = _State(dict(init), q)
    trace_rows = []
    vals = []
    acc: dict[str, int] = {}
    prop: dict[str, int] = {}
    for sweep in range(cfg.sweeps):
        ok, move = kernel.step(state, rng)
        prop[move] = prop.get(move, 0) + 1
        if ok:
            acc[move] = acc.get(move, 0) + 1
        if sweep >= cfg.burn_in and (sweep - cfg.burn_in) % cfg.thin == 0:
            n_long = sum(j * n for j, n in state.counts.items() if j >= q)
            largest = max(state.counts) if state.counts else 0
            energy = -kernel.log_weight(state.counts)
            trace_rows.append(
                {"sweep": sweep, "N_long": n_long, "largest_loop": largest, "energy": energy}
            )
            vals.append(n_long / V)
    vals = np.asarray(vals)
    nb = max(1, min(32, vals.size // 16))
    batches = [c.mean() for c in np.array_split(vals, nb) if c.size]
    se = float(np.std(batches, ddof=1) / math.sqrt(len(batches))) if len(batches) > 1 else float("nan")
    report = {
        "schema_version": SCHEMA_VERSION,
        "config": _resolved_config(args, ("ensemble", "d", "beta", "a", "b", "rho", "mu",
                                          "N", "volume", "q", "seed", "chains", "sweeps",
                                          "burn_in", "thin")),
        "estimate": {
            "long_density_mean": float(vals.mean()) if vals.size else float("nan"),
            "std_error": se,
            "n_samples": int(vals.size),
            "acceptance_rates": {m: acc.get(m, 0) / prop[m] for m in prop if m != "none"},
        },
    }
    prefix = Path(args.out) if args.out else Path("simulate")
    trace_path = prefix.with_suffix(".trace.csv")
    report_path = prefix.with_suffix(".report.json")
    header = ["sweep", "N_long", "largest_loop", "energy"]
    lines = [",".join(header)] + [",".join(_fmt(r[h]) for h in header) for r in trace_rows]
    trace_path.write_text("\n".join(lines) + "\n")
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(f"wrote {trace_path} and {report_path}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hylgas",
        description="Condensate structure of the interacting bosonic loop soup: "
        "phase diagrams, exact finite-volume checks, Monte Carlo runs.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--d", type=int, default=3, help="spatial dimension (>= 3)")
        p.add_argument("--beta", type=float, default=1.0, help="inverse temperature")
        p.add_argument("--a", type=float, default=None, help="mean-field strength")
        p.add_argument("--b", type=float, default=1.0, help="counter-term strength")
        p.add_argument("--output", choices=("csv", "json"), default="csv")
        p.add_argument("--out", type=str, default=None, help="output path (stdout if omitted)")

    p_pd = sub.add_parser("phase-diagram", help="condensate density tables over a grid")
    common(p_pd)
    p_pd.add_argument("--ensemble", choices=("canonical", "gc"), default="canonical")
    p_pd.add_argument("--grid", type=str, required=True, help="start:stop:points")
    p_pd.set_defaults(func=cmd_phase_diagram)

    p_v = sub.add_parser("validate", help="run a named validation suite")
    common(p_v)
    p_v.add_argument("suite", choices=VALIDATE_SUITES)
    p_v.add_argument("--mu", type=float, default=None)
    p_v.add_argument("--volume", type=float, default=None)
    p_v.add_argument("--q", type=int, default=None)
    p_v.add_argument("--seed", type=int, default=7)
    p_v.add_argument("--sweeps", type=int, default=None)
    p_v.add_argument("--burn-in", dest="burn_in", type=int, default=None)
    p_v.add_argument("--tol", type=float, default=0.02)
    p_v.set_defaults(func=cmd_validate)

    p_s = sub.add_parser("simulate", help="Monte Carlo sampling run")
    common(p_s)
    p_s.add_argument("--ensemble", choices=("canonical", "gc"), default="canonical")
    p_s.add_argument("--rho", type=float, default=None)
    p_s.add_argument("--mu", type=float, default=None)
    p_s.add_argument("--N", type=int, default=None)
    p_s.add_argument("--volume", "--V", type=float, default=1000.0)
    p_s.add_argument("--q", type=int, default=None)
    p_s.add_argument("--seed", type=int, default=0)
    p_s.add_argument("--chains", type=int, default=1)
    p_s.add_argument("--sweeps", type=int, default=100_000)
    p_s.add_argument("--burn-in", dest="burn_in", type=int, default=10_000)
    p_s.add_argument("--thin", type=int, default=10)
    p_s.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        parser.exit(2, f"error: {exc}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
