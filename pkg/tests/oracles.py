"""Independent oracles used to freeze expected values.

These deliberately avoid the code paths of the package under test:
polylogarithms come from a direct series with an Euler-Maclaurin tail
correction, Lambert W from plain bisection, the rate function from a
grid Legendre transform, and compound-Poisson pmfs from explicit
partition enumeration.
"""

from __future__ import annotations

import math
from functools import lru_cache


def em_polylog(s: float, z: float, n_direct: int = 400) -> float:
    """Li_s(z) via direct series plus Euler-Maclaurin tail correction.

    Works for z in (0, 1]; for z=1 this is a zeta oracle.  The tail
    sum_{j>=J} e^{-a j} j^{-s} (a = -ln z >= 0) is approximated by
    integral + f/2 - f'/12 + f'''/720, with the integral done by
    adaptive Simpson on a decaying integrand.
    """
    if z <= 0.0 or z > 1.0:
        raise ValueError("oracle domain is 0 < z <= 1")
    a = -math.log(z)
    J = n_direct

    head = math.fsum(math.exp(-a * j) * j ** (-s) for j in range(1, J))

    def f(t: float) -> float:
        return math.exp(-a * t) * t ** (-s)

    def fp(t: float) -> float:
        return math.exp(-a * t) * (-a * t ** (-s) - s * t ** (-s - 1.0))

    def fppp(t: float) -> float:
        e = math.exp(-a * t)
        return e * (
            -(a**3) * t ** (-s)
            - 3.0 * a**2 * s * t ** (-s - 1.0)
            - 3.0 * a * s * (s + 1.0) * t ** (-s - 2.0)
            - s * (s + 1.0) * (s + 2.0) * t ** (-s - 3.0)
        )

    if a == 0.0:
        integral = J ** (1.0 - s) / (s - 1.0)  # requires s > 1 at z=1
    else:
        integral = _simpson_tail(f, J, a)
    tail = integral + 0.5 * f(J) - fp(J) / 12.0 + fppp(J) / 720.0
    return head + tail


def _simpson_tail(f, lo: float, a: float) -> float:
    # integral of e^{-a t} t^{-s} from lo to infinity via the substitution
    # t = e^u, which keeps the integrand smooth on an O(10) range for any a
    u_lo = math.log(lo)
    u_hi = math.log(max(2.0 * lo, 1.0 / a)) + 5.0

    def g(u: float) -> float:
        t = math.exp(u)
        return f(t) * t

    return _simpson_panel(g, u_lo, u_hi, 1 << 15)


def _simpson_panel(f, a: float, b: float, n: int) -> float:
    h = (b - a) / n
    acc = f(a) + f(b)
    for i in range(1, n):
        acc += f(a + i * h) * (4.0 if i % 2 else 2.0)
    return acc * h / 3.0


def bisect_lambert_w_m1(x: float, iters: int = 200) -> float:
    """W_-1(x) on [-1/e, 0) by pure bisection on y e^y - x over y <= -1."""
    lo, hi = -2.0, -1.0
    while lo * math.exp(lo) - x <= 0.0:
        lo *= 2.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid * math.exp(mid) - x <= 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def legendre_rate(pressure_of_mu, beta: float, mu_ref: float, x: float,
                  t_hi: float | None = None, rounds: int = 4, points: int = 2001) -> float:
    """sup_t { x t - phi(t) } with phi(t) = P(mu_ref + t/beta) - P(mu_ref).

    phi is +inf for t > -beta * mu_ref, so the scan runs on
    [t_lo, -beta*mu_ref] with iterative grid refinement around the argmax.
    ``pressure_of_mu`` must accept any mu <= 0.
    """
    p_ref = pressure_of_mu(mu_ref)
    t_max = -beta * mu_ref

    def objective(t: float) -> float:
        return x * t - (pressure_of_mu(mu_ref + t / beta) - p_ref)

    lo = t_max - (abs(t_max) + 50.0 * beta) if t_hi is None else -t_hi
    hi = t_max
    best_t, best = hi, objective(hi)
    for _ in range(rounds):
        step = (hi - lo) / (points - 1)
        for i in range(points):
            t = lo + i * step
            v = objective(t)
            if v > best:
                best, best_t = v, t
        lo = max(lo, best_t - 2.0 * step)
        hi = min(t_max, best_t + 2.0 * step)
    return best


@lru_cache(maxsize=None)
def partitions(n: int, min_part: int = 1) -> tuple[tuple[int, ...], ...]:
    """All integer partitions of n with parts >= min_part (descending tuples)."""
    if n == 0:
        return ((),)
    out = []
    for first in range(min(n, n), min_part - 1, -1):
        for rest in partitions(n - first, min_part):
            if not rest or rest[0] <= first:
                out.append((first,) + rest)
    return tuple(out)


def compound_poisson_pmf_by_enumeration(log_lam, n: int, min_part: int = 1) -> float:
    """log P(N = n) for N = sum_j j * M_j, M_j ~ Poisson(lam_j) independent.

    Enumerates all partitions of n (parts >= min_part) and sums
    prod_j lam_j^{m_j} / m_j!.  ``log_lam(j)`` returns ln lam_j.
    The normalizer exp(-sum lam_j) is NOT included.
    """
    if n == 0:
        return 0.0
    vals = []
    for part in partitions(n, min_part):
        mult: dict[int, int] = {}
        for p in part:
            mult[p] = mult.get(p, 0) + 1
        lw = 0.0
        for j, m in mult.items():
            lw += m * log_lam(j) - math.lgamma(m + 1)
        vals.append(lw)
    m = max(vals)
    return m + math.log(math.fsum(math.exp(v - m) for v in vals))


def central_diff(f, x: float, h: float) -> float:
    return (f(x + h) - f(x - h)) / (2.0 * h)
