import math

import numpy as np
import pytest
from scipy.special import logsumexp

from hylgas.condensate import HYLParams, solve_rho_bar
from hylgas.errors import DomainError, EnumerationCapError
from hylgas.finite_volume import (
    CycleCounts,
    FiniteVolumeModel,
    canonical_hyl_partition,
    default_cutoff,
    free_canonical_log_pmf,
    free_canonical_pmf,
    intensity,
    long_loop_density_exact,
    long_mass_pmf,
    short_sector_check,
    total_log_intensity_sum,
)
from hylgas.thermo import ModelParams, a_scale, critical_density, density, pressure

from oracles import compound_poisson_pmf_by_enumeration, partitions

D3 = ModelParams(d=3, beta=1.0)


def make_model(V=5.0, d=3, beta=1.0, q=3, mu=0.0, b=None, a=0.0):
    hyl = HYLParams(b=b, a=a) if b is not None else None
    return FiniteVolumeModel(V=V, params=ModelParams(d=d, beta=beta), q=q, hyl=hyl, mu=mu)


def test_model_validation_and_cutoff_warning():
    with pytest.raises(DomainError):
        make_model(V=0.0)
    with pytest.raises(DomainError):
        make_model(q=0)
    with pytest.warns(UserWarning):
        FiniteVolumeModel(V=100.0, params=D3, q=101)
    with pytest.warns(UserWarning):
        FiniteVolumeModel(V=1000.0, params=D3, q=5)  # below the CLT scale
    assert default_cutoff(2000.0) == math.ceil(2000.0**0.75)


def test_cycle_counts_accounting():
    cc = CycleCounts({1: 3, 4: 2, 10: 1})
    assert cc.total() == 3 + 8 + 10
    assert cc.total_short(5) == 11
    assert cc.total_long(5) == 10
    assert cc.n_loops() == 6
    with pytest.raises(DomainError):
        CycleCounts({0: 1})
    with pytest.raises(DomainError):
        CycleCounts({2: -1})


def test_intensity_values():
    m = make_model(V=1.0, mu=0.0)
    assert intensity(m, 1) == pytest.approx((2 * math.pi) ** -1.5, rel=1e-13)
    m2 = make_model(V=7.0, d=3, beta=2.0, mu=-0.3)
    # ratio lambda_{2j}/lambda_j = 2^{-1-d/2} e^{beta mu j}
    for j in (1, 2, 5):
        expected = 2.0 ** (-1 - 1.5) * math.exp(2.0 * (-0.3) * j)
        assert intensity(m2, 2 * j) / intensity(m2, j) == pytest.approx(expected, rel=1e-12)


def test_intensity_resums_to_density_and_pressure():
    m = make_model(V=11.0, mu=-0.2)
    total = sum(intensity(m, j) * j for j in range(1, 4000))
    assert total / m.V == pytest.approx(density(D3, -0.2), rel=1e-10)
    assert total_log_intensity_sum(m, "all") == pytest.approx(m.V * pressure(D3, -0.2), rel=1e-13)


def test_sector_intensity_sums_add_up():
    m = make_model(V=9.0, q=7, mu=-0.05)
    s_all = total_log_intensity_sum(m, "all")
    s_short = total_log_intensity_sum(m, "short")
    s_long = total_log_intensity_sum(m, "long")
    assert s_short + s_long == pytest.approx(s_all, rel=1e-12)
    m0 = make_model(V=9.0, q=7, mu=0.0)
    assert total_log_intensity_sum(m0, "short") + total_log_intensity_sum(m0, "long") == pytest.approx(
        total_log_intensity_sum(m0, "all"), rel=1e-12
    )


def test_pmf_base_cases():
    m = make_model(V=5.0)
    logp = free_canonical_log_pmf(m, 1)
    assert logp[0] == pytest.approx(-total_log_intensity_sum(m, "all"), rel=1e-13)
    # P(1) = lambda_1 P(0)
    assert logp[1] == pytest.approx(math.log(intensity(m, 1)) + logp[0], rel=1e-13)


@pytest.mark.parametrize(
    "V, d, beta, mu",
    [(5.0, 3, 1.0, 0.0), (2.0, 3, 0.5, -0.3), (9.0, 4, 1.0, -0.1), (3.0, 5, 2.0, 0.0), (7.5, 3, 1.0, -1.0)],
)
def test_recursion_matches_partition_enumeration(V, d, beta, mu):
    m = make_model(V=V, d=d, beta=beta, mu=mu, q=3)
    n_max = 20
    logp = free_canonical_log_pmf(m, n_max)
    norm = total_log_intensity_sum(m, "all")
    for n in range(n_max + 1):
        oracle = compound_poisson_pmf_by_enumeration(
            lambda j: math.log(intensity(m, j)), n
        ) - norm
        assert logp[n] == pytest.approx(oracle, abs=1e-12, rel=1e-12)


def test_pmf_sums_to_one():
    m = make_model(V=4.0, mu=-0.5)
    p = free_canonical_pmf(m, 400)
    assert p.sum() == pytest.approx(1.0, abs=1e-10)


def test_sector_factorization_exact():
    # P(N = n) = sum_m P_short(n - m) P_long(m), by Poisson independence
    m = make_model(V=6.0, q=4, mu=-0.1)
    n = 14
    log_all = free_canonical_log_pmf(m, n, "all")
    log_s = free_canonical_log_pmf(m, n, "short")
    log_l = free_canonical_log_pmf(m, n, "long")
    for k in range(n + 1):
        conv = logsumexp([log_s[k - mm] + log_l[mm] for mm in range(k + 1)])
        assert conv == pytest.approx(log_all[k], abs=1e-12)


def test_long_mass_pmf_trivial_cases():
    m = make_model(V=5.0, q=4)
    s_long = total_log_intensity_sum(m, "long")
    assert long_mass_pmf(m, 0) == pytest.approx(math.exp(-s_long), rel=1e-12)
    assert long_mass_pmf(m, 2) == 0.0  # below the cut-off nothing can sum to 2
    assert long_mass_pmf(m, 4) == pytest.approx(intensity(m, 4) * math.exp(-s_long), rel=1e-12)


def test_long_mass_pmf_matches_enumeration():
    m = make_model(V=5.0, q=4)
    s_long = total_log_intensity_sum(m, "long")
    for x in (5, 8, 11, 16):
        oracle = compound_poisson_pmf_by_enumeration(
            lambda j: math.log(intensity(m, j)), x, min_part=4
        ) - s_long
        assert math.log(long_mass_pmf(m, x)) == pytest.approx(oracle, abs=1e-11)


def test_long_mass_heavy_tail_ratio():
    # P(N_long = x) ~ beta V c_d / (beta x)^{d/2+1} for x of order V
    V = 400.0
    m = make_model(V=V, q=default_cutoff(V))
    c_d = D3.c_d
    for x in (int(V / 2), int(V), int(2 * V)):
        exact = long_mass_pmf(m, x)
        asym = D3.beta * V * c_d / (D3.beta * x) ** (0.5 * D3.d + 1.0)
        assert exact / asym == pytest.approx(1.0, abs=0.12)


def test_hamiltonian_bound_on_enumerated_configurations():
    # (b/2V) sum k^2 n_k^2 <= (b/2V) N_long^2, with equality exactly when the
    # whole long mass sits in a single length class (a single loop included)
    q = 4
    for nlong in (8, 12, 17):
        for part in partitions(nlong, q):
            mult: dict[int, int] = {}
            for p in part:
                mult[p] = mult.get(p, 0) + 1
            ham = sum(k * k * n * n for k, n in mult.items())
            assert ham <= nlong * nlong
            if len(mult) == 1:
                assert ham == nlong * nlong
            else:
                assert ham < nlong * nlong


def test_partition_function_b_zero_reduces_to_free():
    m = make_model(V=5.0, q=3, b=0.0)
    for N in (0, 4, 9):
        part = canonical_hyl_partition(m, N)
        assert part.log_z_joint == pytest.approx(
            float(free_canonical_log_pmf(m, N, "all")[N]), abs=1e-11
        )
        assert part.log_z_conditional == pytest.approx(0.0, abs=1e-11)


def test_partition_function_no_long_sector():
    m = make_model(V=5.0, q=12, b=1.0)
    N = 7  # q > N: no long loops can occur
    part = canonical_hyl_partition(m, N)
    expected = float(free_canonical_log_pmf(m, N, "short")[N]) - total_log_intensity_sum(m, "long")
    assert part.log_z_joint == pytest.approx(expected, abs=1e-12)
    assert list(part.long_spectrum) == [0]


def test_partition_enumeration_cap_raises():
    m = make_model(V=50.0, q=2, b=1.0)
    with pytest.raises(EnumerationCapError):
        canonical_hyl_partition(m, 40, cap=50)


def test_partition_asymptotics_and_free_energy_consistency():
    # ratio of the exact joint Z to the heavy-tail Laplace asymptotic;
    # q = V^0.7 keeps the cut-off well below rho_bar*V (see ledger: at
    # q = V^0.75 the Laplace window is clipped at this volume)
    from hylgas.thermo import rate_I_second

    V = 800.0
    rho = 1.5 * critical_density(D3)
    N = int(rho * V)
    rho_n = N / V
    hyl = HYLParams(b=1.0)
    m = FiniteVolumeModel(V=V, params=D3, q=int(math.ceil(V**0.7)), hyl=hyl, mu=0.0)
    part = canonical_hyl_partition(m, N)
    sol = solve_rho_bar(D3, hyl, rho_n)
    s1 = sol.S_value + 0.5 * hyl.b * D3.beta * sol.rho_e**2
    rc = critical_density(D3)
    mu_prime = rate_I_second(D3, rc - sol.rho_S) / D3.beta
    log_asym = (
        0.5 * math.log(1.0 + hyl.b / mu_prime)
        + s1 * V
        + math.log(D3.beta * V * D3.c_d)
        - (0.5 * D3.d + 1.0) * math.log(D3.beta * sol.rho_bar * V)
    )
    assert part.log_z_joint - log_asym == pytest.approx(0.0, abs=0.25)
    # free energy from the conditional partition function
    from hylgas.condensate import free_energy

    f_exact = -part.log_z_conditional / (D3.beta * V)
    assert f_exact == pytest.approx(free_energy(D3, hyl, rho_n), abs=5e-3)


def test_long_spectrum_concentrates_near_rho_bar():
    V = 800.0
    rho = 1.5 * critical_density(D3)
    N = int(rho * V)
    hyl = HYLParams(b=1.0)
    m = FiniteVolumeModel(V=V, params=D3, q=int(math.ceil(V**0.7)), hyl=hyl, mu=0.0)
    part = canonical_hyl_partition(m, N)
    m_star = max(part.long_spectrum, key=part.long_spectrum.get)
    sol = solve_rho_bar(D3, hyl, N / V)
    assert abs(m_star - sol.rho_bar * V) <= 3.0 * a_scale(D3, V)


def test_long_loop_density_subcritical_free_is_negligible():
    import warnings as _w

    hyl0 = HYLParams(b=0.0)
    rho = 0.5 * critical_density(D3)
    with _w.catch_warnings():
        _w.simplefilter("ignore")  # deliberately small q to keep N >= q affordable
        m = FiniteVolumeModel(V=200.0, params=D3, q=8, hyl=hyl0, mu=0.0)
        val = long_loop_density_exact(m, int(rho * 200.0))
    assert 0.0 < val < 0.01


def test_long_loop_density_vanishes_deep_subcritical():
    # deep in the subcritical phase the exact long-loop density decays
    # exponentially in V.  (Just below rho_c_hyl the cut-off-scale loops are
    # still counterterm-enhanced at desk volumes: the gain b q^2/2V only loses
    # to the cost |mu| q once V^0.3 > b/(2|mu(rho)|), ~1e6 there.)
    hyl = HYLParams(b=1.0)
    rho = 0.5 * critical_density(D3)
    vals = []
    for V in (6000.0, 12000.0):
        m = FiniteVolumeModel(V=V, params=D3, q=int(math.ceil(V**0.7)), hyl=hyl, mu=0.0)
        vals.append(long_loop_density_exact(m, int(rho * V)))
    assert vals[0] > vals[1] > 0.0
    assert vals[1] < 1e-30


def test_long_loop_density_approaches_condensate_prediction():
    hyl = HYLParams(b=1.0)
    rho = 1.5 * critical_density(D3)
    sol_inf = solve_rho_bar(D3, hyl, rho)
    errs = []
    for V in (200.0, 400.0, 800.0):
        m = FiniteVolumeModel(V=V, params=D3, q=int(math.ceil(V**0.7)), hyl=hyl, mu=0.0)
        N = int(rho * V)
        sol_v = solve_rho_bar(D3, hyl, N / V)
        errs.append(abs(long_loop_density_exact(m, N) - sol_v.rho_bar))
    assert errs[-1] < errs[0]
    assert errs[-1] < 0.05 * sol_inf.rho_bar


def test_short_sector_check_values():
    m = make_model(V=6.0, q=4, mu=0.0)
    chk = short_sector_check(m, 0)
    assert chk.ratio == pytest.approx(math.exp(total_log_intensity_sum(m, "long")), rel=1e-12)
    assert chk.ratio > 1.0


def test_short_sector_ratio_tends_to_one():
    # the deviation scales like the long-sector intensity mass ~ V^{-0.2}
    # for q = V^0.8 at d=3 (about 1e-2 at V=1000; see ledger)
    rho = 0.5 * critical_density(D3)
    ratios = []
    for V in (100.0, 400.0, 1600.0):
        m = FiniteVolumeModel(V=V, params=D3, q=int(V**0.8), mu=0.0)
        ratios.append(short_sector_check(m, int(rho * V)).ratio)
    assert all(r >= 1.0 - 1e-12 for r in ratios)
    assert abs(ratios[-1] - 1.0) < abs(ratios[0] - 1.0)
    assert abs(ratios[-1] - 1.0) < 2e-2
