import math

import numpy as np
import pytest

from hylgas.condensate import HYLParams
from hylgas.errors import DomainError
from hylgas.full_hyl import (
    CycleDensityVector,
    full_rate,
    full_rate_grad,
    minimize_full_rate,
    pressure_gap,
)
from hylgas.full_hyl import _raw_rate  # exercised directly by gradient checks
from hylgas.thermo import ModelParams, pressure

D3 = ModelParams(d=3, beta=1.0)
AB = HYLParams(b=1.0, a=2.0)


def test_cycle_density_vector_validation():
    with pytest.raises(DomainError):
        CycleDensityVector(np.array([-1.0, 0.0]))
    with pytest.raises(DomainError):
        CycleDensityVector(np.array([np.inf]))
    v = CycleDensityVector(np.array([0.1, 0.2]))
    assert v.jmax == 2
    assert v.total_density() == pytest.approx(0.1 + 2 * 0.2)


def test_full_rate_zero_vector_closed_form():
    for mu in (-0.5, 0.3):
        p_tilde = 0.37
        x = np.zeros(64)
        expected = (
            -D3.beta / (2.0 * (AB.a - AB.b)) * max(mu, 0.0) ** 2
            - pressure(D3, 0.0)
            + p_tilde
        )
        assert full_rate(D3, AB, mu, x, p_tilde) == pytest.approx(expected, rel=1e-13, abs=1e-15)


def test_full_rate_requires_a_greater_b():
    with pytest.raises(DomainError):
        full_rate(D3, HYLParams(b=1.0, a=0.5), 0.0, np.zeros(10), 0.0)


def test_zero_padding_leaves_value_unchanged():
    rng = np.random.default_rng(3)
    x = np.abs(rng.normal(0.01, 0.004, 100))
    padded = np.concatenate([x, np.zeros(100)])
    v1 = full_rate(D3, AB, -0.2, x, 0.0)
    v2 = full_rate(D3, AB, -0.2, padded, 0.0)
    assert v1 == pytest.approx(v2, rel=1e-14)


@pytest.mark.parametrize("mu", [-0.5, 0.0, 0.8])
def test_gradient_matches_finite_differences(mu):
    rng = np.random.default_rng(11)
    for _ in range(20):
        x = np.abs(rng.normal(0.01, 0.003, 60)) + 2e-3
        g = full_rate_grad(D3, AB, mu, x)
        for k in rng.integers(0, 60, 3):
            h = 1e-6
            xp = x.copy(); xp[k] += h
            xm = x.copy(); xm[k] -= h
            fd = (_raw_rate(D3, AB, mu, xp) - _raw_rate(D3, AB, mu, xm)) / (2 * h)
            assert g[k] == pytest.approx(fd, rel=1e-6)


def test_gradient_partial_x1_published_form():
    # d I / d x_1 = log(x_1/p_1) - b beta x_1 - beta (mu - a D) * branch factor
    rng = np.random.default_rng(5)
    x = np.abs(rng.normal(0.01, 0.003, 40))
    j = np.arange(1, 41.0)
    p1 = (2 * math.pi) ** -1.5
    for mu in (-0.4, 0.9):
        D = float(j @ x)
        factor = 1.0 if AB.a * D >= mu else -AB.b / (AB.a - AB.b)
        expected = math.log(x[0] / p1) - AB.b * D3.beta * x[0] - D3.beta * (mu - AB.a * D) * factor
        assert full_rate_grad(D3, AB, mu, x)[0] == pytest.approx(expected, rel=1e-12)


def test_minimizer_normalization_and_positivity():
    res = minimize_full_rate(D3, AB, 0.0, 200)
    assert res.value == 0.0
    assert res.grad_norm <= 1e-8
    assert res.x_star.x[0] > 1e-3  # strictly positive first coordinate
    assert np.all(res.x_star.x >= 0.0)
    # min I = 0 at the minimizer under the self-consistent p_tilde
    assert full_rate(D3, AB, 0.0, res.x_star, res.p_tilde) == pytest.approx(0.0, abs=1e-12)
    # and I >= 0 nearby
    rng = np.random.default_rng(2)
    for _ in range(20):
        pert = np.maximum(res.x_star.x * (1 + rng.normal(0, 0.05, res.x_star.jmax)), 0.0)
        assert full_rate(D3, AB, 0.0, pert, res.p_tilde) >= -1e-10


def test_jmax_stability():
    r200 = minimize_full_rate(D3, AB, -0.5, 200)
    r400 = minimize_full_rate(D3, AB, -0.5, 400)
    assert abs(r200.p_tilde - r400.p_tilde) < 1e-6
    g200 = pressure_gap(D3, AB, -0.5, jmax=200, max_doublings=1, stability_tol=1e-6)
    g400 = pressure_gap(D3, AB, -0.5, jmax=400, max_doublings=1, stability_tol=1e-6)
    assert abs(g200 - g400) < 1e-6


def test_jmax_minimum_enforced():
    with pytest.raises(DomainError):
        minimize_full_rate(D3, AB, 0.0, 10)


def test_coercivity_on_random_rays():
    # raw(x) >= C1 + C2 D(x)^2 with C2 = (a-b) beta/4 and
    # C1 = -P(0) - beta mu_+^2 (1/(a-b) + 1/(2(a-b)))
    rng = np.random.default_rng(9)
    for mu in (-0.3, 0.6):
        c2 = (AB.a - AB.b) * D3.beta / 4.0
        c1 = -pressure(D3, 0.0) - D3.beta * max(mu, 0.0) ** 2 * 1.5 / (AB.a - AB.b)
        for _ in range(100):
            u = np.abs(rng.normal(0, 1, 50))
            u /= np.sum(u)
            t = rng.uniform(0.01, 30.0)
            x = t * u / np.arange(1, 51.0)  # D(x) = t
            val = _raw_rate(D3, AB, mu, x)
            assert val >= c1 + c2 * t * t - 1e-9


def test_pressure_gap_sign_and_sandwich():
    gap = pressure_gap(D3, AB, 0.0, jmax=200)
    assert gap < -1e-8
    res = minimize_full_rate(D3, AB, 0.0, 200)
    x1 = res.x_star.x[0]
    assert -(AB.b / 2.0) * x1**2 <= gap <= 0.0


def test_pressure_gap_vanishes_with_b():
    gaps = [abs(pressure_gap(D3, HYLParams(b=b, a=2.0), 0.0, jmax=120)) for b in (0.5, 0.05, 0.005)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-4


def test_addon_minimizer_keeps_x1_positive_and_matches_fast_path():
    # generic projected-gradient path with an explicit callable addon must
    # agree with the exact density-scan route used by pressure_gap
    b, beta = AB.b, D3.beta

    def addon(x):
        return 0.5 * b * beta * x[0] ** 2

    def addon_grad(x):
        g = np.zeros_like(x)
        g[0] = b * beta * x[0]
        return g

    res = minimize_full_rate(D3, AB, 0.0, 120, objective_addon=addon, addon_grad=addon_grad)
    assert res.x_star.x[0] > 0.0
    assert res.grad_norm <= 1e-8
    gap_generic = -res.value / beta
    from hylgas.full_hyl import _minimize_raw

    _, m0, _ = _minimize_raw(D3, AB, 0.0, 120, "none")
    _, m1, _ = _minimize_raw(D3, AB, 0.0, 120, "x1sq")
    assert gap_generic == pytest.approx(-(m1 - m0) / beta, rel=1e-6, abs=1e-10)
