import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contact_thermo.entropy import mass, normalize, relative_entropy
from contact_thermo.errors import NotAttainable, Overflow, ValidationError
from contact_thermo.fields import Grid, ObservableSystem, integrate
from contact_thermo.geometry import ContactForm, torus3
from contact_thermo.maxent import MaxEntProblem, equilibrium_with_volume, log_partition, solve, sweep

from conftest import monomial


def log_i0(p, terms=60):
    # power series of the modified Bessel function I_0
    return math.log(math.fsum((p / 2) ** (2 * k) / math.factorial(k) ** 2 for k in range(terms)))


@pytest.fixture(scope="module")
def grid():
    return Grid.uniform((1.0, 1.0, 1.0), 32)


@pytest.fixture(scope="module")
def lam_n(grid):
    return normalize(ContactForm.base(torus3()), grid)


@pytest.fixture(scope="module")
def prob1(lam_n, grid):
    return MaxEntProblem(lam_n, ObservableSystem([monomial("cos", 0)]), grid=grid)


@pytest.fixture(scope="module")
def prob3(lam_n, grid):
    obs = [monomial("cos", 0), monomial("sin", 1),
           monomial("cos", 2)]
    return MaxEntProblem(lam_n, ObservableSystem(obs), grid=grid)


def test_requires_unit_mass(grid):
    with pytest.raises(ValidationError):
        MaxEntProblem(ContactForm.base(torus3()), ObservableSystem([monomial("cos", 0)]), grid=grid)


def test_requires_independent_observables(lam_n, grid):
    with pytest.raises(ValidationError):
        MaxEntProblem(lam_n, ObservableSystem([monomial("cos", 0), monomial("cos", 0, coef=2.0)]), grid=grid)


def test_log_partition_at_zero(prob3):
    lp = log_partition(prob3, np.zeros(3))
    assert lp.w == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(lp.q, 0.0, atol=1e-15)
    np.testing.assert_allclose(lp.covariance, 0.5 * np.eye(3), atol=1e-14)


@pytest.mark.parametrize("p", [0.5, 1.0, 2.0])
def test_log_partition_bessel(prob1, p):
    assert log_partition(prob1, [p]).w == pytest.approx(log_i0(p), rel=1e-12)


def test_moments_are_gradient(prob3):
    p = np.array([0.4, -1.1, 0.7])
    lp = log_partition(prob3, p)
    h = 1e-5
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        d = (log_partition(prob3, p + e).w - log_partition(prob3, p - e).w) / (2 * h)
        assert abs(d - lp.q[i]) < 1e-7 * max(1.0, abs(lp.q[i]))


def test_overflow_guard(prob1):
    with pytest.raises(Overflow):
        log_partition(prob1, [400.0])


def test_solve_uniform(prob1):
    sol = solve(prob1.with_targets([0.0]))
    assert abs(sol.p[0]) < 1e-12 and abs(sol.entropy) < 1e-14


def test_solution_invariants(prob3, grid):
    sol = solve(prob3.with_targets([0.2, -0.1, 0.3]))
    x = grid.nodes
    dens = sol.density(x)
    assert integrate(grid, dens * prob3.mu) == pytest.approx(1.0, abs=1e-10)
    for i, F in enumerate(prob3.sys.observables):
        assert integrate(grid, F(x) * dens * prob3.mu) == pytest.approx(sol.q[i], abs=1e-10)
    assert np.all(np.linalg.eigvalsh(sol.covariance) > 0)
    np.testing.assert_allclose(sol.covariance, sol.covariance.T)
    hist = np.asarray(sol.objective_history)
    assert np.all(np.diff(hist) <= 0)


def test_entropy_two_routes(prob3, lam_n, grid):
    sol = solve(prob3.with_targets([0.3, 0.1, -0.2]))
    kl = relative_entropy(sol.equilibrium_form, lam_n, grid)
    assert abs(kl - sol.entropy) < 1e-8
    assert mass(sol.equilibrium_form, grid) == pytest.approx(1.0, abs=1e-10)


def test_not_attainable(prob1):
    with pytest.raises(NotAttainable):
        solve(prob1.with_targets([9.9]))


@settings(max_examples=10, deadline=None)
@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=3, max_size=3))
def test_roundtrip_property(p_star):
    grid = Grid.uniform((1.0, 1.0, 1.0), 24)
    lam = normalize(ContactForm.base(torus3()), grid)
    prob = MaxEntProblem(lam, ObservableSystem([monomial("cos", 0), monomial("sin", 1), monomial("cos", 2)]), grid=grid)
    q = log_partition(prob, p_star).q
    sol = solve(prob.with_targets(q))
    assert np.max(np.abs(sol.p - np.asarray(p_star))) < 1e-8


def test_sweep_constant_path(prob1):
    _, rep = sweep(prob1, [[0.7]] * 5)
    assert rep.max_residual == 0.0 and rep.nonmonotone_segments == []


def test_sweep_third_order(prob1):
    _, fine = sweep(prob1, [[2 * k / 200] for k in range(201)])
    _, coarse = sweep(prob1, [[2 * k / 100] for k in range(101)])
    assert fine.max_residual < 1e-6
    assert coarse.max_residual / fine.max_residual >= 6


def test_sweep_step_bound(prob1):
    with pytest.raises(ValidationError):
        sweep(prob1, [[0.0], [1.0]])


def test_sweep_chain_rule(prob3):
    # dz/dp_i = sum_j p_j dq_j/dp_i with dq/dp the covariance
    p = np.array([0.5, -0.3, 0.2])
    pts, _ = sweep(prob3, [p])
    cov = log_partition(prob3, p).covariance
    h = 1e-5
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        zp = sweep(prob3, [p + e])[0][0].z
        zm = sweep(prob3, [p - e])[0][0].z
        assert (zp - zm) / (2 * h) == pytest.approx(cov[i] @ p, abs=1e-8)


def test_sweep_flags_reversed_moments(prob1):
    # backing up in p moves q back as well, so no segment is flagged
    _, rep = sweep(prob1, [[0.0], [0.3], [0.1]])
    assert rep.nonmonotone_segments == []


def test_volume_constrained_matches_solve(prob3):
    target = [0.25, -0.15, 0.05]
    a = solve(prob3.with_targets(target))
    b = equilibrium_with_volume(prob3, target)
    assert np.max(np.abs(a.p - b.p)) < 1e-10
    assert b.w == pytest.approx(a.w, abs=1e-10)


def test_volume_constrained_no_observables(lam_n, grid):
    sol = equilibrium_with_volume(MaxEntProblem(lam_n, None, grid=grid), [])
    assert abs(sol.w) < 1e-14
    assert mass(sol.equilibrium_form, grid) == pytest.approx(1.0, abs=1e-12)
