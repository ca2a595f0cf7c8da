import itertools
import math

import numpy as np
import pytest

from contact_thermo.entropy import mass
from contact_thermo.errors import EmptyBall, NotInvariant
from contact_thermo.fields import Grid, ScalarField
from contact_thermo.flows import FlowMap, flow_point
from contact_thermo.geometry import ContactForm, Diffeomorphism, torus3
from contact_thermo.pressure import (
    ContactPair,
    birkhoff_sum,
    coboundary_defect,
    default_candidates,
    gibbs_diagnostic,
    is_separated,
    log_partition_function,
    orbit,
    partition_function,
    periodic_distance,
    pressure_estimate,
    separated_set,
    variational_bound,
)

from conftest import monomial, positive_field

UNIT = (1.0, 1.0, 1.0)


@pytest.fixture(scope="module")
def reeb(lam0):
    return ContactPair.reeb(lam0, 1.0, 0.1)


@pytest.fixture(scope="module")
def ham_pair(lam0):
    return ContactPair.from_flow(lam0, monomial("cos", 0), 0.5, 1e-2)


def brute_force_max_separated(points, eps):
    # exhaustive maximum cardinality over a tiny candidate set
    M = len(points)
    D = periodic_distance(points[:, None, :], points[None, :, :], UNIT)
    best = 1
    for r in range(2, M + 1):
        found = False
        for combo in itertools.combinations(range(M), r):
            if all(D[i, j] > eps for i, j in itertools.combinations(combo, 2)):
                found = True
                break
        if not found:
            break
        best = r
    return best


def test_periodic_distance():
    assert periodic_distance(np.array([0.95, 0, 0]), np.array([0.05, 0, 0]), UNIT) == pytest.approx(0.1)


def test_identity_singleton(lam0):
    E = separated_set(ContactPair.identity(lam0), 1, 2.0, default_candidates(lam0.model, 4))
    assert len(E) == 1


@pytest.mark.parametrize("res", [4, 8, 16])
def test_identity_eight_points(lam0, res):
    E = separated_set(ContactPair.identity(lam0), 1, 0.49, default_candidates(lam0.model, res))
    assert len(E) == 8


def test_identity_eight_points_brute_force(lam0):
    cand = default_candidates(lam0.model, 2)
    assert brute_force_max_separated(cand, 0.49) == 8
    assert len(separated_set(ContactPair.identity(lam0), 1, 0.49, cand)) == 8


def test_greedy_is_valid_and_maximal(ham_pair):
    cand = default_candidates(ham_pair.lam.model, 5)
    E = separated_set(ham_pair, 2, 0.3, cand)
    assert is_separated(ham_pair, E, 2, 0.3)
    orb_c = orbit(ham_pair, cand, 2)
    orb_e = orbit(ham_pair, E, 2)
    for i in range(len(cand)):
        d = periodic_distance(orb_c.points[:, i][:, None, :], orb_e.points, UNIT).max(axis=0)
        assert d.min() <= 0.3 + 1e-15  # no candidate can be added


def test_cardinality_monotone_in_N(reeb):
    cand = default_candidates(reeb.lam.model, 6)
    sizes = [len(separated_set(reeb, N, 0.2, cand)) for N in (1, 2, 3, 4)]
    assert all(b >= a for a, b in zip(sizes, sizes[1:]))


def test_birkhoff_N1_and_strict(reeb, lam0):
    x = lam0.model.sample(np.random.default_rng(0), 6)
    assert np.all(birkhoff_sum(reeb, 1, x) == reeb.g(x))
    assert np.abs(birkhoff_sum(reeb, 5, x)).max() <= 5e-7


def test_birkhoff_equals_iterated_potential(lam0):
    H = monomial("cos", 0)
    pair = ContactPair.from_flow(lam0, H, 0.5, 1e-2)
    x = lam0.model.sample(np.random.default_rng(1), 6)
    for N in (1, 3, 6):
        gN = flow_point(FlowMap(H, lam0, 0.5 * N, 1e-2), x, keep_trace=False)[1].g_values[-1]
        assert np.abs(birkhoff_sum(pair, N, x) - gN).max() < N * 1e-7


def test_partition_counts_at_beta_zero(ham_pair):
    cand = default_candidates(ham_pair.lam.model, 5)
    E = separated_set(ham_pair, 2, 0.25, cand)
    assert partition_function(ham_pair, 2, 0.25, 0.0, cand) == float(len(E))


def test_partition_strict_pair(reeb):
    cand = default_candidates(reeb.lam.model, 6)
    E = separated_set(reeb, 3, 0.2, cand)
    Z = partition_function(reeb, 3, 0.2, 2.5, cand)
    assert abs(Z - len(E)) <= len(E) * 3 * 1e-6


def test_partition_nonincreasing_in_eps(ham_pair):
    cand = default_candidates(ham_pair.lam.model, 6)
    Zs = [partition_function(ham_pair, 2, eps, 0.0, cand) for eps in (0.1, 0.2, 0.3, 0.45)]
    assert all(b <= a for a, b in zip(Zs, Zs[1:]))


def test_log_partition_convex_in_beta(ham_pair):
    cand = default_candidates(ham_pair.lam.model, 5)
    vals = [log_partition_function(ham_pair, 2, 0.2, b, cand) for b in (-1.0, 0.0, 1.0)]
    assert vals[1] <= 0.5 * (vals[0] + vals[2]) + 1e-10


def test_pressure_identity_sequence(lam0):
    est = pressure_estimate(ContactPair.identity(lam0), 0.0, 0.3, [1, 2, 4, 8], default_candidates(lam0.model, 6))
    counts = [r[1] for r in est.per_N]
    assert len(set(counts)) == 1
    assert est.monotone_flag and est.extrapolated == pytest.approx(math.log(counts[0]) / 8)


def test_pressure_reeb_decreasing(reeb):
    est = pressure_estimate(reeb, 1.0, 0.2, [1, 2, 4], default_candidates(reeb.lam.model, 6))
    assert est.monotone_flag


def test_pressure_requires_increasing_N(reeb):
    with pytest.raises(ValueError):
        pressure_estimate(reeb, 0.0, 0.2, [2, 2])


def test_variational_bound_strict(reeb, lam0):
    grid = Grid.uniform(UNIT, 16)
    V = mass(lam0, grid)
    nu = lambda x: lam0.density(x) / V
    for beta in (-1.0, 0.0, 2.0):
        assert variational_bound(reeb, nu, 0.0, beta, grid) == pytest.approx(0.0, abs=1e-12)
    assert variational_bound(reeb, nu, 0.7, 0.0, grid) == pytest.approx(0.7)


def test_variational_bound_not_invariant(lam0):
    grid = Grid.uniform(UNIT, 16)
    pair = ContactPair(Diffeomorphism.translation([0.5, 0, 0]), lam0, ScalarField.constant(0.0))
    bump = lambda x: 1.0 + 0.5 * np.cos(2 * np.pi * x[..., 0])
    with pytest.raises(NotInvariant):
        variational_bound(pair, bump, 0.0, 1.0, grid)


def test_variational_bound_below_estimate(reeb, lam0):
    grid = Grid.uniform(UNIT, 16)
    nu = lambda x: np.ones(np.shape(x)[:-1])
    bound = variational_bound(reeb, nu, 0.0, 0.0, grid)
    est = pressure_estimate(reeb, 0.0, 0.2, [1, 4], default_candidates(reeb.lam.model, 6))
    assert bound <= est.extrapolated + 1e-12


def test_gibbs_identity_homogeneous(lam0):
    grid = Grid.uniform(UNIT, 16)
    pair = ContactPair.identity(lam0)
    rep = gibbs_diagnostic(pair, lambda x: np.ones(np.shape(x)[:-1]), 1.0, 0.0, 0.2, [1, 2], grid.nodes[[0, 17, 300]], grid)
    assert rep.ratio_min <= rep.ratio_max
    assert rep.ratio_max / rep.ratio_min == pytest.approx(1.0, rel=1e-12)


def test_gibbs_beta_zero_ignores_g(lam0):
    grid = Grid.uniform(UNIT, 12)
    a = ContactPair.identity(lam0)
    b = ContactPair(a.psi, lam0, monomial("cos", 0))
    mu = lambda x: np.ones(np.shape(x)[:-1])
    c = grid.nodes[[1, 50]]
    ra = gibbs_diagnostic(a, mu, 0.0, 0.0, 0.25, [1, 3], c, grid)
    rb = gibbs_diagnostic(b, mu, 0.0, 0.0, 0.25, [1, 3], c, grid)
    assert ra.as_dict() == rb.as_dict()


def test_gibbs_empty_ball(lam0):
    grid = Grid.uniform(UNIT, 4)
    with pytest.raises(EmptyBall):
        gibbs_diagnostic(ContactPair.identity(lam0), lambda x: np.ones(np.shape(x)[:-1]), 0.0, 0.0, 0.01, [1],
                         np.array([[0.1, 0.1, 0.1]]), grid)


def test_coboundary(lam0, rng):
    psi = FlowMap(monomial("cos", 0), lam0, 0.3, 1e-2).as_diffeomorphism()
    f = positive_field(rng)
    d = coboundary_defect(lam0, psi, f, lam0.model.sample(rng, 8))
    assert d < 1e-6


def test_validate_pair(lam0):
    pair = ContactPair.from_flow(lam0, monomial("sin", 1), 0.2, 2e-2,
                                 validation_sample=lam0.model.sample(np.random.default_rng(3), 4))
    assert pair.label.startswith("flow")
