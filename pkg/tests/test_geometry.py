import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contact_thermo.errors import ConfigInvalid, SingularForm
from contact_thermo.fields import OneForm, ScalarField, random_trig_field
from contact_thermo.geometry import (
    ContactForm,
    Diffeomorphism,
    contact_hamiltonian_field,
    contract,
    decompose_oneform,
    decompose_vector,
    exterior_derivative,
    get_model,
    pullback,
    reeb_derivative,
    reeb_field,
    wedge_density,
)

from conftest import monomial, positive_field

TWO_PI = 2 * math.pi


def test_base_density_and_orientation(model, lam0):
    x = model.sample(np.random.default_rng(0), 10)
    assert model.orientation_sign == -1.0
    np.testing.assert_allclose(lam0.raw_density(x), -TWO_PI, rtol=1e-14)
    np.testing.assert_allclose(lam0.density(x), TWO_PI, rtol=1e-14)


def test_wedge_density_standard_form():
    # dz - y dx on R^3: lam ^ dlam = dx^dy^dz, coefficient 1
    lam = np.array([-0.3, 0.0, 1.0])
    jac = np.zeros((3, 3))
    jac[0, 1] = -1.0  # d lam_x / dy
    W = exterior_derivative(jac)
    assert wedge_density(lam, W, 1) == pytest.approx(1.0)


def test_reeb_catalog_points(lam0):
    np.testing.assert_allclose(reeb_field(lam0, np.zeros(3)), [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(reeb_field(lam0, np.array([0.3, 0.7, 0.25])), [0, 1, 0], atol=1e-15)


def test_reeb_residual_catalog(model, lam0):
    x = model.sample(np.random.default_rng(1), 200)
    R, res = reeb_field(lam0, x, return_residual=True)
    assert res.max() < 1e-10
    np.testing.assert_allclose(np.einsum("...i,...i->...", lam0.values(x), R), 1.0, atol=1e-12)
    np.testing.assert_allclose(contract(R, lam0.dform(x)), 0.0, atol=1e-12)


def test_reeb_scaled_form_defining_equations(model, rng):
    lam = ContactForm.scaled(model, positive_field(rng))
    x = model.sample(rng, 50)
    R = reeb_field(lam, x)
    np.testing.assert_allclose(np.einsum("...i,...i->...", lam.values(x), R), 1.0, atol=1e-10)
    np.testing.assert_allclose(contract(R, lam.dform(x)), 0.0, atol=1e-10)


def test_scale_density_matches_wedge(model, rng):
    f = positive_field(rng)
    lam = ContactForm.scaled(model, f)
    x = model.sample(rng, 30)
    generic = model.orientation_sign * lam.raw_density(x)
    np.testing.assert_allclose(lam.density(x), generic, rtol=1e-12)
    np.testing.assert_allclose(lam.density(x), f(x) ** 2 * TWO_PI, rtol=1e-14)


def test_scale_density_with_fd_gradient(model, rng):
    f = positive_field(rng)
    lam = ContactForm.scaled(model, ScalarField(f.func))
    x = model.sample(rng, 20)
    generic = model.orientation_sign * lam.raw_density(x)
    np.testing.assert_allclose(generic, lam.density(x), rtol=1e-8)
    assert lam.uses_fd and lam.lin_tol == 1e-6


def test_decompose_oneform_dy(lam0):
    dy = np.array([0.0, 1.0, 0.0])
    dec = decompose_oneform(lam0, np.zeros(3), dy)
    assert dec.h == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(dec.y_pi, [0, 0, 1 / TWO_PI], atol=1e-15)


def test_decompose_oneform_reconstructs(model, rng):
    lam = ContactForm.scaled(model, positive_field(rng))
    x = model.sample(rng, 25)
    alpha = rng.normal(size=(25, 3))
    dec = decompose_oneform(lam, x, alpha)
    rebuilt = dec.h[..., None] * lam.values(x) + contract(dec.y_pi, lam.dform(x))
    np.testing.assert_allclose(rebuilt, alpha, atol=1e-10)
    np.testing.assert_allclose(np.einsum("...i,...i->...", lam.values(x), dec.y_pi), 0.0, atol=1e-12)


def test_decompose_vector(model, lam0, rng):
    x = model.sample(rng, 10)
    X = rng.normal(size=(10, 3))
    dec = decompose_vector(lam0, x, X)
    np.testing.assert_allclose(np.einsum("...i,...i->...", lam0.values(x), dec.xi_part), 0, atol=1e-13)
    np.testing.assert_allclose(dec.xi_part + dec.reeb_coeff[..., None] * reeb_field(lam0, x), X, atol=1e-13)


def test_hamiltonian_of_one_is_minus_reeb(model, lam0):
    x = model.sample(np.random.default_rng(4), 30)
    X = contact_hamiltonian_field(lam0, ScalarField.constant(1.0), x)
    np.testing.assert_allclose(X, -reeb_field(lam0, x), atol=1e-14)


def test_hamiltonian_defining_equations(model, lam0):
    H = monomial("cos", 0)
    x = model.sample(np.random.default_rng(5), 10)
    X, res = contact_hamiltonian_field(lam0, H, x, return_residual=True)
    assert res.max() < 1e-10
    np.testing.assert_allclose(np.einsum("...i,...i->...", lam0.values(x), X), -H(x), atol=1e-12)
    RH = reeb_derivative(lam0, H, x)
    rhs = H.gradient(x) - RH[..., None] * lam0.values(x)
    np.testing.assert_allclose(contract(X, lam0.dform(x)), rhs, atol=1e-12)


def test_singular_form_detected(model):
    flat = ContactForm.general(model, OneForm(lambda x: np.broadcast_to([1.0, 0.0, 0.0], np.shape(x)).copy(),
                                              lambda x: np.zeros(np.shape(x) + (3,))))
    with pytest.raises(SingularForm):
        reeb_field(flat, np.zeros((2, 3)))


def test_general_form_matches_scale(model, rng):
    lam = ContactForm.scaled(model, positive_field(rng))
    gen = lam.as_general()
    x = model.sample(rng, 10)
    np.testing.assert_allclose(gen.density(x), lam.density(x), rtol=1e-12)
    np.testing.assert_allclose(reeb_field(gen, x), reeb_field(lam, x), atol=1e-12)


def test_pullback_by_translation(model, lam0):
    T = Diffeomorphism.translation([0.1, 0.2, 0.3])
    pb = pullback(lam0, T)
    x = model.sample(np.random.default_rng(6), 10)
    np.testing.assert_allclose(pb.values(x), lam0.values(x + [0.1, 0.2, 0.3]), atol=1e-14)


def test_diffeomorphism_composition_order():
    a = Diffeomorphism.translation([1.0, 0.0])
    b = Diffeomorphism(lambda x: 2 * x, lambda x: np.broadcast_to(2 * np.eye(2), np.shape(x) + (2,)).copy())
    x = np.array([[1.0, 1.0]])
    np.testing.assert_allclose(a.then(b)(x), [[4.0, 2.0]])  # b(a(x))
    np.testing.assert_allclose(b.power(3)(x), [[8.0, 8.0]])


def test_composite_jacobian_is_chain_rule():
    sq = Diffeomorphism(lambda x: x + 0.1 * np.sin(x) ** 2)
    comp = sq.power(3)
    assert len(comp.factors) == 4  # identity, then three copies
    x = np.array([[0.3, -0.7], [1.1, 0.4]])
    J = np.eye(2)
    y = x.copy()
    for _ in range(3):
        J = np.eye(2) * (1 + 0.1 * np.sin(2 * y))[..., None] @ J
        y = y + 0.1 * np.sin(y) ** 2
    np.testing.assert_allclose(comp.jacobian(x, (10.0, 10.0)), J, atol=1e-9)


def test_get_model():
    assert get_model("torus3").name == "torus3"
    assert get_model("torus_2n1", 1).dim == 3
    with pytest.raises(ConfigInvalid):
        get_model("torus_2n1", 2)
    with pytest.raises(ConfigInvalid):
        get_model("sphere")


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_reeb_residual_random_scale_forms(seed):
    from contact_thermo.geometry import torus3

    model = torus3()
    rng = np.random.default_rng(seed)
    lam = ContactForm.scaled(model, random_trig_field(rng, 3, scale=0.2, constant=1.0))
    _, res = reeb_field(lam, model.sample(rng, 20), return_residual=True)
    assert res.max() < 1e-6
