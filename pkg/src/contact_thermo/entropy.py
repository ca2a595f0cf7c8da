"""Volumes, relative entropy of contact forms, and its first and second variations."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NonFiniteValue, NonPositiveMass, RepresentationMismatch
from .fields import (
    Grid,
    OneForm,
    ScalarField,
    VectorField,
    bracket_field,
    divergence,
    finite_difference,
    integrate,
    lie_bracket,
)
from .geometry import (
    ContactForm,
    contract,
    decompose_vector,
    hamiltonian_vector_field,
    pullback,
    reeb_field,
    reeb_vector_field,
)

DENSITY_FLOOR = 1e-300
GRAM_TOL = 1e-10
DEFAULT_RESOLUTION = {1: 64, 2: 12, 3: 6}


def default_grid(model, resolution=None):
    if resolution is None:
        resolution = DEFAULT_RESOLUTION.get(model.n, 4)
    return Grid.uniform(model.periods, resolution)


def _grid(lam, grid):
    return grid if grid is not None else default_grid(lam.model)


def mass(lam, grid=None):
    """Total volume ``V(lam)`` of ``mu_lam``."""
    grid = _grid(lam, grid)
    return integrate(grid, lam.density(grid.nodes))


def normalization_constant(lam, grid=None):
    V = mass(lam, grid)
    if not V > 0:
        raise NonPositiveMass(f"mass {V!r} is not positive")
    return V ** (-1.0 / (lam.n + 1))


def normalize(lam, grid=None):
    """``c * lam`` with ``c = V(lam)^(-1/(n+1))``, which has unit mass."""
    return lam.times(normalization_constant(lam, grid))


def _kl_from_densities(grid, rho1, rho0):
    rho1 = np.asarray(rho1, dtype=float)
    rho0 = np.asarray(rho0, dtype=float)
    if np.any(rho0 < DENSITY_FLOOR) or np.any(rho1 < DENSITY_FLOOR):
        raise NonFiniteValue("density below floor; relative entropy diverges")
    return integrate(grid, np.log(rho1 / rho0) * rho1)


def relative_entropy(lam1, lam0, grid=None):
    """Kullback-Leibler divergence of ``mu_lam1`` from ``mu_lam0``.

    Total masses need not agree; for equal masses the value is nonnegative.
    """
    grid = _grid(lam0, grid)
    x = grid.nodes
    return _kl_from_densities(grid, lam1.density(x), lam0.density(x))


def pullback_density(lam, psi, x):
    """Coordinate density of ``psi^* mu_lam = mu_{psi^* lam}`` at ``x``."""
    J = psi.jacobian(x, lam.model.periods)
    return lam.density(psi(x)) * np.linalg.det(J)


def entropy_of_map(lam, psi, grid=None, route="volume"):
    """Entropy ``S(psi^* lam | lam)`` of a diffeomorphism.

    ``route="volume"`` pulls back the volume form (Jacobian determinant);
    ``route="form"`` pulls back the one-form and rebuilds ``lam ^ (dlam)^n``
    with nested finite differences, which is far more expensive.
    """
    grid = _grid(lam, grid)
    x = grid.nodes
    if route == "volume":
        rho1 = pullback_density(lam, psi, x)
    elif route == "form":
        rho1 = pullback(lam, psi).density(x)
    else:
        raise ValueError(f"unknown route {route!r}")
    return _kl_from_densities(grid, rho1, lam.density(x))


@dataclass(frozen=True)
class Variation:
    """Tangent vector ``alpha = h lam + Y^pi -| dlam`` at a contact form.

    ``y_pi = None`` means a vertical variation (scale change only).
    """

    h: ScalarField
    y_pi: Optional[VectorField] = None

    def oneform(self, lam):
        h, Y = self.h, self.y_pi

        def alpha(x):
            out = h(x)[..., None] * lam.values(x)
            if Y is not None:
                out = out + contract(Y(x), lam.dform(x))
            return out

        return OneForm(alpha, label="alpha")


def xi_projection(lam, Z):
    """Contact-plane part of a vector field, ``Z - lam(Z) R``, as a field."""
    return VectorField(lambda x: decompose_vector(lam, x, Z(x)).xi_part, label=f"{Z.label}^pi")


def _variation_coefficient(lam, h, Y, x):
    k = (lam.n + 1) * h(x)
    if Y is not None:
        k = k + divergence(Y, lam.density_field(), x, step=lam.model.bracket_steps)
    return k


def first_variation_volume(lam, alpha, x):
    """Coefficient ``(n+1) h + div Y^pi`` of the first variation of ``mu_lam``."""
    x = lam.model.wrap(x)
    return _variation_coefficient(lam, alpha.h, alpha.y_pi, x)


def volume_variation_fd(lam, alpha, x, t=1e-3):
    """Central difference of the density of ``lam + t alpha`` relative to ``mu_lam``.

    The density of ``lam + t alpha`` is a polynomial of degree ``n+1`` in ``t``,
    so for ``n = 1`` the central difference has no truncation error.
    """
    x = np.asarray(x, dtype=float)
    a = alpha.oneform(lam)
    plus = lam.plus(a, t).density(x)
    minus = lam.plus(a, -t).density(x)
    return (plus - minus) / (2 * t) / lam.density(x)


def _log_ratio(lam, lam0, x):
    r0 = lam0.density(x)
    if np.any(r0 < DENSITY_FLOOR):
        raise NonFiniteValue("reference density below floor")
    return np.log(lam.density(x) / r0)


def _vertical_terms(lam, lam0, h1, h2, k1, k2, x, grid):
    # first two lines of the big-phase-space Hessian; exactly the small-phase-space Hessian
    n = lam.n
    rho = lam.density(x)
    t1 = integrate(grid, k1 * k2 * rho)
    t2 = integrate(grid, n * (n + 1) * h1 * h2 * (1.0 + _log_ratio(lam, lam0, x)) * rho)
    return t1, t2


def hessian_small(lam0_norm, lam, h1, h2, grid=None):
    """Hessian of ``S_{lam0}`` along vertical variations ``h_i lam``.

    Equals ``int ((n+1)(2n+1) + n(n+1) log f) h1 h2 dmu_lam`` with ``f`` the
    density ratio of ``mu_lam`` to ``mu_{lam0}``.
    """
    if not lam.is_scale:
        raise RepresentationMismatch("hessian_small needs a scale-field contact form")
    grid = _grid(lam, grid)
    x = grid.nodes
    H1, H2 = h1(x), h2(x)
    n = lam.n
    t1, t2 = _vertical_terms(lam, lam0_norm, H1, H2, (n + 1) * H1, (n + 1) * H2, x, grid)
    return t1 + t2


def entropy_along(lam0, lam, alphas, coeffs, grid):
    """``S_{lam0}(lam + sum c_i alpha_i)`` for one-forms ``alpha_i``."""
    form = lam
    for a, c in zip(alphas, coeffs):
        form = form.plus(a, c)
    return relative_entropy(form, lam0, grid)


def mixed_second_difference(fun, step):
    """Central estimate of ``d^2 fun / ds dt`` at ``(0, 0)``."""
    return (fun(step, step) - fun(step, -step) - fun(-step, step) + fun(-step, -step)) / (4 * step * step)


def hessian_small_fd(lam0_norm, lam, h1, h2, grid=None, step=1e-3):
    """Finite-difference reference for :func:`hessian_small` along ``(1 + s h1 + t h2) lam``."""
    grid = _grid(lam, grid)

    def S(s, t):
        f = ScalarField(lambda x: (1.0 + s * h1(x) + t * h2(x)) * lam.scale(x))
        return relative_entropy(ContactForm.scaled(lam.model, f), lam0_norm, grid)

    return mixed_second_difference(S, step)


@dataclass
class HessianReport:
    value: float
    fd_reference: float
    abs_err: float
    rel_err: float
    symmetry_defect: float
    terms: list = field(default_factory=list)

    def as_dict(self):
        return {
            "value": self.value,
            "fd_reference": self.fd_reference,
            "abs_err": self.abs_err,
            "rel_err": self.rel_err,
            "symmetry_defect": self.symmetry_defect,
        }


def _hessian_big_terms(lam0, lam, a1, a2, grid):
    n = lam.n
    x = grid.nodes
    rho = lam.density(x)
    h1, h2 = a1.h(x), a2.h(x)
    Y1, Y2 = a1.y_pi, a2.y_pi
    k1 = _variation_coefficient(lam, a1.h, Y1, x)
    k2 = _variation_coefficient(lam, a2.h, Y2, x)
    t1, t2 = _vertical_terms(lam, lam0, h1, h2, k1, k2, x, grid)
    terms = [t1, t2]
    if Y1 is None and Y2 is None:
        return terms + [0.0] * 5

    zero = VectorField.constant(np.zeros(lam.model.dim))
    Y1 = Y1 if Y1 is not None else zero
    Y2 = Y2 if Y2 is not None else zero
    steps = lam.model.fd_steps
    log_f = ScalarField(lambda p: _log_ratio(lam, lam0, p))
    g = ScalarField(lambda p: 1.0 + log_f(p), label="g")
    G = g(x)
    dg = g.gradient(x, step=steps)
    Xg = hamiltonian_vector_field(lam, g)
    Xg_pi = VectorField(lambda p: Xg(p) + g(p)[..., None] * reeb_field(lam, p), label="Xg^pi")
    R = reeb_vector_field(lam)
    L = lam.values(x)
    W = lam.dform(x)

    def deriv(Y, F):  # Y[F] with F given through its gradient
        return np.einsum("...i,...i->...", Y(x), F)

    dh1 = a1.h.gradient(x, step=steps)
    dh2 = a2.h.gradient(x, step=steps)
    t3 = -(n + 1) * integrate(grid, G * (deriv(Y2, dh1) + deriv(Y1, dh2)) * rho)
    t4 = -n * integrate(grid, (h1 * deriv(Y2, dg) + h2 * deriv(Y1, dg)) * rho)
    b1 = bracket_field(Y1, Xg_pi, step=lam.model.bracket_steps)
    b2 = bracket_field(Y2, Xg_pi, step=lam.model.bracket_steps)
    B1, B2 = b1(x), b2(x)
    t5 = integrate(grid, (np.einsum("...i,...ij,...j->...", Y2(x), W, B1)
                          + 2.0 * np.einsum("...i,...ij,...j->...", Y1(x), W, B2)) * rho)
    bs = lam.model.bracket_steps
    c21 = lie_bracket(Y2, b1, x, step=bs)
    c12 = lie_bracket(Y1, b2, x, step=bs)
    t6 = integrate(grid, (np.einsum("...i,...i->...", L, c21) + np.einsum("...i,...i->...", L, c12)) * rho)
    y2r = bracket_field(Y2, R, step=bs)
    c_r = lie_bracket(Y1, y2r, x, step=bs)
    t7 = -(n + 1) * integrate(grid, G * np.einsum("...i,...i->...", L, c_r) * rho)
    return terms + [t3, t4, t5, t6, t7]


def hessian_big(lam0_norm, lam, a1, a2, grid=None, fd_step=1e-3, with_fd=True):
    """Evaluate the seven-term Hessian of ``S_{lam0}`` on the big phase space.

    The result is a diagnostic: the returned report carries the formula value,
    a finite-difference second derivative along ``lam + s alpha_1 + t alpha_2``,
    their discrepancy, and the symmetry defect ``|H(a1, a2) - H(a2, a1)|``.
    """
    grid = _grid(lam, grid)
    terms = _hessian_big_terms(lam0_norm, lam, a1, a2, grid)
    value = terms[0] + terms[1]
    for t in terms[2:]:
        value = value + t
    swapped = _hessian_big_terms(lam0_norm, lam, a2, a1, grid)
    value_swapped = swapped[0] + swapped[1]
    for t in swapped[2:]:
        value_swapped = value_swapped + t
    fd = float("nan")
    if with_fd:
        alphas = (a1.oneform(lam), a2.oneform(lam))
        fd = mixed_second_difference(lambda s, t: entropy_along(lam0_norm, lam, alphas, (s, t), grid), fd_step)
    abs_err = abs(value - fd)
    rel_err = abs_err / max(abs(fd), 1e-300)
    return HessianReport(value, fd, abs_err, rel_err, abs(value - value_swapped), terms)


@dataclass
class GramReport:
    gram: np.ndarray
    min_eigenvalue: float
    passed: bool
    labels: list


def check_observables(lam, sys, include_constant=False, grid=None, gram_tol=GRAM_TOL):
    """L2(mu_lam) Gram matrix of the observables and its positivity test."""
    grid = _grid(lam, grid)
    x = grid.nodes
    values = [F(x) for F in sys.observables]
    labels = [F.label for F in sys.observables]
    if include_constant:
        values = [np.ones(grid.size)] + values
        labels = ["1"] + labels
    rho = lam.density(x)
    k = len(values)
    G = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            G[i, j] = G[j, i] = integrate(grid, values[i] * values[j] * rho)
    lo = float(np.linalg.eigvalsh(G)[0])
    return GramReport(G, lo, bool(lo > gram_tol), labels)
