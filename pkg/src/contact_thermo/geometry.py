"""Pointwise contact geometry on periodic coordinate models.

A contact form is stored either as a positive scale field over the model's
base form (``lam = f * lam0``, fixed contact structure) or as a general
coefficient one-form. Everything is evaluated on point batches of shape
``(..., d)`` with ``d = 2n + 1``.

Pointwise solves use the bordered system::

    [ dlam^T  lam ] [X]   [beta]
    [ lam^T    0  ] [c] = [ a  ]

which is nonsingular exactly when ``lam ^ (dlam)^n != 0``. For consistent
right-hand sides ``c`` vanishes and ``X`` solves the stacked
``(2n+2) x (2n+1)`` system ``X -| dlam = beta, lam(X) = a``, whose residual is
checked against ``lin_tol``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import ConfigInvalid, SingularForm
from .fields import (
    BRACKET_STEP,
    FD_STEP,
    OneForm,
    ScalarField,
    VectorField,
    finite_difference,
    wrap_difference,
)

LIN_TOL = 1e-8
SCALED_LIN_TOL = 1e-6
DEGENERACY_TOL = 1e-12

_TWO_PI = 2.0 * np.pi


def set_lin_tol(tol, scaled_tol=None):
    """Residual tolerances for pointwise solves (analytic and finite-difference forms)."""
    global LIN_TOL, SCALED_LIN_TOL
    if tol <= 0 or (scaled_tol is not None and scaled_tol <= 0):
        raise ConfigInvalid("tolerances must be positive")
    LIN_TOL = float(tol)
    if scaled_tol is not None:
        SCALED_LIN_TOL = float(scaled_tol)


@lru_cache(maxsize=None)
def _wedge_table(n):
    d = 2 * n + 1
    perms, signs = [], []
    for p in itertools.permutations(range(d)):
        inversions = sum(1 for i in range(d) for j in range(i + 1, d) if p[i] > p[j])
        perms.append(p)
        signs.append(-1.0 if inversions % 2 else 1.0)
    return np.array(perms), np.array(signs)


def wedge_density(lam, W, n):
    """Coefficient of ``lam ^ (dlam)^n`` on ``dx_1 ^ ... ^ dx_{2n+1}``.

    ``W[..., i, j] = d_i lam_j - d_j lam_i`` is the coefficient matrix of
    ``dlam = 1/2 sum W_ij dx_i ^ dx_j``.
    """
    perms, signs = _wedge_table(n)
    total = np.zeros(np.shape(lam)[:-1])
    for p, s in zip(perms, signs):
        term = s * lam[..., p[0]]
        for k in range(n):
            term = term * W[..., p[2 * k + 1], p[2 * k + 2]]
        total = total + term
    return total / 2.0 ** n


def exterior_derivative(jac):
    """``W_ij = d_i lam_j - d_j lam_i`` from ``jac[..., i, j] = d_j lam_i``."""
    return np.swapaxes(jac, -1, -2) - jac


@dataclass(frozen=True)
class ContactModel:
    """Periodic coordinate box carrying a base contact form."""

    name: str
    n: int
    periods: tuple
    base_form: OneForm
    orientation_sign: float
    coords: tuple
    fd_step: float = FD_STEP
    bracket_step: float = BRACKET_STEP

    def with_steps(self, fd_step=None, bracket_step=None):
        """Copy with different finite-difference steps (relative to the periods)."""
        return replace(
            self,
            fd_step=self.fd_step if fd_step is None else float(fd_step),
            bracket_step=self.bracket_step if bracket_step is None else float(bracket_step),
        )

    @property
    def dim(self):
        return 2 * self.n + 1

    @property
    def volume(self):
        return float(np.prod(self.periods))

    def wrap(self, x):
        p = np.asarray(self.periods)
        return np.mod(np.asarray(x, dtype=float), p)

    def base_dform(self, x):
        return exterior_derivative(self.base_form.jacobian(x))

    def base_density(self, x):
        """Orientation-corrected coordinate density of ``mu_{lam0}``."""
        x = np.asarray(x, dtype=float)
        return self.orientation_sign * wedge_density(self.base_form(x), self.base_dform(x), self.n)

    @property
    def fd_steps(self):
        return self.fd_step * np.asarray(self.periods)

    @property
    def bracket_steps(self):
        return self.bracket_step * np.asarray(self.periods)

    def sample(self, rng, size):
        return rng.random((size, self.dim)) * np.asarray(self.periods)


def _lutz_form(n):
    # n = 1: cos(2 pi z) dx + sin(2 pi z) dy on the unit 3-torus, z last
    d = 2 * n + 1
    z = d - 1

    def func(x):
        out = np.zeros(np.shape(x))
        out[..., 0] = np.cos(_TWO_PI * x[..., z])
        out[..., 1] = np.sin(_TWO_PI * x[..., z])
        return out

    def jac(x):
        out = np.zeros(np.shape(x) + (d,))
        out[..., 0, z] = -_TWO_PI * np.sin(_TWO_PI * x[..., z])
        out[..., 1, z] = _TWO_PI * np.cos(_TWO_PI * x[..., z])
        return out

    return OneForm(func, jac, label="cos(2pi z)dx+sin(2pi z)dy")


def torus3():
    """Unit 3-torus with ``lam0 = cos(2 pi z) dx + sin(2 pi z) dy``.

    ``lam0 ^ dlam0 = -2 pi dx^dy^dz``, so the orientation sign is -1 and
    ``mu_{lam0}`` has coordinate density ``2 pi``.
    """
    form = _lutz_form(1)
    raw = wedge_density(form(np.zeros(3)), exterior_derivative(form.jacobian(np.zeros(3))), 1)
    return ContactModel("torus3", 1, (1.0, 1.0, 1.0), form, float(np.sign(raw)), ("x", "y", "z"))


def get_model(name, n=1):
    """Look up a catalog model by name (``"torus3"`` or ``"torus_2n1"``)."""
    if name == "torus3":
        return torus3()
    if name == "torus_2n1":
        if n == 1:
            return torus3()
        raise ConfigInvalid(
            "torus_2n1 is only available for n=1: no trigonometric contact form on T^(2n+1), "
            "n >= 2, is in the catalog"
        )
    raise ConfigInvalid(f"unknown model {name!r}")


@dataclass(frozen=True)
class ContactForm:
    """A contact form on a catalog model.

    Exactly one of ``scale`` (``lam = scale * lam0``) or ``coeffs`` (general
    coefficients) is set. ``ContactForm(model)`` with neither is ``lam0`` itself.
    """

    model: ContactModel
    scale: Optional[ScalarField] = None
    coeffs: Optional[OneForm] = None
    label: str = ""

    def __post_init__(self):
        if self.scale is not None and self.coeffs is not None:
            raise ValueError("give either a scale field or general coefficients, not both")
        if self.scale is None and self.coeffs is None:
            object.__setattr__(self, "scale", ScalarField.constant(1.0))

    @classmethod
    def base(cls, model):
        return cls(model, label=model.name)

    @classmethod
    def scaled(cls, model, f, label=""):
        if not isinstance(f, ScalarField):
            f = ScalarField.constant(f)
        return cls(model, scale=f, label=label)

    @classmethod
    def general(cls, model, coeffs, label=""):
        return cls(model, coeffs=coeffs, label=label)

    @property
    def is_scale(self):
        return self.scale is not None

    @property
    def n(self):
        return self.model.n

    @property
    def uses_fd(self):
        if self.is_scale:
            return self.scale.grad is None
        return self.coeffs.jac is None

    @property
    def lin_tol(self):
        return SCALED_LIN_TOL if self.uses_fd else LIN_TOL

    def values(self, x):
        """Coefficients ``lam_x`` in the coordinate coframe."""
        x = np.asarray(x, dtype=float)
        if self.is_scale:
            return self.scale(x)[..., None] * self.model.base_form(x)
        return self.coeffs(x)

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_scale:
            f = self.scale(x)
            df = self.scale.gradient(x, step=self.model.fd_steps)
            return f[..., None, None] * self.model.base_form.jacobian(x) + np.einsum(
                "...i,...j->...ij", self.model.base_form(x), df
            )
        return self.coeffs.jacobian(x, step=self.model.bracket_steps)

    def dform(self, x):
        """Matrix ``W`` of ``dlam``; ``W[..., i, j] = dlam(e_i, e_j)``."""
        return exterior_derivative(self.jacobian(x))

    def raw_density(self, x):
        x = np.asarray(x, dtype=float)
        return wedge_density(self.values(x), self.dform(x), self.n)

    def density(self, x):
        """Coordinate density of ``mu_lam``, orientation-corrected.

        For scale forms this is ``f^(n+1) * density(lam0)`` exactly.
        """
        x = np.asarray(x, dtype=float)
        if self.is_scale:
            return self.scale(x) ** (self.n + 1) * self.model.base_density(x)
        return self.model.orientation_sign * self.raw_density(x)

    def density_field(self):
        return ScalarField(self.density, label=f"mu[{self.label}]")

    def times(self, c):
        """The form ``c * lam`` for a constant ``c``."""
        c = float(c)
        if self.is_scale:
            f = self.scale
            grad = None if f.grad is None else (lambda x: c * f.gradient(x))
            return ContactForm.scaled(self.model, ScalarField(lambda x: c * f(x), grad), self.label)
        a = self.coeffs
        jac = None if a.jac is None else (lambda x: c * a.jacobian(x))
        return ContactForm.general(self.model, OneForm(lambda x: c * a(x), jac), self.label)

    def as_oneform(self):
        if not self.is_scale:
            return self.coeffs
        return OneForm(self.values, self.jacobian if not self.uses_fd else None, label=self.label)

    def as_general(self):
        return ContactForm.general(self.model, self.as_oneform(), self.label)

    def plus(self, alpha, t=1.0):
        """General form ``lam + t * alpha`` for a :class:`OneForm` ``alpha``."""
        lam = self.as_oneform()
        jac = None
        if lam.jac is not None and alpha.jac is not None:
            jac = lambda x: lam.jacobian(x) + t * alpha.jacobian(x)
        return ContactForm.general(self.model, OneForm(lambda x: lam(x) + t * alpha(x), jac))


@dataclass(frozen=True)
class TangentDecomposition:
    xi_part: np.ndarray
    reeb_coeff: np.ndarray


@dataclass(frozen=True)
class OneFormDecomposition:
    h: np.ndarray
    y_pi: np.ndarray


def contract(X, W):
    """Coefficients of ``X -| dlam``."""
    return np.einsum("...i,...ij->...j", X, W)


def _bordered_solve(lam, W, beta, a, n, tol, residual_scale=1.0):
    raw = wedge_density(lam, W, n)
    if np.any(np.abs(raw) <= DEGENERACY_TOL):
        raise SingularForm("lam ^ (dlam)^n vanishes at an evaluated point")
    d = lam.shape[-1]
    M = np.zeros(lam.shape[:-1] + (d + 1, d + 1))
    M[..., :d, :d] = np.swapaxes(W, -1, -2)
    M[..., :d, d] = lam
    M[..., d, :d] = lam
    rhs = np.concatenate([beta, np.asarray(a, dtype=float)[..., None] * np.ones(lam.shape[:-1] + (1,))], axis=-1)
    sol = np.linalg.solve(M, rhs[..., None])[..., 0]
    X = sol[..., :d]
    res = np.concatenate(
        [contract(X, W) - beta, (np.einsum("...i,...i->...", lam, X) - a)[..., None]], axis=-1
    )
    residual = np.max(np.abs(res), axis=-1) / np.maximum(1.0, residual_scale)
    if np.any(residual >= tol):
        raise SingularForm(f"defining equations inconsistent: residual {np.max(residual):.3e}")
    return X, residual


def _frame(lam, x):
    x = lam.model.wrap(x)
    return x, lam.values(x), lam.dform(x)


def reeb_field(lam, x, return_residual=False):
    """Reeb vector ``R`` with ``dlam(R, .) = 0`` and ``lam(R) = 1``."""
    x, L, W = _frame(lam, x)
    R, residual = _bordered_solve(L, W, np.zeros_like(L), np.ones(L.shape[:-1]), lam.n, lam.lin_tol)
    return (R, residual) if return_residual else R


def reeb_vector_field(lam):
    return VectorField(lambda x: reeb_field(lam, x), label=f"R[{lam.label}]")


def decompose_vector(lam, x, X):
    """Split ``X = X^pi + lam(X) R`` with ``X^pi`` in the contact plane."""
    x = lam.model.wrap(x)
    X = np.asarray(X, dtype=float)
    R = reeb_field(lam, x)
    c = np.einsum("...i,...i->...", lam.values(x), X)
    return TangentDecomposition(X - c[..., None] * R, c)


def decompose_oneform(lam, x, alpha):
    """Split ``alpha = h lam + Y^pi -| dlam`` with ``lam(Y^pi) = 0``."""
    x, L, W = _frame(lam, x)
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), L.shape)
    R = reeb_field(lam, x)
    h = np.einsum("...i,...i->...", alpha, R)
    beta = alpha - h[..., None] * L
    Y, _ = _bordered_solve(
        L, W, beta, np.zeros(L.shape[:-1]), lam.n, lam.lin_tol,
        residual_scale=float(np.max(np.abs(beta), initial=0.0)),
    )
    return OneFormDecomposition(h, Y)


def _hamiltonian_solve(lam, H, x, allow_fd=True):
    x, L, W = _frame(lam, x)
    dH = H.gradient(x, step=lam.model.fd_steps, allow_fd=allow_fd)
    R = reeb_field(lam, x)
    RH = np.einsum("...i,...i->...", dH, R)
    beta = dH - RH[..., None] * L
    Hx = H(x)
    X, residual = _bordered_solve(
        L, W, beta, -Hx, lam.n, lam.lin_tol,
        residual_scale=float(max(np.max(np.abs(beta), initial=0.0), np.max(np.abs(Hx), initial=0.0))),
    )
    return X, residual, RH


def contact_hamiltonian_field(lam, H, x, return_residual=False, allow_fd=True):
    """Contact Hamiltonian vector field of ``H``.

    Solves ``lam(X) = -H`` and ``X -| dlam = dH - R[H] lam``.
    """
    X, residual, _ = _hamiltonian_solve(lam, H, x, allow_fd=allow_fd)
    return (X, residual) if return_residual else X


def hamiltonian_vector_field(lam, H):
    return VectorField(lambda x: contact_hamiltonian_field(lam, H, x), label=f"X[{H.label}]")


def xi_part_field(lam, X):
    """The contact-plane component ``X^pi`` of a vector field."""
    return VectorField(lambda x: decompose_vector(lam, x, X(x)).xi_part, label=f"{X.label}^pi")


def reeb_derivative(lam, H, x):
    """``R_lam[H]`` at ``x``."""
    x = lam.model.wrap(x)
    return np.einsum("...i,...i->...", H.gradient(x, step=lam.model.fd_steps), reeb_field(lam, x))


# -- diffeomorphisms and pullbacks --------------------------------------------


@dataclass(frozen=True)
class Diffeomorphism:
    """A map of the periodic box, possibly with an analytic Jacobian.

    ``map`` may return unwrapped coordinates; consumers treat values modulo
    the periods.
    """

    map: Callable[[np.ndarray], np.ndarray]
    jac: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = ""
    # for a composite, the maps in order of application; its Jacobian is the
    # product of factor Jacobians, which keeps differences off the long composite
    factors: tuple = ()

    def __call__(self, x):
        return np.asarray(self.map(np.asarray(x, dtype=float)), dtype=float)

    def jacobian(self, x, periods, step=FD_STEP):
        x = np.asarray(x, dtype=float)
        if self.jac is not None:
            return np.asarray(self.jac(x), dtype=float)
        if self.factors:
            J = None
            for f in self.factors:
                Jf = f.jacobian(x, periods, step=step)
                J = Jf if J is None else np.einsum("...ij,...jk->...ik", Jf, J)
                x = f(x)
            return J
        steps = step * np.asarray(periods)
        return finite_difference(self.map, x, steps, order=4, periods=periods)

    def then(self, other):
        """``other o self`` (apply ``self`` first)."""
        if self.jac is not None and other.jac is not None:
            jac = lambda x: np.einsum("...ij,...jk->...ik", other.jac(self.map(x)), self.jac(x))
            return Diffeomorphism(lambda x: other.map(self.map(x)), jac, label=f"{other.label}.{self.label}")
        factors = (self.factors or (self,)) + (other.factors or (other,))
        return Diffeomorphism(lambda x: other.map(self.map(x)), None, label=f"{other.label}.{self.label}",
                              factors=factors)

    def power(self, N):
        out = Diffeomorphism.identity()
        for _ in range(N):
            out = out.then(self)
        return out

    @classmethod
    def identity(cls):
        return cls(lambda x: np.array(x, dtype=float), lambda x: np.broadcast_to(
            np.eye(np.shape(x)[-1]), np.shape(x) + (np.shape(x)[-1],)).copy(), label="id")

    @classmethod
    def translation(cls, shift):
        shift = np.asarray(shift, dtype=float)
        return cls(lambda x: np.asarray(x) + shift, lambda x: np.broadcast_to(
            np.eye(shift.shape[0]), np.shape(x) + (shift.shape[0],)).copy(), label=f"T{tuple(shift)}")


def pullback(lam, psi):
    """The general contact form ``psi^* lam`` (coefficients ``Dpsi^T lam(psi(x))``)."""
    model = lam.model
    values = lambda x: np.einsum("...ji,...j->...i", psi.jacobian(x, model.periods), lam.values(psi(x)))
    return ContactForm.general(model, OneForm(values, label=f"pullback[{lam.label}]"))
