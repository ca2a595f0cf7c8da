"""Fields on periodic coordinate boxes, numerical derivatives and quadrature.

All fields are closures over coordinate arrays. A point batch is an array of
shape ``(..., d)``; a scalar field returns ``(...)``, a vector field or
one-form returns ``(..., d)``. Jacobians follow ``jac[..., i, j] = d_j X_i``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DerivativeFailure, NonFiniteValue

FD_STEP = 1e-5
BRACKET_STEP = 1e-4
CHUNK_SIZE = 1 << 15

_STENCILS = {
    2: ((1.0, -1.0), (1, -1), 2.0),
    4: ((-1.0, 8.0, -8.0, 1.0), (2, 1, -1, -2), 12.0),
}


def wrap_difference(delta, periods):
    """Map coordinate differences to the minimal periodic image."""
    periods = np.asarray(periods, dtype=float)
    return delta - periods * np.round(delta / periods)


def finite_difference(func, x, step, order=4, periods=None):
    """Central-difference derivative of ``func`` at the point batch ``x``.

    Parameters
    ----------
    func : callable
        Maps ``(..., d)`` arrays to ``(...)`` or ``(..., m)``.
    x : ndarray, shape (..., d)
    step : float or array_like of length d
        Absolute step per axis.
    order : {2, 4}
        Accuracy order of the central stencil.
    periods : array_like, optional
        When given, output differences are taken in the minimal periodic
        image; needed for maps whose values are canonicalised into a box.

    Returns
    -------
    ndarray
        Shape ``(..., d)`` for scalar ``func``, ``(..., m, d)`` otherwise.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    steps = np.broadcast_to(np.asarray(step, dtype=float), (d,))
    coeffs, offsets, denom = _STENCILS[order]
    shifted = []
    for j in range(d):
        for k in offsets:
            xs = x.copy()
            xs[..., j] += k * steps[j]
            shifted.append(xs)
    values = np.asarray(func(np.stack(shifted)))
    if periods is not None:
        ref = np.asarray(func(x))
        values = ref + wrap_difference(values - ref, periods)
    values = values.reshape((d, len(offsets)) + values.shape[1:])
    c = np.asarray(coeffs).reshape((1, -1) + (1,) * (values.ndim - 2))
    deriv = (c * values).sum(axis=1)  # (d, ..., [m])
    deriv = deriv / (denom * steps.reshape((d,) + (1,) * (deriv.ndim - 1)))
    # move the differentiation axis last
    return np.moveaxis(deriv, 0, -1)


@dataclass(frozen=True)
class ScalarField:
    """A real function on the box with an optional analytic gradient."""

    func: Callable[[np.ndarray], np.ndarray]
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = ""

    def __call__(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    def gradient(self, x, step=FD_STEP, order=2, allow_fd=True):
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        if not allow_fd:
            raise DerivativeFailure(f"no analytic gradient for field {self.label!r}")
        return finite_difference(self.func, x, step, order=order)

    @classmethod
    def constant(cls, c, label=None):
        c = float(c)
        return cls(
            lambda x: np.full(np.shape(x)[:-1], c),
            lambda x: np.zeros(np.shape(x)),
            label=label if label is not None else repr(c),
        )


@dataclass(frozen=True)
class _ArrayField:
    func: Callable[[np.ndarray], np.ndarray]
    jac: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = ""

    def __call__(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    def jacobian(self, x, step=BRACKET_STEP, order=4, allow_fd=True):
        x = np.asarray(x, dtype=float)
        if self.jac is not None:
            return np.asarray(self.jac(x), dtype=float)
        if not allow_fd:
            raise DerivativeFailure(f"no analytic Jacobian for field {self.label!r}")
        return finite_difference(self.func, x, step, order=order)

    @classmethod
    def constant(cls, v, label=""):
        v = np.asarray(v, dtype=float)
        d = v.shape[-1]
        return cls(
            lambda x: np.broadcast_to(v, np.shape(x)[:-1] + (d,)).copy(),
            lambda x: np.zeros(np.shape(x)[:-1] + (d, d)),
            label=label,
        )


class VectorField(_ArrayField):
    """Tangent vector field, components in the coordinate frame."""


class OneForm(_ArrayField):
    """Covector field, coefficients in the coordinate coframe."""


@dataclass(frozen=True)
class ObservableSystem:
    observables: tuple

    def __post_init__(self):
        object.__setattr__(self, "observables", tuple(self.observables))
        if len(self.observables) < 1:
            raise ValueError("an observable system needs at least one observable")

    @property
    def N(self):
        return len(self.observables)

    def evaluate(self, x):
        """Stack observable values, shape ``(N, ...)``."""
        return np.stack([F(x) for F in self.observables])


_DEFAULT_WORKERS = 1


def set_workers(n):
    """Default worker count for quadrature; ``CONTACT_THERMO_THREADS`` overrides it."""
    global _DEFAULT_WORKERS
    _DEFAULT_WORKERS = max(1, int(n))


def _threads():
    env = os.environ.get("CONTACT_THERMO_THREADS")
    return max(1, int(env)) if env else _DEFAULT_WORKERS


@dataclass(frozen=True)
class Grid:
    """Uniform periodic tensor grid with equal (trapezoid) weights."""

    resolution: tuple
    periods: tuple

    def __post_init__(self):
        object.__setattr__(self, "resolution", tuple(int(r) for r in self.resolution))
        object.__setattr__(self, "periods", tuple(float(p) for p in self.periods))
        if len(self.resolution) != len(self.periods):
            raise ValueError("resolution and periods must have the same length")
        if min(self.resolution) < 1:
            raise ValueError("resolution must be positive")

    @classmethod
    def uniform(cls, periods, per_axis):
        return cls((per_axis,) * len(periods), tuple(periods))

    @property
    def dim(self):
        return len(self.periods)

    @property
    def size(self):
        return int(np.prod(self.resolution))

    @property
    def weight(self):
        return float(np.prod(self.periods)) / self.size

    @property
    def volume(self):
        return float(np.prod(self.periods))

    @cached_property
    def nodes(self):
        axes = [np.arange(r) * (p / r) for r, p in zip(self.resolution, self.periods)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def refine(self, factor=2):
        return Grid(tuple(r * factor for r in self.resolution), self.periods)


def _chunk_sum(values):
    return float(np.sum(values))


def integrate(grid, density, workers=None):
    """Quadrature of ``density`` over the grid.

    ``density`` is either a callable on point batches or an array of node
    values (in ``grid.nodes`` order). Node values are reduced in fixed-size
    chunks whose partial sums are combined with :func:`math.fsum`, so the
    result does not depend on the worker count.
    """
    if callable(density):
        values = np.asarray(density(grid.nodes), dtype=float)
    else:
        values = np.asarray(density, dtype=float)
    values = values.reshape(-1)
    if values.shape[0] != grid.size:
        raise ValueError(f"expected {grid.size} node values, got {values.shape[0]}")
    if not np.all(np.isfinite(values)):
        raise NonFiniteValue("integrand is not finite at some grid node")
    chunks = [values[i:i + CHUNK_SIZE] for i in range(0, values.shape[0], CHUNK_SIZE)]
    workers = workers or _threads()
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partial = list(pool.map(_chunk_sum, chunks))
    else:
        partial = [_chunk_sum(c) for c in chunks]
    return math.fsum(partial) * grid.weight


def lie_bracket(X, Y, x, step=BRACKET_STEP, allow_fd=True):
    """Bracket ``[X, Y] = (DY) X - (DX) Y`` at the point batch ``x``."""
    x = np.asarray(x, dtype=float)
    DX = X.jacobian(x, step=step, allow_fd=allow_fd)
    DY = Y.jacobian(x, step=step, allow_fd=allow_fd)
    return np.einsum("...ij,...j->...i", DY, X(x)) - np.einsum("...ij,...j->...i", DX, Y(x))


def bracket_field(X, Y, step=BRACKET_STEP):
    """``[X, Y]`` as a :class:`VectorField` (Jacobian by finite differences)."""
    return VectorField(lambda x: lie_bracket(X, Y, x, step=step), label=f"[{X.label},{Y.label}]")


def divergence(Y, mu_density, x, step=BRACKET_STEP, allow_fd=True):
    """Divergence of ``Y`` relative to the measure with coordinate density ``mu_density``.

    Returns ``(1/rho) sum_i d_i(rho Y^i)``, the function with
    ``L_Y mu = (div Y) mu``.
    """
    x = np.asarray(x, dtype=float)
    rho = mu_density(x)
    if np.any(rho <= 0):
        raise ValueError("reference density must be positive")
    if Y.jac is not None and mu_density.grad is not None:
        trace = np.trace(Y.jacobian(x), axis1=-2, axis2=-1)
        return trace + np.einsum("...i,...i->...", mu_density.gradient(x), Y(x)) / rho
    if not allow_fd:
        raise DerivativeFailure("divergence needs analytic derivatives or finite differences")
    flux = lambda p: mu_density(p)[..., None] * Y(p)
    J = finite_difference(flux, x, step, order=4)
    return np.trace(J, axis1=-2, axis2=-1) / rho


# -- trigonometric fields with analytic derivatives ---------------------------

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class TrigTerm:
    """``coef * prod_k trig_k(2 pi freq_k x_{axis_k})`` with trig in {cos, sin}."""

    coef: float
    factors: tuple = field(default_factory=tuple)  # (kind, axis, freq)


def _factor_values(kind, axis, freq, x):
    arg = _TWO_PI * freq * x[..., axis]
    if kind == "cos":
        return np.cos(arg), -_TWO_PI * freq * np.sin(arg)
    if kind == "sin":
        return np.sin(arg), _TWO_PI * freq * np.cos(arg)
    raise ValueError(f"unknown trig kind {kind!r}")


def trig_field(terms, dim, label=""):
    """Build a :class:`ScalarField` from a sum of trigonometric monomials."""
    terms = tuple(terms)

    def func(x):
        out = np.zeros(np.shape(x)[:-1])
        for t in terms:
            v = np.full(np.shape(x)[:-1], float(t.coef))
            for kind, axis, freq in t.factors:
                v = v * _factor_values(kind, axis, freq, x)[0]
            out = out + v
        return out

    def grad(x):
        out = np.zeros(np.shape(x)[:-1] + (dim,))
        for t in terms:
            vals = [_factor_values(kind, axis, freq, x) for kind, axis, freq in t.factors]
            for i, (kind, axis, freq) in enumerate(t.factors):
                v = np.full(np.shape(x)[:-1], float(t.coef))
                for j, (fv, dv) in enumerate(vals):
                    v = v * (dv if j == i else fv)
                out[..., axis] += v
        return out

    return ScalarField(func, grad, label=label)


def random_trig_field(rng, dim, n_terms=3, max_freq=1, scale=1.0, constant=0.0):
    """Random smooth periodic scalar field, used by property tests and demos."""
    terms = [TrigTerm(constant)] if constant else []
    for _ in range(n_terms):
        n_factors = int(rng.integers(1, 3))
        factors = tuple(
            (str(rng.choice(["cos", "sin"])), int(rng.integers(dim)), int(rng.integers(1, max_freq + 1)))
            for _ in range(n_factors)
        )
        terms.append(TrigTerm(float(scale * rng.uniform(-1, 1)), factors))
    return trig_field(terms, dim, label="random")


def vector_from_scalars(components, label=""):
    """Stack scalar fields into a :class:`VectorField` with analytic Jacobian when possible."""
    components = tuple(components)

    def func(x):
        return np.stack([c(x) for c in components], axis=-1)

    jac = None
    if all(c.grad is not None for c in components):
        jac = lambda x: np.stack([c.gradient(x) for c in components], axis=-2)
    return VectorField(func, jac, label=label)


def oneform_from_scalars(components, label=""):
    vf = vector_from_scalars(components, label)
    return OneForm(vf.func, vf.jac, label=label)
