"""Constrained entropy extremisation and the thermodynamic equilibrium.

With observables ``F_1..F_N`` and a unit-mass reference form ``lam0`` the
critical points of ``S_{lam0}`` at fixed moments form the exponential family::

    mu_lam = exp(-w(p) + sum_i p_i F_i) mu_{lam0},
    w(p)   = log int exp(sum_i p_i F_i) dmu_{lam0},
    q_i    = dw/dp_i.

The multipliers ``p`` for given moments are found by damped Newton on the
convex dual ``w(p) - <p, q>``. Along a path in ``p`` the points
``(q, p, z = S)`` trace a Legendrian submanifold of ``J^1 R^N``:
``dz = sum_i p_i dq_i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .entropy import GRAM_TOL, check_observables, default_grid, mass
from .errors import NotAttainable, Overflow, ValidationError
from .fields import ObservableSystem, OneForm, ScalarField, integrate
from .geometry import ContactForm

EXP_LIMIT = 700.0
NEWTON_TOL = 1e-10
MAX_ITER = 200
MAX_HALVINGS = 60
COND_TOL = 1e-13
P_STEP_MAX = 0.5


class MaxEntProblem:
    """Reference form, observables and (optionally) moment targets.

    Observable values and the reference measure are tabulated on the grid once.
    """

    def __init__(self, lam0, sys=None, targets=None, grid=None, check=True, gram_tol=GRAM_TOL):
        self.lam0 = lam0
        self.sys = sys
        self.grid = grid if grid is not None else default_grid(lam0.model)
        V = mass(lam0, self.grid)
        if abs(V - 1.0) > 1e-10:
            raise ValidationError(f"reference form must have unit mass, got {V!r}")
        x = self.grid.nodes
        self.mu = lam0.density(x)
        self.F = sys.evaluate(x) if sys is not None else np.zeros((0, self.grid.size))
        if check and sys is not None:
            report = check_observables(lam0, sys, include_constant=True, grid=self.grid, gram_tol=gram_tol)
            if not report.passed:
                raise ValidationError(
                    f"observables with the constant are linearly dependent (min eigenvalue "
                    f"{report.min_eigenvalue:.3e})"
                )
        self.targets = None if targets is None else np.atleast_1d(np.asarray(targets, dtype=float))
        if self.targets is not None and self.targets.shape != (self.N,):
            raise ValidationError(f"expected {self.N} targets, got {self.targets.shape}")

    @property
    def N(self):
        return self.F.shape[0]

    def with_targets(self, targets):
        new = object.__new__(MaxEntProblem)
        new.__dict__.update(self.__dict__)
        new.targets = np.atleast_1d(np.asarray(targets, dtype=float))
        return new

    def integral(self, values):
        return integrate(self.grid, values * self.mu)


@dataclass
class LogPartition:
    w: float
    q: np.ndarray
    covariance: np.ndarray
    weights: np.ndarray  # equilibrium density relative to mu_lam0 at the nodes


def _exponent(prob, p):
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if p.shape != (prob.N,):
        raise ValueError(f"expected {prob.N} multipliers, got shape {p.shape}")
    e = p @ prob.F if prob.N else np.zeros(prob.grid.size)
    top = float(np.max(e))
    if not np.isfinite(top) or top - float(np.min(e)) > EXP_LIMIT or abs(top) > EXP_LIMIT:
        raise Overflow("exponent range exceeds the representable bound")
    return p, e, top


def log_partition(prob, p):
    """``w(p)``, moments ``q = dw/dp`` and covariance ``d^2 w / dp^2``."""
    p, e, top = _exponent(prob, p)
    shifted = np.exp(e - top)
    Z = prob.integral(shifted)
    w = top + np.log(Z)
    rho = shifted / Z
    q = np.array([prob.integral(Fi * rho) for Fi in prob.F])
    cov = np.empty((prob.N, prob.N))
    for i in range(prob.N):
        for j in range(i, prob.N):
            cov[i, j] = cov[j, i] = prob.integral(prob.F[i] * prob.F[j] * rho) - q[i] * q[j]
    return LogPartition(float(w), q, cov, rho)


@dataclass
class MaxEntSolution:
    p: np.ndarray
    w: float
    q: np.ndarray
    entropy: float
    covariance: np.ndarray
    density: Callable
    equilibrium_form: ContactForm
    iterations: int = 0
    objective_history: list = field(default_factory=list)


def _entropy(prob, p, lp):
    e = p @ prob.F if prob.N else np.zeros(prob.grid.size)
    return prob.integral((-lp.w + e) * lp.weights)


def _equilibrium_fields(prob, p, w):
    sys = prob.sys
    n = prob.lam0.n
    obs = sys.observables if sys is not None else ()

    def density(x):
        e = sum((pi * F(x) for pi, F in zip(p, obs)), np.zeros(np.shape(x)[:-1]))
        return np.exp(-w + e)

    def root(x):
        return density(x) ** (1.0 / (n + 1))

    root_grad = None
    if all(F.grad is not None for F in obs):
        def root_grad(x):
            g = sum((pi * F.gradient(x) for pi, F in zip(p, obs)), np.zeros(np.shape(x)))
            return root(x)[..., None] * g / (n + 1)

    lam0 = prob.lam0
    if lam0.is_scale:
        f0 = lam0.scale
        grad = None
        if root_grad is not None and f0.grad is not None:
            grad = lambda x: f0.gradient(x) * root(x)[..., None] + f0(x)[..., None] * root_grad(x)
        form = ContactForm.scaled(lam0.model, ScalarField(lambda x: f0(x) * root(x), grad), "equilibrium")
    else:
        form = ContactForm.general(
            lam0.model, OneForm(lambda x: root(x)[..., None] * lam0.values(x)), "equilibrium"
        )
    return density, form


def _solution(prob, p, lp, iterations=0, history=None):
    density, form = _equilibrium_fields(prob, p, lp.w)
    return MaxEntSolution(
        p=p, w=lp.w, q=lp.q, entropy=_entropy(prob, p, lp), covariance=lp.covariance,
        density=density, equilibrium_form=form, iterations=iterations,
        objective_history=history or [],
    )


def solve(prob, p0=None, newton_tol=NEWTON_TOL, max_iter=MAX_ITER, max_halvings=MAX_HALVINGS):
    """Multipliers matching ``prob.targets`` by damped Newton on the dual.

    Raises :class:`NotAttainable` when the targets are outside the moment
    range (Newton diverges or the covariance degenerates).
    """
    if prob.targets is None:
        raise ValidationError("solve needs moment targets")
    target = prob.targets
    p = np.zeros(prob.N) if p0 is None else np.asarray(p0, dtype=float).copy()
    try:
        lp = log_partition(prob, p)
    except Overflow as exc:
        raise NotAttainable("initial multipliers overflow") from exc
    obj = lp.w - p @ target
    history = [obj]
    for it in range(max_iter):
        grad = lp.q - target
        if np.max(np.abs(grad), initial=0.0) < newton_tol:
            return _solution(prob, p, lp, it, history)
        evals = np.linalg.eigvalsh(lp.covariance)
        if evals[0] <= COND_TOL * max(evals[-1], 1e-300):
            raise NotAttainable("covariance is singular; targets are on or outside the moment boundary")
        step = -np.linalg.solve(lp.covariance, grad)
        slope = grad @ step
        t = 1.0
        for _ in range(max_halvings + 1):
            trial = p + t * step
            try:
                lt = log_partition(prob, trial)
            except Overflow:
                t *= 0.5
                continue
            tobj = lt.w - trial @ target
            if tobj <= obj + 1e-4 * t * slope:
                break
            # roundoff floor near the optimum: accept a step that reduces the gradient
            ulp = 4 * np.spacing(abs(obj))
            if tobj <= obj + ulp and np.max(np.abs(lt.q - target)) < np.max(np.abs(grad)):
                tobj = min(tobj, obj)
                break
            t *= 0.5
        else:
            raise NotAttainable("line search failed; targets are not attainable")
        p, lp, obj = trial, lt, tobj
        history.append(obj)
        if np.max(np.abs(p)) * np.max(np.abs(prob.F), initial=0.0) > EXP_LIMIT:
            raise NotAttainable("multipliers diverge; targets outside the moment range")
    raise NotAttainable(f"Newton did not converge in {max_iter} iterations")


@dataclass(frozen=True)
class EquilibriumPoint:
    q: np.ndarray
    p: np.ndarray
    z: float


@dataclass
class LegendrianReport:
    residuals: np.ndarray
    max_residual: float
    nonmonotone_segments: list


def equilibrium_point(prob, p):
    p = np.atleast_1d(np.asarray(p, dtype=float))
    lp = log_partition(prob, p)
    return EquilibriumPoint(lp.q, p, _entropy(prob, p, lp))


def sweep(prob, path, p_step_max=P_STEP_MAX):
    """Trace ``(q(p), p, S(p))`` along a multiplier path.

    The Legendrian residual of segment ``k`` is
    ``|dz - sum_i pbar_i dq_i|`` with the midpoint multiplier ``pbar``; it is
    third order in the step when ``dz = p . dq`` holds.
    """
    path = [np.atleast_1d(np.asarray(p, dtype=float)) for p in path]
    for a, b in zip(path[:-1], path[1:]):
        if np.linalg.norm(b - a) > p_step_max:
            raise ValidationError(f"path step {np.linalg.norm(b - a):.3g} exceeds {p_step_max}")
    points = [equilibrium_point(prob, p) for p in path]
    residuals, flagged = [], []
    for k, (a, b) in enumerate(zip(points[:-1], points[1:])):
        dq = b.q - a.q
        pbar = 0.5 * (a.p + b.p)
        residuals.append(abs((b.z - a.z) - pbar @ dq))
        dp = b.p - a.p
        if np.any(dp != 0) and dp @ dq <= 0:
            flagged.append(k)
    residuals = np.asarray(residuals)
    return points, LegendrianReport(residuals, float(np.max(residuals, initial=0.0)), flagged)


def equilibrium_with_volume(prob, targets=None, newton_tol=NEWTON_TOL, max_iter=MAX_ITER):
    """Solve for ``(w, p)`` jointly with the unit-volume constraint.

    Uses the multiplier ``1 - w`` on ``dV``: the system
    ``int e^{-w + p.F} dmu0 = 1`` and ``int F_i e^{-w + p.F} dmu0 = q_i`` is
    solved by damped Newton in ``(w, p)`` without eliminating ``w``.
    """
    target = prob.targets if targets is None else np.atleast_1d(np.asarray(targets, dtype=float))
    if target is None:
        target = np.zeros(0)
    N = prob.N
    if target.shape != (N,):
        raise ValidationError(f"expected {N} targets")
    unknown = np.zeros(N + 1)  # (w, p)

    def residual(u):
        w, p = u[0], u[1:]
        e = p @ prob.F if N else np.zeros(prob.grid.size)
        if float(np.max(e)) - w > EXP_LIMIT:
            raise Overflow("exponent overflow")
        rho = np.exp(-w + e)
        m0 = prob.integral(rho)
        m1 = np.array([prob.integral(Fi * rho) for Fi in prob.F])
        m2 = np.array([[prob.integral(Fi * Fj * rho) for Fj in prob.F] for Fi in prob.F]).reshape(N, N)
        G = np.concatenate([[m0 - 1.0], m1 - target])
        J = np.zeros((N + 1, N + 1))
        J[0, 0] = -m0
        J[0, 1:] = m1
        J[1:, 0] = -m1
        J[1:, 1:] = m2
        return G, J

    try:
        G, J = residual(unknown)
        for it in range(max_iter):
            if np.max(np.abs(G)) < newton_tol:
                break
            step = -np.linalg.solve(J, G)
            t = 1.0
            for _ in range(MAX_HALVINGS + 1):
                try:
                    Gt, Jt = residual(unknown + t * step)
                except Overflow:
                    t *= 0.5
                    continue
                if np.max(np.abs(Gt)) < np.max(np.abs(G)) or np.max(np.abs(Gt)) < newton_tol:
                    break
                t *= 0.5
            else:
                raise NotAttainable("line search failed in the volume-constrained solve")
            unknown = unknown + t * step
            G, J = Gt, Jt
        else:
            raise NotAttainable("volume-constrained Newton did not converge")
    except np.linalg.LinAlgError as exc:
        raise NotAttainable("singular Jacobian in the volume-constrained solve") from exc
    w, p = float(unknown[0]), unknown[1:]
    e = p @ prob.F if N else np.zeros(prob.grid.size)
    rho = np.exp(-w + e)
    q = np.array([prob.integral(Fi * rho) for Fi in prob.F])
    cov = np.array([[prob.integral(Fi * Fj * rho) for Fj in prob.F] for Fi in prob.F]).reshape(N, N)
    lp = LogPartition(w, q, cov - np.outer(q, q), rho)
    return _solution(prob, p, lp, it)
