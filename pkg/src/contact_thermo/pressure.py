"""Finite-N thermodynamic formalism for contact pairs.

Birkhoff sums of the potential ``g_(psi;lam)``, greedy ``(N, eps)``-separated
sets in the Bowen metric, partition functions

    Z_N(beta, eps) = sum_{x in E} exp(-beta (n+1) S_N g(x)),

and the resulting pressure estimates. Separated sets are built greedily from a
deterministic candidate list, so every ``Z_N`` here is a lower bound of the
supremum over all separated sets. Distances use the flat periodic metric.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import EmptyBall, NotInvariant, Overflow, ValidationError
from .fields import Grid, ScalarField, integrate, trig_field, TrigTerm, wrap_difference
from .flows import CONF_TOL, FlowMap, conformal_factor_pullback, flow_point, pullback_exponent
from .geometry import ContactForm, Diffeomorphism

EXP_LIMIT = 700.0
INV_TOL = 1e-6
CANDIDATE_RESOLUTION = 16


@dataclass
class ContactPair:
    """A contactomorphism ``psi`` with its form ``lam`` and potential ``g``.

    ``step`` optionally maps a batch ``x`` to ``(psi(x), g(x))`` in one pass;
    flows provide it since the potential is integrated with the trajectory.
    """

    psi: Callable
    lam: ContactForm
    g: ScalarField
    step: Optional[Callable] = None
    label: str = ""

    def advance(self, x):
        if self.step is not None:
            return self.step(x)
        return self.lam.model.wrap(self.psi(x)), self.g(x)

    @classmethod
    def from_flow(cls, lam, H, t=1.0, dt=1e-3, validation_sample=None, conf_tol=CONF_TOL):
        fm = FlowMap(H, lam, t, dt)

        def step(x):
            end, trace = flow_point(fm, x, keep_trace=False)
            return end, trace.g_values[-1]

        pair = cls(fm.as_diffeomorphism(), lam, fm.potential(), step, label=f"flow[{H.label}, t={t}]")
        if validation_sample is not None:
            pair.validate(validation_sample, conf_tol)
        return pair

    @classmethod
    def reeb(cls, lam, t=1.0, dt=1e-3, validation_sample=None):
        """Time-``t`` Reeb map: the contact Hamiltonian flow of ``H = -1``, ``g = 0``."""
        pair = cls.from_flow(lam, ScalarField.constant(-1.0, "-1"), t, dt, validation_sample)
        pair.label = f"reeb[t={t}]"
        return pair

    @classmethod
    def identity(cls, lam):
        return cls(Diffeomorphism.identity(), lam, ScalarField.constant(0.0), label="id")

    def validate(self, sample, conf_tol=CONF_TOL):
        """Check the contactomorphism defect and that ``g`` is finite on ``sample``."""
        psi = self.psi if isinstance(self.psi, Diffeomorphism) else Diffeomorphism(self.psi)
        conformal_factor_pullback(self.lam, psi, sample, conf_tol=conf_tol)
        if not np.all(np.isfinite(self.g(sample))):
            raise ValidationError("potential is not finite on the validation sample")
        return True


def periodic_distance(a, b, periods):
    """Flat wraparound Euclidean distance between broadcastable batches."""
    return np.linalg.norm(wrap_difference(np.asarray(a) - np.asarray(b), periods), axis=-1)


@dataclass
class Orbit:
    points: np.ndarray  # (N+1, M, d): psi^k x for k = 0..N
    g: np.ndarray       # (N, M): g(psi^k x) for k = 0..N-1

    @property
    def N(self):
        return self.g.shape[0]

    def birkhoff(self, N=None):
        N = self.N if N is None else N
        return self.g[:N].sum(axis=0)


def orbit(pair, x, N):
    x = pair.lam.model.wrap(np.atleast_2d(np.asarray(x, dtype=float)))
    pts, gs = [x], []
    for _ in range(N):
        nxt, gv = pair.advance(pts[-1])
        pts.append(pair.lam.model.wrap(nxt))
        gs.append(np.broadcast_to(gv, nxt.shape[:-1]).astype(float))
    g = np.stack(gs) if gs else np.zeros((0, x.shape[0]))
    return Orbit(np.stack(pts), g)


def birkhoff_sum(pair, N, x):
    """``S_N g(x) = sum_{k=1}^N g(psi^(k-1) x)``."""
    if N < 1:
        raise ValueError("N must be at least 1")
    x = np.asarray(x, dtype=float)
    out = orbit(pair, x.reshape(-1, x.shape[-1]), N).birkhoff()
    return out.reshape(x.shape[:-1])


def default_candidates(model, resolution=CANDIDATE_RESOLUTION):
    return Grid.uniform(model.periods, resolution).nodes


def bowen_distance(orb, i, idx, N, periods):
    """``max_{0<=k<=N} d(psi^k x_i, psi^k x_j)`` for all ``j`` in ``idx``."""
    P = orb.points[: N + 1]
    return periodic_distance(P[:, i][:, None, :], P[:, idx], periods).max(axis=0)


def _greedy(orb, N, eps, periods):
    chosen = []
    P = orb.points[: N + 1]  # (N+1, M, d)
    for i in range(P.shape[1]):
        if chosen:
            d = periodic_distance(P[:, i][:, None, :], P[:, chosen], periods).max(axis=0)
            if d.min() <= eps:
                continue
        chosen.append(i)
    return chosen


def separated_set(pair, N, eps, candidates=None, _orbit=None):
    """Greedy maximal ``(N, eps)``-separated subset of ``candidates`` (in order)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    model = pair.lam.model
    if candidates is None:
        candidates = default_candidates(model)
    orb = _orbit if _orbit is not None else orbit(pair, candidates, N)
    idx = _greedy(orb, N, eps, model.periods)
    return orb.points[0, idx]


def is_separated(pair, points, N, eps):
    """Exact validity check: every distinct pair has Bowen distance ``> eps``."""
    orb = orbit(pair, points, N)
    M = orb.points.shape[1]
    for i in range(M - 1):
        if bowen_distance(orb, i, np.arange(i + 1, M), N, pair.lam.model.periods).min() <= eps:
            return False
    return True


def _log_sum_exp(exponents):
    exponents = np.asarray(exponents, dtype=float)
    if exponents.size == 0:
        return -math.inf
    top = float(np.max(exponents))
    if not np.isfinite(top):
        raise Overflow("non-finite Birkhoff sum")
    return top + math.log(math.fsum(np.exp(exponents - top)))


def _partition_data(pair, N, eps, candidates, orb=None):
    model = pair.lam.model
    if candidates is None:
        candidates = default_candidates(model)
    if orb is None:
        orb = orbit(pair, candidates, N)
    idx = _greedy(orb, N, eps, model.periods)
    return idx, orb.birkhoff(N)[idx]


def log_partition_function(pair, N, eps, beta, candidates=None, _orbit=None):
    _, S = _partition_data(pair, N, eps, candidates, _orbit)
    return _log_sum_exp(-beta * (pair.lam.n + 1) * S)


def partition_function(pair, N, eps, beta, candidates=None, _orbit=None):
    """``Z_N(beta, eps)`` over the greedy separated set."""
    idx, S = _partition_data(pair, N, eps, candidates, _orbit)
    if beta == 0:
        return float(len(idx))
    e = -beta * (pair.lam.n + 1) * S
    top = float(np.max(e))
    if top > EXP_LIMIT:
        raise Overflow(f"partition function exponent {top:.1f} exceeds {EXP_LIMIT}")
    return math.exp(top) * math.fsum(np.exp(e - top))


@dataclass
class PressureEstimate:
    beta: float
    eps: float
    per_N: list = field(default_factory=list)  # (N, Z_N, log(Z_N)/N)
    extrapolated: float = math.nan
    monotone_flag: bool = False

    def as_dict(self):
        return {
            "beta": self.beta, "eps": self.eps,
            "per_N": [list(r) for r in self.per_N],
            "extrapolated": self.extrapolated, "monotone_flag": self.monotone_flag,
        }


def pressure_estimate(pair, beta, eps, N_list, candidates=None):
    """Finite-N sequence ``(1/N) log Z_N``; the last value is the estimate.

    ``monotone_flag`` is set when the sequence is nonincreasing in ``N``.
    """
    N_list = [int(N) for N in N_list]
    if any(b <= a for a, b in zip(N_list[:-1], N_list[1:])) or N_list[0] < 1:
        raise ValueError("N_list must be positive and strictly increasing")
    if candidates is None:
        candidates = default_candidates(pair.lam.model)
    orb = orbit(pair, candidates, N_list[-1])
    est = PressureEstimate(float(beta), float(eps))
    for N in N_list:
        logZ = log_partition_function(pair, N, eps, beta, _orbit=orb)
        est.per_N.append((N, math.exp(logZ), logZ / N))
    values = [r[2] for r in est.per_N]
    est.extrapolated = values[-1]
    est.monotone_flag = all(b <= a for a, b in zip(values[:-1], values[1:]))
    return est


def _test_battery(dim, max_freq=1):
    fields = []
    for axis in range(dim):
        for f in range(1, max_freq + 1):
            for kind in ("cos", "sin"):
                fields.append(trig_field([TrigTerm(1.0, ((kind, axis, f),))], dim, f"{kind}{f}x{axis}"))
    return fields


def variational_bound(pair, nu_density, h_nu, beta, grid=None, inv_tol=INV_TOL, battery=None):
    """``h_nu - beta (n+1) int g dnu`` for a ``psi``-invariant probability density.

    ``nu_density`` is taken with respect to coordinate Lebesgue measure.
    Invariance is checked on a trigonometric test battery.
    """
    model = pair.lam.model
    grid = grid if grid is not None else Grid.uniform(model.periods, CANDIDATE_RESOLUTION)
    x = grid.nodes
    nu = np.asarray(nu_density(x), dtype=float)
    total = integrate(grid, nu)
    if abs(total - 1.0) > 1e-8 or np.any(nu < 0):
        raise ValidationError(f"nu is not a probability density (mass {total!r})")
    image, g = pair.advance(x)
    for phi in battery if battery is not None else _test_battery(model.dim):
        gap = abs(integrate(grid, phi(image) * nu) - integrate(grid, phi(x) * nu))
        if gap >= inv_tol:
            raise NotInvariant(f"measure is not invariant: gap {gap:.3e} for {phi.label}")
    g = np.broadcast_to(g, x.shape[:-1])
    return float(h_nu - beta * (model.n + 1) * integrate(grid, g * nu))


@dataclass
class GibbsReport:
    beta: float
    eps: float
    P: float
    ratio_min: float
    ratio_max: float
    ratios: dict = field(default_factory=dict)  # N -> per-center ratios

    def as_dict(self):
        return {
            "beta": self.beta, "eps": self.eps, "P": self.P,
            "ratio_min": self.ratio_min, "ratio_max": self.ratio_max,
            "ratios": {str(N): [float(r) for r in v] for N, v in self.ratios.items()},
        }


def gibbs_diagnostic(pair, mu_density, beta, P, eps, N_list, centers, grid=None):
    """Empirical Gibbs constants from Bowen-ball measures on the grid.

    For each center ``x`` and ``N`` the ratio
    ``mu(B_(N,eps)(x)) / exp(-beta (n+1) S_N g(x) - N P)`` is formed with the
    ball measure estimated by grid-node membership.
    """
    model = pair.lam.model
    grid = grid if grid is not None else Grid.uniform(model.periods, CANDIDATE_RESOLUTION)
    N_list = [int(N) for N in N_list]
    Nmax = max(N_list)
    nodes = grid.nodes
    weights = np.asarray(mu_density(nodes), dtype=float) * grid.weight
    node_orb = orbit(pair, nodes, Nmax)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    c_orb = orbit(pair, centers, Nmax)
    report = GibbsReport(float(beta), float(eps), float(P), math.inf, -math.inf)
    for N in N_list:
        S = c_orb.birkhoff(N)
        ratios = []
        for i in range(centers.shape[0]):
            d = periodic_distance(c_orb.points[: N + 1, i][:, None, :], node_orb.points[: N + 1],
                                  model.periods).max(axis=0)
            inside = d < eps
            if not inside.any():
                raise EmptyBall(
                    f"no grid node in the Bowen ball (N={N}, eps={eps}); refine the grid or enlarge eps"
                )
            ball = math.fsum(weights[inside])
            log_ratio = math.log(ball) + beta * (model.n + 1) * S[i] + N * P
            ratios.append(math.exp(log_ratio))
        report.ratios[N] = ratios
        report.ratio_min = min(report.ratio_min, min(ratios))
        report.ratio_max = max(report.ratio_max, max(ratios))
    return report


def coboundary_defect(lam, psi, f, sample, conf_tol=CONF_TOL):
    """``max |g_(psi; f lam) - (log f o psi - log f + g_(psi; lam))|`` on ``sample``.

    ``f`` is a positive :class:`ScalarField`; ``lam`` must be a scale form.
    """
    if not lam.is_scale:
        raise ValidationError("coboundary check needs a scale-field form")
    scale = lam.scale
    grad = None
    if scale.grad is not None and f.grad is not None:
        grad = lambda x: f.gradient(x) * scale(x)[..., None] + f(x)[..., None] * scale.gradient(x)
    lam_f = ContactForm.scaled(lam.model, ScalarField(lambda x: f(x) * scale(x), grad), "f*lam")
    x = lam.model.wrap(sample)
    g = pullback_exponent(lam, psi, x, conf_tol)
    g_f = pullback_exponent(lam_f, psi, x, conf_tol)
    h = lambda y: np.log(f(y))
    return float(np.max(np.abs(g_f - (h(psi(x)) - h(x) + g))))
