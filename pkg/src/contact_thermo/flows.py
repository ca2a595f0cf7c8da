"""Contact Hamiltonian flows and their conformal exponents.

For a contactomorphism ``psi`` with ``psi^* lam = exp(g) lam`` the exponent
``g`` is the thermodynamic potential of the pair. Along a contact Hamiltonian
flow it is accumulated jointly with the trajectory,
``dg/dt = -R_lam[H]``, so ``g`` can be computed either by integration or from
the pulled-back form; the two routes are compared throughout the tests.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotContactomorphism, SingularForm, StepTooLarge
from .fields import ScalarField
from .geometry import Diffeomorphism, _hamiltonian_solve, decompose_vector, reeb_field

DT_MAX = 0.1
CONF_TOL = 1e-5


@dataclass(frozen=True)
class FlowMap:
    """Time-``t`` map of the contact Hamiltonian flow of ``H``, classical RK4."""

    H: ScalarField
    lam: object
    t: float
    dt: float = 1e-3
    method: str = "RK4"

    def __post_init__(self):
        if self.method != "RK4":
            raise ValueError("only the classical RK4 integrator is available")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        steps = abs(self.t) / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ValueError(f"t={self.t} is not a whole number of steps dt={self.dt}")

    @property
    def steps(self):
        return int(round(abs(self.t) / self.dt))

    def inverse(self):
        return FlowMap(self.H, self.lam, -self.t, self.dt)

    def __call__(self, x):
        return flow_point(self, x, keep_trace=False)[0]

    def as_diffeomorphism(self):
        return Diffeomorphism(self.__call__, label=f"flow[{self.H.label}, t={self.t}]")

    def potential(self):
        """Integrated exponent ``g_(psi;lam)`` as a scalar field."""
        return ScalarField(lambda x: flow_point(self, x, keep_trace=False)[1].g_values[-1],
                           label=f"g[{self.H.label}, t={self.t}]")


@dataclass
class PotentialTrace:
    times: np.ndarray
    g_values: np.ndarray  # shape (len(times), ...)
    endpoint_x: np.ndarray


def _rhs(lam, H, x):
    X, _, RH = _hamiltonian_solve(lam, H, x)
    return X, -RH


def flow_point(fm, x, keep_trace=True, dt_max=DT_MAX):
    """Integrate the trajectory and its potential from the point batch ``x``.

    Returns the canonicalised endpoint and a :class:`PotentialTrace`. With
    ``keep_trace=False`` only the final potential is kept.
    """
    if fm.dt > dt_max:
        raise StepTooLarge(f"dt={fm.dt} exceeds dt_max={dt_max}")
    lam, H = fm.lam, fm.H
    x = lam.model.wrap(x)
    g = np.zeros(x.shape[:-1])
    h = fm.dt if fm.t >= 0 else -fm.dt
    times = [0.0]
    gs = [g.copy()]
    _rhs(lam, H, x)  # degenerate start points raise SingularForm here
    for k in range(fm.steps):
        try:
            k1x, k1g = _rhs(lam, H, x)
            k2x, k2g = _rhs(lam, H, x + 0.5 * h * k1x)
            k3x, k3g = _rhs(lam, H, x + 0.5 * h * k2x)
            k4x, k4g = _rhs(lam, H, x + h * k3x)
        except SingularForm as exc:
            raise StepTooLarge(f"RK4 stage left the nondegeneracy region at step {k}") from exc
        x = x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        g = g + h / 6.0 * (k1g + 2 * k2g + 2 * k3g + k4g)
        if keep_trace:
            times.append((k + 1) * h)
            gs.append(g.copy())
    if not keep_trace:
        times, gs = [0.0, fm.steps * h], [np.zeros_like(g), g]
    x = lam.model.wrap(x)
    return x, PotentialTrace(np.asarray(times), np.stack(gs), x)


@dataclass
class PullbackFactor:
    factor: np.ndarray
    defect: np.ndarray

    @property
    def log_factor(self):
        return np.log(self.factor)


def conformal_factor_pullback(lam, psi, x, conf_tol=CONF_TOL, step=None):
    """Conformal factor ``f = (psi^* lam)(R_lam)`` of a contactomorphism.

    The defect is the largest value of ``|(psi^* lam)(v)|`` over the
    contact-plane parts ``v`` of the coordinate vectors, normalised by ``|v|``;
    it vanishes exactly when ``psi^* lam`` is a multiple of ``lam``.
    """
    model = lam.model
    x = model.wrap(x)
    J = psi.jacobian(x, model.periods, step=model.fd_step if step is None else step)
    pulled = np.einsum("...ji,...j->...i", J, lam.values(psi(x)))
    R = reeb_field(lam, x)
    f = np.einsum("...i,...i->...", pulled, R)
    defect = np.zeros(x.shape[:-1])
    for j in range(model.dim):
        e = np.zeros(x.shape)
        e[..., j] = 1.0
        v = decompose_vector(lam, x, e).xi_part
        norm = np.linalg.norm(v, axis=-1)
        ok = norm > 1e-8
        val = np.abs(np.einsum("...i,...i->...", pulled, v)) / np.where(ok, norm, 1.0)
        defect = np.maximum(defect, np.where(ok, val, 0.0))
    if np.any(defect > conf_tol):
        raise NotContactomorphism(f"pullback is not conformal: defect {np.max(defect):.3e}")
    if np.any(f <= 0):
        # a tiny factor computed from large Jacobian entries can lose its sign to cancellation
        raise NotContactomorphism(f"non-positive conformal factor {np.min(f):.3e}")
    return PullbackFactor(f, defect)


def pullback_exponent(lam, psi, x, conf_tol=CONF_TOL):
    return conformal_factor_pullback(lam, psi, x, conf_tol=conf_tol).log_factor


@dataclass
class CocycleReport:
    defect: float
    iteration_defects: dict = field(default_factory=dict)
    growth: dict = field(default_factory=dict)
    g_phi_sup: float = 0.0

    @property
    def growth_ok(self):
        return all(v <= self.g_phi_sup + 1e-6 for v in self.growth.values())


def cocycle_check(lam, psi, phi, sample, n_max=8, conf_tol=CONF_TOL):
    """Defects of the cocycle identity and its iterates on a point sample.

    Reports ``max |g_(psi phi) - g_psi o phi - g_phi|``, the ``N``-fold
    version ``g_(psi phi^N) = g_psi o phi^N + sum_i g_phi o phi^i`` for
    ``N <= n_max``, and ``(1/N) sup |g_(phi^N)|`` for the growth bound.
    """
    x = lam.model.wrap(sample)
    g = lambda m, p: pullback_exponent(lam, m, p, conf_tol=conf_tol)
    g_phi = g(phi, x)
    g_psi_phi = g(phi.then(psi), x)
    defect = float(np.max(np.abs(g_psi_phi - g(psi, phi(x)) - g_phi)))
    report = CocycleReport(defect, g_phi_sup=float(np.max(np.abs(g_phi))))
    orbit = [x]
    for _ in range(n_max):
        orbit.append(phi(orbit[-1]))
    birkhoff = np.zeros(x.shape[:-1])
    phi_N = Diffeomorphism.identity()
    for N in range(1, n_max + 1):
        g_step = g_phi if N == 1 else g(phi, orbit[N - 1])
        birkhoff = birkhoff + g_step
        # the growth bound refers to sup |g_phi| over the whole orbit, not just the sample
        report.g_phi_sup = max(report.g_phi_sup, float(np.max(np.abs(g_step))))
        phi_N = phi_N.then(phi)
        lhs = g(phi_N.then(psi), x)
        rhs = g(psi, orbit[N]) + birkhoff
        report.iteration_defects[N] = float(np.max(np.abs(lhs - rhs)))
        report.growth[N] = float(np.max(np.abs(g(phi_N, x)))) / N
    return report


def dissipation_rate(lam, H, x):
    """Rate ``-(n+1) R_lam[H]`` with ``L_{X_H} mu_lam = rate * mu_lam``."""
    _, _, RH = _hamiltonian_solve(lam, H, x)
    return -(lam.n + 1) * RH
