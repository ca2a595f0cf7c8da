"""Command line interface.

Every subcommand resolves a :class:`RunConfig` (defaults, then an optional
``--config`` file, then ``--set key=value`` overrides and dedicated flags),
runs one computation and writes a CSV or JSON artifact that embeds the resolved
config and a sha256 of its content. Exit status: 0 on success, 2 when the
inputs are mathematically unsuitable, 1 on internal errors.

Scalar expressions (Hamiltonians, observables, scale fields) use a small
catalog rather than a parser: terms joined by ``+``/``-``, each a product of
numbers and trig monomials ``cos2pix``, ``sin4piz`` (``cos(2 pi k x)`` with
``2k`` written before ``pi``). Example: ``1+0.3*cos2pix*sin2piy``.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import re
import sys
from dataclasses import dataclass

import numpy as np

from . import entropy, flows, geometry, maxent, pressure
from .errors import ConfigInvalid, ContactThermoError, UnknownSubcommand, ValidationError
from .fields import Grid, ObservableSystem, ScalarField, TrigTerm, set_workers, trig_field

SUBCOMMANDS = (
    "mass", "entropy", "reeb", "flow", "cocycle-check", "maxent", "legendrian-sweep",
    "hessian-check", "pressure", "gibbs-check", "selftest",
)


# -- configuration -------------------------------------------------------------


@dataclass
class RunConfig:
    model_name: str = "torus3"
    model_n: int = 1
    quadrature_resolution: int = 64
    fd_step: float = 1e-5
    fd_bracket_step: float = 1e-4
    integ_dt: float = 1e-3
    tol_lin: float = 1e-8
    tol_conf: float = 1e-5
    tol_newton: float = 1e-10
    tol_gram: float = 1e-10
    seed: int = 0
    output_path: str = ""
    output_format: str = "csv"
    threads: int = 1

    # dotted key <-> attribute
    KEYS = {
        "model.name": "model_name", "model.n": "model_n",
        "quadrature.resolution": "quadrature_resolution",
        "fd.step": "fd_step", "fd.bracket_step": "fd_bracket_step", "integ.dt": "integ_dt",
        "tol.lin": "tol_lin", "tol.conf": "tol_conf", "tol.newton": "tol_newton", "tol.gram": "tol_gram",
        "seed": "seed", "output.path": "output_path", "output.format": "output_format",
        "threads": "threads",
    }

    def validate(self):
        for key in ("fd_step", "fd_bracket_step", "integ_dt", "tol_lin", "tol_conf", "tol_newton", "tol_gram"):
            v = getattr(self, key)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigInvalid(f"{key.replace('_', '.', 1)} must be positive, got {v!r}")
        if self.quadrature_resolution < 16:
            raise ConfigInvalid("quadrature.resolution must be at least 16 per axis")
        if self.output_format not in ("csv", "json"):
            raise ConfigInvalid(f"output.format must be csv or json, got {self.output_format!r}")
        if self.threads < 1:
            raise ConfigInvalid("threads must be at least 1")
        return self

    def set(self, key, value):
        attr = self.KEYS.get(key)
        if attr is None:
            raise ConfigInvalid(f"unknown config key {key!r}")
        kind = type(getattr(RunConfig(), attr))
        try:
            setattr(self, attr, kind(value) if kind is not int else int(str(value), 10))
        except ValueError as exc:
            raise ConfigInvalid(f"bad value for {key}: {value!r}") from exc

    def items(self):
        for key, attr in self.KEYS.items():
            yield key, getattr(self, attr)

    def serialize(self):
        """Flat ``key=value`` text; floats use ``repr`` so parsing is lossless."""
        return "".join(f"{k}={v!r}\n" if isinstance(v, float) else f"{k}={v}\n" for k, v in self.items())

    @classmethod
    def parse(cls, text):
        cfg = cls()
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigInvalid(f"line {lineno}: expected key=value")
            key, value = line.split("=", 1)
            cfg.set(key.strip(), value.strip())
        return cfg.validate()

    def as_dict(self):
        return dict(self.items())

    def apply(self):
        """Push tolerances and worker count into the library; return the model."""
        geometry.set_lin_tol(self.tol_lin)
        set_workers(self.threads)
        model = geometry.get_model(self.model_name, self.model_n)
        return model.with_steps(self.fd_step, self.fd_bracket_step)

    def grid(self, model):
        return Grid.uniform(model.periods, self.quadrature_resolution)


# -- expression catalog --------------------------------------------------------

_MONOMIAL = re.compile(r"^(cos|sin)(\d*)pi([a-z]+)$")


def parse_expression(text, model):
    """Scalar field from the trig mini-catalog (see module docstring)."""
    source = text.replace(" ", "")
    if not source:
        raise ConfigInvalid("empty expression")
    terms = []
    for raw in re.split(r"(?<![eE*])(?=[+-])", source):
        if raw in ("", "+"):
            continue
        sign = -1.0 if raw.startswith("-") else 1.0
        body = raw.lstrip("+-")
        coef, factors = sign, []
        for factor in body.split("*"):
            m = _MONOMIAL.match(factor)
            if m:
                kind, mult, coord = m.groups()
                mult = int(mult) if mult else 2
                if mult % 2 or mult == 0 or coord not in model.coords:
                    raise ConfigInvalid(f"unknown monomial {factor!r}")
                factors.append((kind, model.coords.index(coord), mult // 2))
                continue
            try:
                coef *= float(factor)
            except ValueError:
                raise ConfigInvalid(f"cannot read {factor!r} in expression {text!r}") from None
        terms.append(TrigTerm(coef, tuple(factors)))
    return trig_field(terms, model.dim, label=text)


def parse_list(text, model):
    return [parse_expression(part, model) for part in text.split(",") if part.strip()]


def parse_floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigInvalid(f"expected comma-separated numbers, got {text!r}") from None


def scale_form(model, expr):
    if expr is None:
        return geometry.ContactForm.base(model)
    f = parse_expression(expr, model)
    return geometry.ContactForm.scaled(model, f, label=expr)


def points_from_args(args, cfg, model):
    if getattr(args, "points", None):
        rows = [parse_floats(p) for p in args.points.split(";") if p.strip()]
        pts = np.asarray(rows, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != model.dim:
            raise ConfigInvalid(f"points must have {model.dim} coordinates")
        return pts
    rng = np.random.default_rng(cfg.seed)
    return model.sample(rng, args.sample)


# -- artifacts -----------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.16e}"


def _to_json(v):
    if isinstance(v, dict):
        return {str(k): _to_json(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_to_json(x) for x in v]
    if isinstance(v, np.ndarray):
        return _to_json(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


def render_csv(cfg, header, rows):
    body = io.StringIO()
    for key, value in cfg.items():
        body.write(f"# config {key}={value!r}\n" if isinstance(value, float) else f"# config {key}={value}\n")
    writer = csv.writer(body, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    text = body.getvalue()
    digest = hashlib.sha256(text.encode()).hexdigest()
    return f"# sha256 {digest}\n" + text


def render_json(cfg, result):
    payload = {"config": _to_json(cfg.as_dict()), "result": _to_json(result)}
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    payload["sha256"] = hashlib.sha256(canonical.encode()).hexdigest()
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


@dataclass
class Artifact:
    header: list = None
    rows: list = None
    result: dict = None
    summary: str = ""

    def render(self, cfg, fmt):
        if fmt == "csv" and self.rows is not None:
            return render_csv(cfg, self.header, self.rows)
        if self.result is None:
            self.result = {"columns": self.header, "rows": self.rows}
        return render_json(cfg, self.result)


# -- subcommands ---------------------------------------------------------------


def cmd_mass(args, cfg, model):
    lam = scale_form(model, args.scale)
    V = entropy.mass(lam, cfg.grid(model))
    return Artifact(["mass"], [[V]], {"mass": V}, repr(V))


def cmd_entropy(args, cfg, model):
    grid = cfg.grid(model)
    lam1, lam0 = scale_form(model, args.form), scale_form(model, args.ref)
    S = entropy.relative_entropy(lam1, lam0, grid)
    return Artifact(["entropy"], [[S]], {"entropy": S}, repr(S))


def cmd_reeb(args, cfg, model):
    lam = scale_form(model, args.scale)
    x = points_from_args(args, cfg, model)
    R, res = geometry.reeb_field(lam, x, return_residual=True)
    header = list(model.coords) + [f"R_{c}" for c in model.coords] + ["residual"]
    rows = [list(x[i]) + list(R[i]) + [res[i]] for i in range(len(x))]
    return Artifact(header, rows, summary=f"max residual {float(np.max(res)):.3e} over {len(x)} points")


def cmd_flow(args, cfg, model):
    lam = scale_form(model, args.scale)
    H = parse_expression(args.ham, model)
    x = points_from_args(args, cfg, model)
    fm = flows.FlowMap(H, lam, args.t, cfg.integ_dt)
    end, trace = flows.flow_point(fm, x, keep_trace=False)
    g = trace.g_values[-1]
    header = list(model.coords) + [f"{c}_end" for c in model.coords] + ["g_integrated"]
    extra = None
    if args.dual:
        pf = flows.conformal_factor_pullback(lam, fm.as_diffeomorphism(), x, conf_tol=cfg.tol_conf)
        extra = pf.log_factor
        header += ["g_pullback", "defect"]
    rows = []
    for i in range(len(x)):
        row = list(x[i]) + list(end[i]) + [g[i]]
        if extra is not None:
            row += [extra[i], pf.defect[i]]
        rows.append(row)
    summary = f"flowed {len(x)} points to t={args.t}"
    if extra is not None:
        summary += f"; max |g_pullback - g_integrated| = {float(np.max(np.abs(extra - g))):.3e}"
    return Artifact(header, rows, summary=summary)


def cmd_cocycle(args, cfg, model):
    lam = scale_form(model, args.scale)
    psi = flows.FlowMap(parse_expression(args.ham1, model), lam, args.t, cfg.integ_dt).as_diffeomorphism()
    phi = flows.FlowMap(parse_expression(args.ham2, model), lam, args.t, cfg.integ_dt).as_diffeomorphism()
    x = points_from_args(args, cfg, model)
    rep = flows.cocycle_check(lam, psi, phi, x, n_max=args.nmax, conf_tol=cfg.tol_conf)
    result = {
        "defect": rep.defect,
        "iteration_defects": {str(k): v for k, v in rep.iteration_defects.items()},
        "growth": {str(k): v for k, v in rep.growth.items()},
        "g_phi_sup": rep.g_phi_sup, "growth_ok": rep.growth_ok,
    }
    return Artifact(result=result, summary=f"cocycle defect {rep.defect:.3e}")


def _maxent_problem(args, cfg, model):
    grid = cfg.grid(model)
    lam0 = entropy.normalize(scale_form(model, args.scale), grid)
    sys_ = ObservableSystem(parse_list(args.obs, model))
    return maxent.MaxEntProblem(lam0, sys_, grid=grid, gram_tol=cfg.tol_gram)


def cmd_maxent(args, cfg, model):
    prob = _maxent_problem(args, cfg, model).with_targets(parse_floats(args.targets))
    sol = maxent.solve(prob, newton_tol=cfg.tol_newton)
    N = prob.N
    header = [f"p_{i + 1}" for i in range(N)] + [f"q_{i + 1}" for i in range(N)] + ["w", "entropy"]
    row = list(sol.p) + list(sol.q) + [sol.w, sol.entropy]
    result = {"p": sol.p, "q": sol.q, "w": sol.w, "entropy": sol.entropy,
              "covariance": sol.covariance, "iterations": sol.iterations}
    return Artifact(header, [row], result, f"p = {np.array2string(sol.p, precision=12)}")


def cmd_sweep(args, cfg, model):
    prob = _maxent_problem(args, cfg, model)
    with open(args.path_file, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    try:
        path = [[float(v) for v in r] for r in rows]
    except ValueError:
        path = [[float(v) for v in r] for r in rows[1:]]  # header row
    points, report = maxent.sweep(prob, path)
    N = prob.N
    header = [f"p_{i + 1}" for i in range(N)] + [f"q_{i + 1}" for i in range(N)] + ["z", "residual"]
    residuals = [0.0] + list(report.residuals)
    out = [list(pt.p) + list(pt.q) + [pt.z, r] for pt, r in zip(points, residuals)]
    return Artifact(header, out, summary=f"max Legendrian residual {report.max_residual:.3e}; "
                                         f"non-monotone segments {report.nonmonotone_segments}")


def cmd_hessian(args, cfg, model):
    from .fields import random_trig_field, vector_from_scalars

    rng = np.random.default_rng(cfg.seed)
    grid = Grid.uniform(model.periods, args.resolution or cfg.quadrature_resolution)
    lam0 = entropy.normalize(geometry.ContactForm.base(model), grid)
    f = random_trig_field(rng, model.dim, scale=0.2, constant=1.0)
    lam = geometry.ContactForm.scaled(model, f)
    h1 = random_trig_field(rng, model.dim, scale=0.5)
    h2 = random_trig_field(rng, model.dim, scale=0.5)
    if args.mode == "small":
        value = entropy.hessian_small(lam0, lam, h1, h2, grid)
        fd = entropy.hessian_small_fd(lam0, lam, h1, h2, grid)
        result = {"mode": "small", "value": value, "fd_reference": fd,
                  "abs_err": abs(value - fd), "rel_err": abs(value - fd) / max(abs(fd), 1e-300)}
    else:
        comps = lambda: [random_trig_field(rng, model.dim, scale=0.3) for _ in range(model.dim)]
        Y1 = entropy.xi_projection(lam, vector_from_scalars(comps()))
        Y2 = entropy.xi_projection(lam, vector_from_scalars(comps()))
        rep = entropy.hessian_big(lam0, lam, entropy.Variation(h1, Y1), entropy.Variation(h2, Y2), grid)
        result = dict(rep.as_dict(), mode="big", terms=list(rep.terms))
    return Artifact(result=result, summary=f"{args.mode} Hessian {result['value']!r} "
                                           f"(finite differences {result['fd_reference']!r})")


def _pair(args, cfg, model):
    lam = scale_form(model, args.scale)
    if args.ham == "reeb":
        return pressure.ContactPair.reeb(lam, 1.0, cfg.integ_dt)
    if args.ham == "identity":
        return pressure.ContactPair.identity(lam)
    return pressure.ContactPair.from_flow(lam, parse_expression(args.ham, model), 1.0, cfg.integ_dt)


def cmd_pressure(args, cfg, model):
    pair = _pair(args, cfg, model)
    cand = pressure.default_candidates(model, args.candidates)
    est = pressure.pressure_estimate(pair, args.beta, args.eps, [int(v) for v in parse_floats(args.N)], cand)
    rows = [[N, Z, v] for N, Z, v in est.per_N]
    return Artifact(["N", "Z_N", "log_Z_N_over_N"], rows, est.as_dict(),
                    f"finite-N estimate {est.extrapolated!r} (monotone: {est.monotone_flag})")


def cmd_gibbs(args, cfg, model):
    pair = _pair(args, cfg, model)
    grid = Grid.uniform(model.periods, args.resolution or cfg.quadrature_resolution)
    V = entropy.mass(pair.lam, grid)
    mu = lambda x: pair.lam.density(x) / V
    centers = points_from_args(args, cfg, model)
    rep = pressure.gibbs_diagnostic(pair, mu, args.beta, args.P, args.eps,
                                    [int(v) for v in parse_floats(args.N)], centers, grid)
    cfg.output_format = "json"
    return Artifact(result=rep.as_dict(), summary=f"ratios in [{rep.ratio_min:.6g}, {rep.ratio_max:.6g}]")


def selftest_battery(cfg, model):
    """Quick checks with exactly known answers; returns ``{name: (value, passed)}``."""
    grid = cfg.grid(model)
    lam = geometry.ContactForm.base(model)
    out = {}
    V = entropy.mass(lam, grid)
    out["mass_base"] = (V, abs(V - 2 * math.pi) < 1e-8)
    S = entropy.relative_entropy(lam, lam, grid)
    out["entropy_self"] = (S, S == 0.0)
    R = geometry.reeb_field(lam, np.zeros(model.dim))
    e0 = np.zeros(model.dim)
    e0[0] = 1.0
    out["reeb_origin"] = (float(np.max(np.abs(R - e0))), bool(np.max(np.abs(R - e0)) < 1e-12))
    x = model.sample(np.random.default_rng(cfg.seed), 16)
    X1 = geometry.contact_hamiltonian_field(lam, ScalarField.constant(1.0), x)
    err = float(np.max(np.abs(X1 + geometry.reeb_field(lam, x))))
    out["hamiltonian_one_is_minus_reeb"] = (err, err < 1e-12)
    lam0 = entropy.normalize(lam, grid)
    F = parse_expression("cos2pix", model)
    prob = maxent.MaxEntProblem(lam0, ObservableSystem([F]), grid=grid)
    lp = maxent.log_partition(prob, [0.0])
    out["log_partition_zero"] = (lp.w, abs(lp.w) < 1e-14)
    sol = maxent.solve(prob.with_targets(lp.q))
    out["solve_uniform"] = (float(np.max(np.abs(sol.p))), bool(np.max(np.abs(sol.p)) < 1e-12 and abs(sol.entropy) < 1e-14))
    _, rep = maxent.sweep(prob, [[0.5]] * 4)
    out["sweep_constant_path"] = (rep.max_residual, rep.max_residual == 0.0)
    vol = maxent.equilibrium_with_volume(maxent.MaxEntProblem(lam0, None, grid=grid), [])
    out["volume_no_observables"] = (vol.w, abs(vol.w) < 1e-14)
    ident = pressure.ContactPair.identity(lam)
    cand = pressure.default_candidates(model, 4)
    E = pressure.separated_set(ident, 1, 2.0, cand)
    out["separated_singleton"] = (len(E), len(E) == 1)
    E = pressure.separated_set(ident, 2, 0.3, cand)
    Z0 = pressure.partition_function(ident, 2, 0.3, 0.0, cand)
    out["partition_counts_at_beta_zero"] = (Z0, Z0 == float(len(E)))
    S1 = pressure.birkhoff_sum(ident, 1, x)
    out["birkhoff_one_step"] = (float(np.max(np.abs(S1))), bool(np.all(S1 == ident.g(x))))
    return out


def cmd_selftest(args, cfg, model):
    results = selftest_battery(cfg, model)
    rows = [[name, value, passed] for name, (value, passed) in results.items()]
    failed = [r[0] for r in rows if not r[2]]
    result = {name: {"value": value, "passed": passed} for name, (value, passed) in results.items()}
    art = Artifact(result=result, summary=f"{len(rows) - len(failed)}/{len(rows)} checks passed")
    art.failed = failed
    cfg.output_format = "json"
    return art


COMMANDS = {
    "mass": cmd_mass, "entropy": cmd_entropy, "reeb": cmd_reeb, "flow": cmd_flow,
    "cocycle-check": cmd_cocycle, "maxent": cmd_maxent, "legendrian-sweep": cmd_sweep,
    "hessian-check": cmd_hessian, "pressure": cmd_pressure, "gibbs-check": cmd_gibbs,
    "selftest": cmd_selftest,
}


# -- argument parsing ----------------------------------------------------------


def _common(p):
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--model", help="model name (config model.name)")
    p.add_argument("--resolution-per-axis", dest="quad_resolution", type=int,
                   help="quadrature nodes per axis (config quadrature.resolution)")
    p.add_argument("--seed", type=int)
    p.add_argument("--emit", help="artifact path (config output.path)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--scale", help="scale field f of lam = f lam0 (default 1)")


def _points(p, default=20):
    p.add_argument("--points", help="explicit points 'x,y,z;x,y,z'")
    p.add_argument("--sample", type=int, default=default, help="number of random points (seeded)")


def build_parser():
    parser = argparse.ArgumentParser(prog="contact-thermo", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("mass", help="total volume of lam")
    _common(p)
    p = sub.add_parser("entropy", help="relative entropy S(lam | lam_ref)")
    _common(p)
    p.add_argument("--form", required=True, help="scale field of lam")
    p.add_argument("--ref", help="scale field of the reference form (default 1)")
    p = sub.add_parser("reeb", help="Reeb field and defining-equation residuals")
    _common(p)
    _points(p)
    p = sub.add_parser("flow", help="contact Hamiltonian flow and potential")
    _common(p)
    _points(p)
    p.add_argument("--ham", required=True)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--dual", action="store_true", help="also compute g from the pulled-back form")
    p = sub.add_parser("cocycle-check", help="cocycle identities for two flow maps")
    _common(p)
    _points(p, 10)
    p.add_argument("--ham1", default="cos2pix")
    p.add_argument("--ham2", default="sin2piy")
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--nmax", type=int, default=2)
    p = sub.add_parser("maxent", help="maximum-entropy equilibrium for moment targets")
    _common(p)
    p.add_argument("--obs", default="cos2pix")
    p.add_argument("--targets", required=True)
    p = sub.add_parser("legendrian-sweep", help="equilibria along a multiplier path")
    _common(p)
    p.add_argument("--obs", default="cos2pix")
    p.add_argument("--path-file", required=True, help="CSV of multiplier vectors, one per row")
    p = sub.add_parser("hessian-check", help="Hessian formula vs finite differences")
    _common(p)
    p.add_argument("--mode", choices=("small", "big"), default="small")
    p.add_argument("--resolution", type=int, help="grid for this check (overrides the config)")
    for name, helptext in (("pressure", "finite-N pressure estimate"), ("gibbs-check", "empirical Gibbs constants")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--ham", default="reeb", help="Hamiltonian expression, 'reeb' or 'identity'")
        p.add_argument("--beta", type=float, default=0.0)
        p.add_argument("--eps", type=float, default=0.1)
        p.add_argument("--N", default="1,2,4,8")
        if name == "pressure":
            p.add_argument("--candidates", type=int, default=pressure.CANDIDATE_RESOLUTION,
                           help="candidate grid points per axis")
        else:
            _points(p, 4)
            p.add_argument("--P", type=float, default=0.0)
            p.add_argument("--resolution", type=int, help="grid for ball measures")
    p = sub.add_parser("selftest", help="battery of checks with exactly known answers")
    _common(p)
    return parser


def resolve_config(args):
    cfg = RunConfig()
    if args.config:
        with open(args.config) as fh:
            cfg = RunConfig.parse(fh.read())
    for item in args.set:
        if "=" not in item:
            raise ConfigInvalid(f"--set expects key=value, got {item!r}")
        cfg.set(*[s.strip() for s in item.split("=", 1)])
    for attr, value in (("model_name", args.model), ("quadrature_resolution", args.quad_resolution),
                        ("seed", args.seed), ("output_path", args.emit), ("output_format", args.format)):
        if value is not None:
            setattr(cfg, attr, value)
    if args.emit and args.format is None and args.emit.endswith(".json"):
        cfg.output_format = "json"
    return cfg.validate()


def run(argv=None, stdout=None):
    """Execute one subcommand; returns the exit status."""
    stdout = stdout or sys.stdout
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv and not argv[0].startswith("-") and argv[0] not in SUBCOMMANDS:
            raise UnknownSubcommand(f"unknown subcommand {argv[0]!r}; choose from {', '.join(SUBCOMMANDS)}")
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args)
        if os.environ.get("CONTACT_THERMO_THREADS"):
            cfg.threads = max(1, int(os.environ["CONTACT_THERMO_THREADS"]))
        model = cfg.apply()
        art = COMMANDS[args.command](args, cfg, model)
        text = art.render(cfg, cfg.output_format)
        if cfg.output_path:
            with open(cfg.output_path, "w", newline="") as fh:
                fh.write(text)
        print(art.summary or text, file=stdout)
        if getattr(art, "failed", None):
            print(f"failed checks: {', '.join(art.failed)}", file=sys.stderr)
            return 1
        return 0
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except ContactThermoError as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
