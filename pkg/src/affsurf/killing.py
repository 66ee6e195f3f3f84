"""Affine Killing fields: residual verification, flows, completeness probe.

A vector field X is affine Killing for a connection when

    [X, del_Y Z] - del_Y [X, Z] - del_{[X,Y]} Z = 0

for all fields Y, Z.  With Y, Z running over the coordinate fields this
reduces, per component k and index pair (i, j), to

    X^m d_m G_ij^k - G_ij^m d_m X^k + d_i d_j X^k
        + d_j X^m G_im^k + d_i X^m G_mj^k = 0,

which is evaluated with exact derivatives of both X and the symbols.

The completeness probe integrates every basis field plus a fixed set of
seeded random unit combinations, both directions, from a few interior
points, and declares the model incomplete when any flow escapes (blowup,
step collapse at a singular right-hand side, or crossing the half-plane
edge).  Reaching the horizon, or growing beyond the numeric range without
a finite-time signature, counts as evidence of completeness; the verdict
is numerical evidence, not proof, and is always reported next to the
expected flag.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .catalog import ModelRecord, sample_grid
from .connection import ChristoffelSpec
from .expr import Point, VectorFieldExpr, compile_scalar, diff
from .integrate import (ESCAPE_STATUSES, Status, Trajectory, integrate)

PROBE_HORIZON = 20.0
N_RANDOM_COMBOS = 8
COMBO_SEED = 20240815

RESIDUAL_TOL = 1e-8


def killing_residual(spec: ChristoffelSpec, X: VectorFieldExpr, p: Point) -> float:
    """Max component of the Killing defect over coordinate-field pairs."""
    comps = [X.c1, X.c2]
    vals = [ex.evaluate(c, p) for c in comps]
    d = [[ex.evaluate(diff(c, ax), p) for ax in (1, 2)] for c in comps]  # d[k][m] = d_{m+1} X^{k+1}
    dd = [[[ex.evaluate(diff(diff(c, i + 1), j + 1), p) for j in range(2)] for i in range(2)]
          for c in comps]  # dd[k][i][j]
    g = spec.gamma_matrices(p)
    dg1, dg2 = spec.dchristoffel_at(p)
    dgm = _dgamma_matrices(dg1, dg2)  # dgm[m][i][j][k]
    worst = 0.0
    for i in range(2):
        for j in range(2):
            for k in range(2):
                val = dd[k][i][j]
                for m in range(2):
                    val += vals[m] * dgm[m][i][j][k]
                    val -= g[i][j][m] * d[k][m]
                    val += d[m][j] * g[i][m][k]
                    val += d[m][i] * g[m][j][k]
                worst = max(worst, abs(val))
    return worst


def _dgamma_matrices(dg1, dg2):
    def mat(six):
        a, b, c, d, e, f = six
        return ((( a, b), (c, d)), ((c, d), (e, f)))
    return (mat(dg1), mat(dg2))


def max_killing_residual(spec: ChristoffelSpec, X: VectorFieldExpr, grid) -> float:
    """Like killing_residual but with derivative trees compiled once."""
    comps = [X.c1, X.c2]
    fv = [compile_scalar(c) for c in comps]
    fd = [[compile_scalar(diff(c, ax)) for ax in (1, 2)] for c in comps]
    fdd = [[[compile_scalar(diff(diff(c, i + 1), j + 1)) for j in range(2)]
            for i in range(2)] for c in comps]
    worst = 0.0
    for p in grid:
        u, v = p
        vals = [f(u, v) for f in fv]
        d = [[fd[k][m](u, v) for m in range(2)] for k in range(2)]
        dd = [[[fdd[k][i][j](u, v) for j in range(2)] for i in range(2)] for k in range(2)]
        g = spec.gamma_matrices(p)
        dg1, dg2 = spec.dchristoffel_at(p)
        dgm = _dgamma_matrices(dg1, dg2)
        for i in range(2):
            for j in range(2):
                for k in range(2):
                    val = dd[k][i][j]
                    for m in range(2):
                        val += vals[m] * dgm[m][i][j][k]
                        val -= g[i][j][m] * d[k][m]
                        val += d[m][j] * g[i][m][k]
                        val += d[m][i] * g[m][j][k]
                    worst = max(worst, abs(val))
    return worst


def flow_integrate(X: VectorFieldExpr, p0: Point, t_end: float,
                   half_plane: bool = False, **opts) -> Trajectory:
    """Integrate the flow x' = X(x) from p0 to signed time t_end."""
    f1, f2 = compile_scalar(X.c1), compile_scalar(X.c2)

    def rhs(y):
        u, v = float(y[0]), float(y[1])
        return f1(u, v), f2(u, v)

    domain_fn = (lambda y: y[0]) if half_plane else None
    return integrate(rhs, p0, t_end, domain_fn=domain_fn, **opts)


def _combo_rhs(compiled_fields, coeffs):
    active = [(c, f1, f2) for c, (f1, f2) in zip(coeffs, compiled_fields) if c != 0.0]

    def rhs(y):
        u, v = float(y[0]), float(y[1])
        s1 = s2 = 0.0
        for c, f1, f2 in active:
            s1 += c * f1(u, v)
            s2 += c * f2(u, v)
        return s1, s2
    return rhs


@dataclass(frozen=True)
class FlowWitness:
    field_label: str
    coeffs: tuple[float, ...]
    init: tuple[float, float]
    direction: str
    status: Status

    def to_json(self):
        return {"field": self.field_label, "coeffs": list(self.coeffs),
                "init": list(self.init), "direction": self.direction,
                **self.status.to_json()}


@dataclass
class ProbeReport:
    model: str
    kind: str  # "killing" | "geodesic"
    complete: bool
    horizon: float
    expected: bool | None
    witnesses: list[FlowWitness] = field(default_factory=list)
    unbounded_runs: int = 0

    @property
    def verdict(self) -> str:
        if self.expected is None:
            return "not-classified"
        return "matches-theorem" if self.complete == self.expected else "contradicts-theorem"

    def to_json(self):
        return {"model": self.model, "probe": self.kind, "complete": self.complete,
                "horizon": self.horizon,
                "expected": "not-classified" if self.expected is None else self.expected,
                "verdict": self.verdict,
                "witnesses": [w.to_json() for w in self.witnesses],
                "unbounded_runs": self.unbounded_runs}


def default_flow_inits(record: ModelRecord) -> tuple[Point, ...]:
    """Two interior points per domain type.  The plane set includes a point
    with x2 = 0: some incomplete flows (the punctured-chart family) die only
    along that measure-zero ray and would be missed from generic points."""
    if record.mtype == "B":
        return ((1.0, 0.5), (2.0, -1.0))
    return ((0.3, -0.7), (0.5, 0.0))


def killing_completeness_probe(record: ModelRecord,
                               T: float = PROBE_HORIZON,
                               init_set=None,
                               n_combos: int = N_RANDOM_COMBOS,
                               seed: int = COMBO_SEED,
                               confirm_T: float | None = None) -> ProbeReport:
    """Flow every Killing basis field and seeded random unit combinations
    from each initial point, both directions.  Incomplete as soon as one
    flow escapes before the horizon; complete verdicts are re-confirmed at
    three times the horizon (pass confirm_T=0 to skip)."""
    if confirm_T is None:
        confirm_T = 3.0 * T
    report = _probe_once(record, T, init_set, n_combos, seed)
    if report.complete and confirm_T > T:
        report = _probe_once(record, confirm_T, init_set, n_combos, seed)
    return report


def _probe_once(record, T, init_set, n_combos, seed) -> ProbeReport:
    inits = tuple(init_set) if init_set is not None else default_flow_inits(record)
    half = record.mtype == "B"
    basis = record.killing_basis
    compiled = [(compile_scalar(X.c1), compile_scalar(X.c2)) for X in basis]
    dim = len(basis)

    jobs = []
    for idx in range(dim):
        coeffs = tuple(1.0 if i == idx else 0.0 for i in range(dim))
        jobs.append((f"basis[{idx}]", coeffs))
    rng = np.random.default_rng(seed)
    for c in range(n_combos):
        v = rng.normal(size=dim)
        v /= np.linalg.norm(v)
        jobs.append((f"combo[{c}]", tuple(float(x) for x in v)))

    witnesses: list[FlowWitness] = []
    unbounded = 0
    domain_fn = (lambda y: y[0]) if half else None
    for label, coeffs in jobs:
        rhs = _combo_rhs(compiled, coeffs)
        for p0 in inits:
            for t_end, dirname in ((T, "forward"), (-T, "backward")):
                tr = integrate(rhs, p0, t_end, domain_fn=domain_fn)
                if isinstance(tr.status, ESCAPE_STATUSES):
                    witnesses.append(FlowWitness(label, coeffs, p0, dirname, tr.status))
                elif tr.status.__class__.__name__ == "Unbounded":
                    unbounded += 1
    return ProbeReport(record.ref.label(), "killing",
                       complete=not witnesses, horizon=T,
                       expected=record.expected.killing_complete,
                       witnesses=witnesses, unbounded_runs=unbounded)


def verify_killing_basis(record: ModelRecord, grid=None, tol: float = RESIDUAL_TOL):
    """Max Killing residual per basis field over the standard grid."""
    pts = grid if grid is not None else sample_grid(record)
    res = tuple(max_killing_residual(record.spec, X, pts) for X in record.killing_basis)
    return res, all(r <= tol for r in res)
