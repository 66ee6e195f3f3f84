"""Strong projective deformation, flattening, immersions, map verification.

Two connections are strongly projectively equivalent when they differ by
del~_X Y = del_X Y + dphi(X) Y + dphi(Y) X for a scalar phi.  For constant
Christoffel symbols and linear phi = a1 x1 + a2 x2 the deformation stays in
the constant class:

    G~_ij^k = G_ij^k +- (delta_i^k a_j + delta_j^k a_i).

Every constant-symbol model flattens: a linear phi exists whose minus
deformation has vanishing Ricci (hence vanishing curvature), and one of
e^{+phi}, e^{-phi} solves the quasi-Einstein equation of the original
model.  The construction works in a rescaled chart where G_11^2 = 1 and
reduces to one quadratic substitution plus a real root of a monic cubic;
the root of smallest magnitude is chosen (ties toward the negative) and
the rescaling is inverted before phi is reported.

The same phi factors the solution basis as e^{phi} span{1, phi1, phi2};
the map (phi1, phi2) immerses the plane and straightens unparameterized
geodesics, which the line-image test checks numerically.  Affine maps
between catalog models are verified by pulling the target connection back
through the map and comparing against the source symbols on a grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .catalog import AffineMapEntry, ModelRecord, instantiate_ref, sample_grid
from .connection import ChristoffelSpec, curvature_at, ricci_at
from .expr import PlaneMap, Point, ScalarExpr, diff
from .qe import max_residual, xi_matrix

FLAT_TOL = 1e-10
QE_TOL = 1e-8
MAP_TOL = 1e-8


@dataclass(frozen=True)
class LinearForm:
    """phi(x) = a1*x1 + a2*x2."""

    a1: float
    a2: float

    def expr(self) -> ScalarExpr:
        return ex.add(ex.mul(ex.const(self.a1), ex.x1), ex.mul(ex.const(self.a2), ex.x2))

    def __call__(self, p: Point) -> float:
        return self.a1 * p[0] + self.a2 * p[1]


def deform(spec: ChristoffelSpec, phi: LinearForm, sign: int) -> ChristoffelSpec:
    """Strong projective deformation of a constant-symbol connection by a
    linear form; sign +1 adds the rank-one correction, -1 removes it.
    deform(deform(s, phi, +1), phi, -1) is s exactly."""
    if spec.kind != "constant":
        raise ValueError("deform requires a constant-symbol connection")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    a1, a2 = phi.a1, phi.a2
    a, b, c, d, e, f = spec.coeffs
    s = float(sign)
    return ChristoffelSpec((a + s * 2 * a1, b, c + s * a2, d + s * a1, e, f + s * 2 * a2),
                           "constant")


# ---------------------------------------------------------------------------
# flattening


def _swap_coeffs(coeffs):
    a, b, c, d, e, f = coeffs
    return (f, e, d, c, b, a)


def _rescale_x2(coeffs, lam: float):
    """Symbols in the chart (x1, lam*x2)."""
    a, b, c, d, e, f = coeffs
    return (a, lam * b, c / lam, d, e / (lam * lam), f / lam)


def _branch1(coeffs):
    """Flattening coefficients for G_11^2 = 1: solve the 11-component for
    a2, then pick a real root a1 of the monic cubic 12-component."""
    a, b, c, d, e, f = coeffs
    # rho~_12(a1) = -e + (a1 - d) * (a1^2 - a*a1 + q0),  q0 = a*d - 2c - d^2 + f
    q0 = a * d - 2 * c - d * d + f
    cubic = np.array([1.0, -(d + a), q0 + a * d, -d * q0 - e])
    roots = np.roots(cubic)
    real = sorted((r.real for r in roots if abs(r.imag) <= 1e-9 * max(1.0, abs(r))),
                  key=lambda v: (abs(v), v))
    if not real:  # a monic real cubic always has a real root
        raise RuntimeError("no real root found for the flattening cubic")
    a1 = float(real[0])
    a2 = a1 * a1 - a1 * a - c + a * d - d * d + f
    return a1, a2


def flatten(model: ModelRecord | ChristoffelSpec):
    """A linear form phi and the flat spec deform(spec, phi, -1).

    Postconditions (checked by the callers and the report): the deformed
    Ricci and curvature vanish to 1e-10 and one of e^{+phi}, e^{-phi} has
    quasi-Einstein residual at most 1e-8 for the original connection."""
    spec = model.spec if isinstance(model, ModelRecord) else model
    if spec.kind != "constant":
        raise ValueError("flattening is defined for constant-symbol connections")
    a, b, c, d, e, f = spec.coeffs
    if b != 0.0:
        lam = 1.0 / b
        a1, a2r = _branch1(_rescale_x2(spec.coeffs, lam))
        phi = LinearForm(a1, a2r * lam)
    elif e != 0.0:
        sw = _swap_coeffs(spec.coeffs)
        lam = 1.0 / sw[1]
        a1s, a2s = _branch1(_rescale_x2(sw, lam))
        phi = LinearForm(a2s * lam, a1s)
    else:
        phi = LinearForm(d, c)
    return phi, deform(spec, phi, -1)


@dataclass
class FlattenReport:
    model: str
    phi: LinearForm
    rho_tilde_max: float
    curvature_tilde_max: float
    qe_sign: int  # sign s with residual(e^{s*phi}) minimal
    qe_residual: float

    @property
    def passed(self) -> bool:
        return (self.rho_tilde_max <= FLAT_TOL and self.curvature_tilde_max <= FLAT_TOL
                and self.qe_residual <= QE_TOL)

    def to_json(self):
        return {"model": self.model, "phi": [self.phi.a1, self.phi.a2],
                "rho_tilde_max": self.rho_tilde_max,
                "curvature_tilde_max": self.curvature_tilde_max,
                "qe_sign": "+" if self.qe_sign > 0 else "-",
                "qe_residual": self.qe_residual, "pass": self.passed}


def flatten_report(record: ModelRecord, grid=None) -> FlattenReport:
    phi, flat = flatten(record)
    pts = grid if grid is not None else sample_grid(record)
    rho_max = max(float(np.max(np.abs(ricci_at(flat, p)))) for p in pts)
    curv_max = max(float(np.max(np.abs(curvature_at(flat, p)))) for p in pts)
    res = {}
    for s in (1, -1):
        phi_expr = ex.mul(ex.const(s), phi.expr()) if s < 0 else phi.expr()
        res[s] = max_residual(record.spec, ex.exp(phi_expr), pts)
    sign = 1 if res[1] <= res[-1] else -1
    return FlattenReport(record.ref.label(), phi, rho_max, curv_max, sign, res[sign])


# ---------------------------------------------------------------------------
# the straightening immersion


def immersion(record: ModelRecord) -> PlaneMap:
    """Factor the solution basis as e^{phi} span{1, phi1, phi2} with phi
    from the flattening, normalized so phi1, phi2 vanish at the base point
    with unit Jacobian there; returns (phi1, phi2).  Rejects models whose
    solution space is trivial."""
    if not record.q_basis:
        raise ValueError(f"{record.ref.label()} has a trivial solution space")
    rep = flatten_report(record)
    phi_expr = rep.phi.expr() if rep.qe_sign > 0 else ex.mul(ex.const(-1), rep.phi.expr())
    inv = ex.exp(ex.mul(ex.const(-1), phi_expr))
    psis = [ex.mul(q, inv) for q in record.q_basis]
    m, det = xi_matrix(psis, record.base_point)
    if abs(det) < 1e-12:
        raise RuntimeError(f"{record.ref.label()}: basis degenerate at the base point")
    coeff = np.linalg.solve(m.T, np.eye(3))  # columns: combos hitting e1, e2, e3
    phi1 = ex.add(*(ex.mul(ex.const(float(coeff[i, 1])), psis[i]) for i in range(3)))
    phi2 = ex.add(*(ex.mul(ex.const(float(coeff[i, 2])), psis[i]) for i in range(3)))
    return PlaneMap(phi1, phi2, record.spec.domain)


def jacobian_nonsingular_on(pm: PlaneMap, grid, tol: float = 1e-9) -> bool:
    for p in grid:
        (j11, j12), (j21, j22) = pm.jacobian(p)
        det = j11 * j22 - j12 * j21
        scale = max(1e-30, abs(j11) + abs(j12) + abs(j21) + abs(j22))
        if abs(det) <= tol * scale * scale:
            return False
    return True


def line_image_residual(pm: PlaneMap, points) -> float:
    """Deviation of the image of a curve from a straight line: total least
    squares fit, max perpendicular distance normalized by the spread along
    the fitted line.  A geodesic of a straightened model gives ~0; a circle
    gives order one."""
    img = np.array([pm((float(p[0]), float(p[1]))) for p in points])
    if len(img) < 3:
        raise ValueError("need at least 3 samples")
    centered = img - img.mean(axis=0)
    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    along = centered @ vt[0]
    across = centered @ vt[1]
    spread = float(along.max() - along.min())
    if spread <= 1e-14:
        raise ValueError("degenerate image: all samples coincide")
    return float(np.max(np.abs(across))) / spread


# ---------------------------------------------------------------------------
# pullback verification of catalog maps


def pullback_connection(pm: PlaneMap, target: ChristoffelSpec, p: Point):
    """Pull the target symbols back through the map at a point:

        G^pull_ij^k = (J^-1)^k_c [ d_i d_j Phi^c + G~_ab^c J^a_i J^b_j ]

    with exact derivatives of the map components."""
    comps = [pm.f1, pm.f2]
    J = np.zeros((2, 2))
    H = np.zeros((2, 2, 2))  # H[c][i][j] = d_i d_j Phi^c
    for cidx, fc in enumerate(comps):
        d1, d2 = diff(fc, 1), diff(fc, 2)
        J[cidx, 0] = ex.evaluate(d1, p)
        J[cidx, 1] = ex.evaluate(d2, p)
        H[cidx, 0, 0] = ex.evaluate(diff(d1, 1), p)
        H[cidx, 0, 1] = ex.evaluate(diff(d1, 2), p)
        H[cidx, 1, 0] = H[cidx, 0, 1]
        H[cidx, 1, 1] = ex.evaluate(diff(d2, 2), p)
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    if abs(det) < 1e-14:
        raise ValueError(f"map is not immersive at {p}")
    Jinv = np.array([[J[1, 1], -J[0, 1]], [-J[1, 0], J[0, 0]]]) / det
    q = pm(p)
    gt = np.array(target.gamma_matrices(q))  # gt[a][b][c]
    out = np.zeros((2, 2, 2))  # out[i][j][k]
    for i in range(2):
        for j in range(2):
            vec = H[:, i, j] + np.einsum("abc,a,b->c", np.transpose(gt, (0, 1, 2)),
                                         J[:, i], J[:, j])
            for k in range(2):
                out[i, j, k] = Jinv[k, 0] * vec[0] + Jinv[k, 1] * vec[1]
    return (out[0, 0, 0], out[0, 0, 1], out[0, 1, 0], out[0, 1, 1], out[1, 1, 0], out[1, 1, 1])


@dataclass
class MapReport:
    model: str
    name: str
    target: str
    max_deviation: float
    tol: float = MAP_TOL

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tol

    def to_json(self):
        return {"model": self.model, "map": self.name, "target": self.target,
                "max_deviation": self.max_deviation, "pass": self.passed}


def verify_map_entry(record: ModelRecord, entry: AffineMapEntry, grid=None) -> MapReport:
    target = instantiate_ref(entry.target)
    pts = grid if grid is not None else sample_grid(record)
    worst = 0.0
    for p in pts:
        pulled = pullback_connection(entry.plane_map, target.spec, p)
        source = record.spec.christoffel_at(p)
        worst = max(worst, max(abs(u - v) for u, v in zip(pulled, source)))
    return MapReport(record.ref.label(), entry.name, entry.target.label(), worst)


def verify_affine_maps(record: ModelRecord, grid=None) -> list[MapReport]:
    return [verify_map_entry(record, entry, grid) for entry in record.maps]
