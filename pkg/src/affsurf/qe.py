"""Quasi-Einstein machinery.

For a connection spec and a scalar phi the affine Hessian is

    (H phi)_ij = d_i d_j phi - G_ij^k d_k phi,

and phi solves the quasi-Einstein equation when H phi + phi * rho_s = 0,
rho_s being the symmetrized Ricci tensor.  The catalog stores a three-element
solution basis for every model whose solution space is nontrivial; this
module verifies those bases on sample grids and computes the point-evaluation
matrix whose nonzero determinant certifies that the basis is independent and
the solution space is fully three-dimensional.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .catalog import ModelRecord, sample_grid
from .connection import ChristoffelSpec, Tensor2, ricci_sym_at
from .expr import Point, ScalarExpr, compile_scalar, diff

DEFAULT_TOL = 1e-8


def _second_derivs(phi: ScalarExpr):
    d1, d2 = diff(phi, 1), diff(phi, 2)
    return d1, d2, diff(d1, 1), diff(d1, 2), diff(d2, 2)


def hessian(spec: ChristoffelSpec, phi: ScalarExpr, p: Point) -> Tensor2:
    """(H phi)_ij = d_i d_j phi - G_ij^k d_k phi, exact derivatives."""
    d1, d2, d11, d12, d22 = _second_derivs(phi)
    g1 = ex.evaluate(d1, p)
    g2 = ex.evaluate(d2, p)
    a, b, c, d, e, f = spec.christoffel_at(p)
    h11 = ex.evaluate(d11, p) - (a * g1 + b * g2)
    h12 = ex.evaluate(d12, p) - (c * g1 + d * g2)
    h22 = ex.evaluate(d22, p) - (e * g1 + f * g2)
    return np.array([[h11, h12], [h12, h22]])


def qe_residual(spec: ChristoffelSpec, phi: ScalarExpr, p: Point) -> Tensor2:
    """H phi + phi * rho_s at a point; zero exactly on solutions."""
    return hessian(spec, phi, p) + ex.evaluate(phi, p) * ricci_sym_at(spec, p)


def max_residual(spec: ChristoffelSpec, phi: ScalarExpr, grid) -> float:
    """Max-norm quasi-Einstein residual of phi over a grid (compiled path)."""
    d1, d2, d11, d12, d22 = _second_derivs(phi)
    fphi = compile_scalar(phi)
    f1, f2 = compile_scalar(d1), compile_scalar(d2)
    f11, f12, f22 = compile_scalar(d11), compile_scalar(d12), compile_scalar(d22)
    worst = 0.0
    for p in grid:
        u, v = p
        g1, g2 = f1(u, v), f2(u, v)
        a, b, c, d, e, f = spec.christoffel_at(p)
        val = fphi(u, v)
        rs = ricci_sym_at(spec, p)
        r11 = f11(u, v) - (a * g1 + b * g2) + val * rs[0, 0]
        r12 = f12(u, v) - (c * g1 + d * g2) + val * rs[0, 1]
        r22 = f22(u, v) - (e * g1 + f * g2) + val * rs[1, 1]
        worst = max(worst, abs(r11), abs(r12), abs(r22))
    return worst


@dataclass(frozen=True)
class QEReport:
    model: str
    grid_shape: tuple[int, int]
    residuals: tuple[float, ...]  # per basis element, max over the grid
    xi_det: float
    tol: float

    @property
    def passed(self) -> bool:
        return all(r <= self.tol for r in self.residuals)

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "grid": {"shape": list(self.grid_shape)},
            "residuals": list(self.residuals),
            "xi_det": self.xi_det,
            "tol": self.tol,
            "pass": self.passed,
        }


def verify_q_basis(record: ModelRecord, grid=None, tol: float = DEFAULT_TOL) -> QEReport:
    """Max residual of every catalog basis element over the standard grid,
    plus the determinant of the point-evaluation matrix at the base point."""
    if not record.q_basis:
        raise ValueError(f"{record.ref.label()} has a trivial solution space")
    pts = grid if grid is not None else sample_grid(record)
    n = int(round(len(pts) ** 0.5))
    residuals = tuple(max_residual(record.spec, q, pts) for q in record.q_basis)
    _, det = xi_matrix(record.q_basis, record.base_point)
    return QEReport(record.ref.label(), (n, n), residuals, det, tol)


def xi_matrix(q_basis, p: Point):
    """Rows (phi, d1 phi, d2 phi)(p) for each basis element, and the
    determinant.  A nonzero determinant certifies independence and that the
    solution space attains its maximal dimension three."""
    rows = []
    for phi in q_basis:
        rows.append([ex.evaluate(phi, p),
                     ex.evaluate(diff(phi, 1), p),
                     ex.evaluate(diff(phi, 2), p)])
    m = np.array(rows)
    det = float(np.linalg.det(m)) if m.shape == (3, 3) else 0.0
    return m, det


def mutation_direction(record: ModelRecord, grid=None) -> ScalarExpr:
    """A perturbation direction that provably leaves the solution span:
    x1 when x1 is not itself a solution for this model, else x1*x2."""
    pts = grid if grid is not None else sample_grid(record)
    cand = ex.x1
    if max_residual(record.spec, cand, pts) <= 1e-3:
        cand = ex.mul(ex.x1, ex.x2)
    return cand
