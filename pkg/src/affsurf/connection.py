"""Torsion-free connections on the plane and the half-plane.

A connection is specified by six Christoffel coefficients (a, b, c, d, e, f)
keyed as

    G_11^1 = a,  G_11^2 = b,  G_12^1 = G_21^1 = c,
    G_12^2 = G_21^2 = d,  G_22^1 = e,  G_22^2 = f,

together with a scaling kind:

    "constant"    the six numbers themselves, on all of R^2;
    "inverse-x1"  the six numbers divided by x1, on the half-plane x1 > 0;
    "linear-x1"   G_22^1 = e * x1, all others constant, on all of R^2
                  (the auxiliary surface that completes the A.M54 family).

Torsion freeness is built into the storage (the two mixed symbols share one
slot).  Curvature and Ricci are evaluated exactly: derivatives of the
symbols are analytic in the kind, never finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expr import HALF_X1, PLANE, Domain, DomainError, Point

Coeffs = tuple[float, float, float, float, float, float]

#: 2x2 real matrix at a point (Ricci, symmetrized Ricci, Hessians, residuals).
Tensor2 = np.ndarray

KINDS = ("constant", "inverse-x1", "linear-x1")


@dataclass(frozen=True)
class ChristoffelSpec:
    coeffs: Coeffs
    kind: str = "constant"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        object.__setattr__(self, "coeffs", tuple(float(v) for v in self.coeffs))

    @property
    def domain(self) -> Domain:
        return HALF_X1 if self.kind == "inverse-x1" else PLANE

    def check_point(self, p: Point):
        if self.kind == "inverse-x1" and p[0] <= 0.0:
            raise DomainError(f"x1 must be positive for an inverse-x1 connection, got {p[0]}")

    def christoffel_at(self, p: Point) -> Coeffs:
        """The six symbol values at a point, in (a, b, c, d, e, f) order."""
        self.check_point(p)
        a, b, c, d, e, f = self.coeffs
        if self.kind == "constant":
            return a, b, c, d, e, f
        if self.kind == "inverse-x1":
            u = p[0]
            return a / u, b / u, c / u, d / u, e / u, f / u
        return a, b, c, d, e * p[0], f

    def dchristoffel_at(self, p: Point) -> tuple[Coeffs, Coeffs]:
        """Exact (d/dx1, d/dx2) of the six symbols at a point."""
        self.check_point(p)
        zero = (0.0,) * 6
        if self.kind == "constant":
            return zero, zero
        if self.kind == "inverse-x1":
            u2 = p[0] * p[0]
            return tuple(-v / u2 for v in self.coeffs), zero
        d1 = (0.0, 0.0, 0.0, 0.0, self.coeffs[4], 0.0)
        return d1, zero

    def gamma_matrices(self, p: Point) -> np.ndarray:
        """Symbols as an array G[i, j, k] = Gamma_ij^k."""
        a, b, c, d, e, f = self.christoffel_at(p)
        return np.array([[[a, b], [c, d]], [[c, d], [e, f]]])

    def to_json(self) -> dict:
        return {"coeffs": list(self.coeffs), "kind": self.kind}


def christoffel_at(spec: ChristoffelSpec, p: Point) -> Coeffs:
    return spec.christoffel_at(p)


def curvature_at(spec: ChristoffelSpec, p: Point) -> np.ndarray:
    """Curvature components R[i, j, k, l] with
    R(d_i, d_j) d_k = R_ijk^l d_l, from
    d_i G_jk^l - d_j G_ik^l + G_ip^l G_jk^p - G_jp^l G_ik^p."""
    g = spec.gamma_matrices(p)
    da, _ = spec.dchristoffel_at(p)
    a, b, c, d, e, f = da
    dg = np.zeros((2, 2, 2, 2))  # dg[m, i, j, k] = d_m Gamma_ij^k
    dg[0] = np.array([[[a, b], [c, d]], [[c, d], [e, f]]])
    r = np.zeros((2, 2, 2, 2))
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    val = dg[i, j, k, l] - dg[j, i, k, l]
                    for q in range(2):
                        val += g[i, q, l] * g[j, k, q] - g[j, q, l] * g[i, k, q]
                    r[i, j, k, l] = val
    return r


def ricci_at(spec: ChristoffelSpec, p: Point) -> Tensor2:
    """rho(d_j, d_k) = trace of z -> R(z, d_j) d_k, i.e. sum_i R_ijk^i."""
    r = curvature_at(spec, p)
    return np.einsum("ijki->jk", r)


def ricci_sym_at(spec: ChristoffelSpec, p: Point) -> Tensor2:
    rho = ricci_at(spec, p)
    return 0.5 * (rho + rho.T)


def ricci_rank(spec: ChristoffelSpec, p: Point, tol: float = 1e-9) -> int:
    """Number of singular values of the symmetrized Ricci tensor exceeding
    tol * max(1, largest singular value)."""
    s = np.linalg.svd(ricci_sym_at(spec, p), compute_uv=False)
    cutoff = tol * max(1.0, float(s[0]) if len(s) else 1.0)
    return int(np.sum(s > cutoff))
