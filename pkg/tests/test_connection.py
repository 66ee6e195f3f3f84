"""Connections: symbol evaluation, curvature, Ricci, rank.

The curvature path is cross-checked against an independent oracle that
assembles R_ijk^l from finite differences of christoffel_at plus the
quadratic terms written out longhand.
"""

import numpy as np
import pytest

from affsurf import catalog as C
from affsurf.connection import (ChristoffelSpec, christoffel_at, curvature_at,
                                ricci_at, ricci_rank, ricci_sym_at)
from affsurf.expr import DomainError


def oracle_curvature(spec, p, h=1e-6):
    """R_ijk^l from central differences of the symbols; independent of the
    analytic-derivative path in the library."""
    def gamma(q):
        a, b, c, d, e, f = spec.christoffel_at(q)
        return np.array([[[a, b], [c, d]], [[c, d], [e, f]]])

    g = gamma(p)
    dg = np.zeros((2, 2, 2, 2))
    for m in range(2):
        hi = list(p)
        lo = list(p)
        hi[m] += h
        lo[m] -= h
        dg[m] = (gamma(tuple(hi)) - gamma(tuple(lo))) / (2 * h)
    r = np.zeros((2, 2, 2, 2))
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    v = dg[i, j, k, l] - dg[j, i, k, l]
                    for q in range(2):
                        v += g[i, q, l] * g[j, k, q] - g[j, q, l] * g[i, k, q]
                    r[i, j, k, l] = v
    return r


class TestChristoffelAt:
    def test_flat_plane(self):
        rec = C.instantiate("A.M06")
        assert christoffel_at(rec.spec, (3.0, -1.0)) == (0, 0, 0, 0, 0, 0)

    def test_hyperbolic_plane_scaling(self):
        rec = C.instantiate("B.N43")
        assert christoffel_at(rec.spec, (2.0, 5.0)) == (-0.5, 0.0, 0.0, -0.5, 0.5, 0.0)

    def test_half_plane_boundary(self):
        rec = C.instantiate("B.N43")
        with pytest.raises(DomainError):
            christoffel_at(rec.spec, (0.0, 0.0))

    def test_torsion_symmetry_by_storage(self):
        spec = ChristoffelSpec((1, 2, 3, 4, 5, 6))
        g = spec.gamma_matrices((0.2, 0.4))
        assert np.array_equal(g[0, 1], g[1, 0])

    def test_linear_x1_kind(self):
        rec = C.instantiate("A.M54t", c=2.0)
        a, b, c, d, e, f = christoffel_at(rec.spec, (3.0, 7.0))
        assert (a, b, c, d) == (0, 0, 0, 0)
        assert e == 5.0 * 3.0 and f == 4.0


class TestCurvature:
    def test_flat_plane_zero(self):
        rec = C.instantiate("A.M06")
        assert np.all(curvature_at(rec.spec, (0.3, 0.8)) == 0)

    def test_m46_flat(self):
        rec = C.instantiate("A.M46")
        assert np.allclose(curvature_at(rec.spec, (0.3, 0.8)), 0, atol=1e-14)

    @pytest.mark.parametrize("fam,kw", [
        ("A.M34", {"c": 1.0}), ("A.M12", {"a1": 2.0, "a2": 3.0}),
        ("B.N43", {}), ("B.N14", {"kappa": 2.0}), ("A.M54t", {"c": 1.5}),
    ])
    def test_against_fd_oracle(self, fam, kw):
        rec = C.instantiate(fam, **kw)
        for p in [(0.7, -0.4), (1.3, 0.9)]:
            got = curvature_at(rec.spec, p)
            want = oracle_curvature(rec.spec, p)
            assert np.allclose(got, want, atol=1e-7), (fam, p)
        assert np.any(curvature_at(rec.spec, (0.7, -0.4)) != 0) or fam == "A.M06"

    def test_antisymmetry_in_first_pair(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            spec = ChristoffelSpec(tuple(rng.uniform(-2, 2, size=6)))
            r = curvature_at(spec, (0.0, 0.0))
            assert np.allclose(r, -np.transpose(r, (1, 0, 2, 3)), atol=1e-12)
        for _ in range(25):
            spec = ChristoffelSpec(tuple(rng.uniform(-2, 2, size=6)), "inverse-x1")
            for p in [(0.5, -1.0), (2.0, 0.7)]:
                r = curvature_at(spec, p)
                assert np.allclose(r, -np.transpose(r, (1, 0, 2, 3)), atol=1e-12)


class TestRicci:
    def test_frozen_value_rank_one_family(self):
        # hand evaluation of sum_i (G_ip^i G_jk^p - G_jp^i G_ik^p) for the
        # c = 1 member: the only nonzero entry is rho_22 = 3 - 1 = 2
        rec = C.instantiate("A.M34", c=1.0)
        for p in [(0.0, 0.0), (1.2, -0.7)]:
            assert np.allclose(ricci_at(rec.spec, p), [[0, 0], [0, 2]], atol=1e-14)

    def test_flat_families_zero(self):
        for fam in ("A.M06", "A.M16", "A.M26", "A.M36", "A.M46", "A.M56"):
            rec = C.instantiate(fam)
            assert np.allclose(ricci_at(rec.spec, (0.4, -0.9)), 0, atol=1e-14)

    def test_constant_symbols_give_symmetric_ricci(self):
        rng = np.random.default_rng(11)
        grid = [(u, v) for u in np.linspace(-1, 1, 10) for v in np.linspace(-1, 1, 10)]
        for _ in range(50):
            spec = ChristoffelSpec(tuple(rng.uniform(-3, 3, size=6)))
            for p in grid[::7]:
                rho = ricci_at(spec, p)
                assert abs(rho[0, 1] - rho[1, 0]) <= 1e-12

    def test_symmetrization(self):
        spec = ChristoffelSpec((0.3, -1.0, 0.2, 0.9, 1.1, -0.4), "inverse-x1")
        p = (0.8, 0.3)
        rho = ricci_at(spec, p)
        rs = ricci_sym_at(spec, p)
        assert np.allclose(rs, 0.5 * (rho + rho.T))


class TestRank:
    def test_rank_two_family(self):
        rec = C.instantiate("A.M12", a1=2.0, a2=3.0)
        assert ricci_rank(rec.spec, (0.0, 0.0)) == 2

    def test_rank_one_embedding_target(self):
        rec = C.instantiate("A.M44", c=0.0)
        assert ricci_rank(rec.spec, (0.0, 0.0)) == 1

    def test_rank_zero_flat(self):
        rec = C.instantiate("A.M06")
        assert ricci_rank(rec.spec, (0.0, 0.0)) == 0

    def test_rank_matches_expectation_across_catalog(self):
        for rec in C.all_records():
            want = rec.expected.ricci_rank
            if want is None:
                continue
            p = rec.base_point
            assert ricci_rank(rec.spec, p) == want, rec.ref.label()

    def test_flat_detection_for_half_plane_six_families(self):
        for rec in C.all_records("B"):
            if rec.expected.dim_killing != 6:
                continue
            p = (0.9, -0.3)
            assert ricci_rank(rec.spec, p) == 0
            assert np.allclose(curvature_at(rec.spec, p), 0, atol=1e-12), rec.ref.label()
