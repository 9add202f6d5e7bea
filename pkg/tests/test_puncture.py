import numpy as np
import pytest
from numpy.testing import assert_allclose

from mimodet.errors import SingularPivot
from mimodet.linalg import ql_decompose, singular_values
from mimodet.puncture import puncture_matrix, wl_decompose

from conftest import cnoise, rayleigh_channel


def seeded_lower_factor(seed, n):
    rng = np.random.default_rng(seed)
    return ql_decompose(rayleigh_channel(rng, n, n)).L


class TestPunctureMatrix:
    def test_full_order_is_identity(self):
        # nu = Nt - 1 leaves a 1x1 trailing block: Wp = I and Lp = L
        el = seeded_lower_factor(1, 4)
        wp, lp, _dp, _sigma = puncture_matrix(el, 3)
        assert np.abs(wp - np.eye(4)).max() <= 1e-14
        assert np.abs(lp - el).max() <= 1e-14
        # the inverse-free route is exact here: no elimination step runs
        rng = np.random.default_rng(1)
        h = rayleigh_channel(rng, 4, 4)
        dec = wl_decompose(h, None, 3)
        fac = ql_decompose(h)
        assert np.abs(dec.Wp - np.eye(4)).max() == 0
        assert np.abs(dec.Lp - fac.L).max() == 0

    def test_diagonal_needs_no_puncturing(self):
        el = np.diag([2.0, 3.0, 4.0]).astype(complex)
        wp, lp, _dp, sigma = puncture_matrix(el, 1)
        assert_allclose(wp, np.eye(3), atol=0)
        assert_allclose(lp, el, atol=0)
        assert_allclose(sigma, [3.0, 4.0], atol=0)

    def test_seeded_structure_and_independent_sigma(self):
        el = seeded_lower_factor(7, 4)
        wp, lp, _dp, sigma = puncture_matrix(el, 1)
        # punctured entries are exact zeros: (i, j) with 1 <= j < i
        assert lp[2, 1] == 0 and lp[3, 1] == 0 and lp[3, 2] == 0
        assert np.abs(np.sum(np.abs(wp) ** 2, axis=1) - 1.0).max() <= 1e-10
        # independent route: Sigma from an explicit inverse of S
        sinv = np.linalg.inv(el[1:, 1:])
        sigma_ref = 1.0 / np.sqrt(np.real(np.diag(sinv @ sinv.conj().T)))
        assert_allclose(sigma, sigma_ref, atol=1e-12)
        assert_allclose(wp[1:, 1:], sigma_ref[:, None] * sinv, atol=1e-12)

    def test_dp_defining_equation(self):
        # Wp = Dp diag(L) blkdiag(I, S^-1)
        el = seeded_lower_factor(3, 5)
        nu = 2
        wp, _lp, dp, _sigma = puncture_matrix(el, nu)
        blk = np.zeros((5, 5), dtype=complex)
        blk[:nu, :nu] = np.eye(nu)
        blk[nu:, nu:] = np.linalg.inv(el[nu:, nu:])
        assert_allclose(wp, np.diag(dp) @ np.diag(np.diag(el)) @ blk, atol=1e-12)

    def test_singular_block(self):
        el = np.tril(np.ones((3, 3), dtype=complex))
        el[2, 2] = 0.0
        with pytest.raises(SingularPivot):
            puncture_matrix(el, 1)

    def test_invalid_order(self):
        el = seeded_lower_factor(1, 3)
        for nu in (0, 3, 7):
            with pytest.raises(ValueError):
                puncture_matrix(el, nu)


class TestWlDecompose:
    def test_identity_channel(self):
        y = np.array([1.0, 2.0, 3.0, 4.0]) + 1j
        dec = wl_decompose(np.eye(4), y, 1)
        assert np.abs(dec.Lp - np.eye(4)).max() == 0
        assert np.abs(dec.y_punct - y).max() == 0

    def test_matches_direct_route_seeded(self):
        rng = np.random.default_rng(12)
        h = rayleigh_channel(rng, 4, 4)
        y = cnoise(rng, 4)
        fac = ql_decompose(h, y)
        wp, lp, _dp, _sigma = puncture_matrix(fac.L, 1)
        dec = wl_decompose(h, y, 1)
        assert np.abs(dec.Lp - lp).max() <= 1e-10
        assert np.abs(dec.Wp - wp).max() <= 1e-10
        assert np.abs(dec.y_punct - wp @ fac.y_rot).max() <= 1e-10

    def test_order_two_structure(self):
        rng = np.random.default_rng(13)
        h = rayleigh_channel(rng, 6, 6)
        y = cnoise(rng, 6)
        dec = wl_decompose(h, y, 2)
        for i in range(6):
            for j in range(2, i):
                assert dec.Lp[i, j] == 0
        fac = ql_decompose(h)
        assert np.linalg.norm(dec.Wp @ fac.L - dec.Lp) <= 1e-10

    def test_route_equivalence_property(self):
        # inverse-free Gauss route == direct formulas, all dims and orders
        rng = np.random.default_rng(99)
        count = 0
        while count < 1000:
            nt = int(rng.integers(2, 9))
            nr = nt + int(rng.integers(0, 3))
            h = rayleigh_channel(rng, nr, nt)
            y = cnoise(rng, nr)
            nu = int(rng.integers(1, nt))
            fac = ql_decompose(h, y)
            wp, lp, _dp, _sigma = puncture_matrix(fac.L, nu)
            dec = wl_decompose(h, y, nu)
            assert np.abs(dec.Lp - lp).max() <= 1e-10
            assert np.abs(dec.Wp - wp).max() <= 1e-10
            assert np.abs(dec.y_punct - wp @ fac.y_rot).max() <= 1e-10
            count += 1

    def test_spectral_and_row_norm_invariants(self):
        rng = np.random.default_rng(23)
        for _ in range(80):
            nt = int(rng.integers(2, 7))
            h = rayleigh_channel(rng, nt, nt)
            nu = int(rng.integers(1, nt))
            dec = wl_decompose(h, None, nu)
            assert np.abs(np.sum(np.abs(dec.Wp) ** 2, axis=1) - 1.0).max() <= 1e-10
            sv = singular_values(dec.Wp)
            assert sv[0] >= 1.0 - 1e-12
            assert 0.0 < sv[-1] <= 1.0 + 1e-12
            d = np.diag(dec.Lp)
            assert np.all(d.imag == 0) and np.all(d.real > 0)
            assert_allclose(np.diag(dec.Wp)[:nu], np.ones(nu), atol=0)

    def test_permutation_consistency(self):
        rng = np.random.default_rng(31)
        h = rayleigh_channel(rng, 5, 4)
        y = cnoise(rng, 5)
        perm = np.array([2, 0, 3, 1])
        d1 = wl_decompose(h, y, 2, perm)
        d2 = wl_decompose(h[:, perm], y, 2)
        assert np.abs(d1.Lp - d2.Lp).max() == 0
        assert np.abs(d1.y_punct - d2.y_punct).max() == 0

    def test_bad_perm(self):
        h = np.eye(3)
        with pytest.raises(ValueError):
            wl_decompose(h, None, 1, perm=[0, 0, 2])
