import numpy as np
import pytest

from wsnloc.banded import (
    BandedSymMatrix,
    add,
    add_scaled_identity,
    bandwidth,
    dense_inverse,
    frobenius_error,
    l_banded_inverse,
    principal_submatrix,
)
from wsnloc.errors import NotPositiveDefiniteError, SingularSubmatrixError

from oracle import random_spd

TRIDIAG = np.array([[2.0, 1, 0], [1, 2, 1], [0, 1, 2]])
TRIDIAG_INV = 0.25 * np.array([[3.0, -2, 1], [-2, 4, -2], [1, -2, 3]])


class TestBandedSymMatrix:
    def test_roundtrip(self):
        rng = np.random.default_rng(0)
        a = random_spd(7, rng, bw=2)
        b = BandedSymMatrix.from_dense(a, 2)
        assert b.n == 7 and b.bw == 2
        np.testing.assert_array_equal(b.to_dense(), a)

    def test_from_dense_rejects_out_of_band(self):
        a = np.eye(4)
        a[0, 3] = a[3, 0] = 1.0
        with pytest.raises(ValueError):
            BandedSymMatrix.from_dense(a, 1)

    def test_matvec_matches_dense(self):
        rng = np.random.default_rng(1)
        a = random_spd(9, rng, bw=3)
        b = BandedSymMatrix.from_dense(a, 3)
        x = rng.normal(size=9)
        np.testing.assert_allclose(b.matvec(x), a @ x, rtol=1e-14)

    def test_entry_outside_band_is_zero(self):
        b = BandedSymMatrix.identity(5)
        assert b.entry(0, 4) == 0.0
        assert b.entry(2, 2) == 1.0


class TestBandwidth:
    def test_identity(self):
        assert bandwidth(np.eye(6)) == 0

    def test_tridiagonal(self):
        assert bandwidth(TRIDIAG) == 1

    def test_corner_entry_maximal(self):
        a = np.eye(5)
        a[0, 4] = a[4, 0] = 0.5
        assert bandwidth(a) == 4

    def test_all_zero(self):
        assert bandwidth(np.zeros((4, 4))) == 0

    def test_zero_tol(self):
        a = np.eye(3)
        a[0, 2] = a[2, 0] = 1e-14
        assert bandwidth(a) == 2
        assert bandwidth(a, zero_tol=1e-12) == 0


class TestPrincipalSubmatrix:
    def test_full_span(self):
        np.testing.assert_array_equal(principal_submatrix(TRIDIAG, 0, 2), TRIDIAG)

    def test_single_entry(self):
        np.testing.assert_array_equal(
            principal_submatrix(TRIDIAG, 1, 1), np.array([[2.0]])
        )

    def test_diagonal_slice(self):
        np.testing.assert_array_equal(
            principal_submatrix(np.diag([1.0, 2, 3]), 1, 2), np.diag([2.0, 3])
        )

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            principal_submatrix(TRIDIAG, 1, 3)


class TestDenseInverse:
    def test_identity(self):
        np.testing.assert_array_equal(dense_inverse(np.eye(4)), np.eye(4))

    def test_diagonal(self):
        np.testing.assert_allclose(
            dense_inverse(np.diag([2.0, 4.0])), np.diag([0.5, 0.25])
        )

    def test_tridiagonal_hand_computed(self):
        np.testing.assert_allclose(dense_inverse(TRIDIAG), TRIDIAG_INV, atol=1e-14)

    def test_residual_bound(self):
        rng = np.random.default_rng(2)
        for n in (5, 20, 100):
            a = random_spd(n, rng)
            inv = dense_inverse(a)
            assert np.linalg.norm(a @ inv - np.eye(n), "fro") / n <= 1e-10

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefiniteError):
            dense_inverse(np.diag([1.0, -1.0]))


class TestLBandedInverse:
    def test_diagonal_l0(self):
        out = l_banded_inverse(np.diag([2.0, 4.0]), 0)
        np.testing.assert_allclose(out.to_dense(), np.diag([0.5, 0.25]))

    def test_full_band_equals_dense_inverse(self):
        out = l_banded_inverse(TRIDIAG, 2)
        np.testing.assert_allclose(out.to_dense(), TRIDIAG_INV, atol=1e-14)

    def test_exactness_at_full_band_random(self):
        rng = np.random.default_rng(3)
        for n in (5, 20, 100):
            a = random_spd(n, rng)
            exact = dense_inverse(a)
            approx = l_banded_inverse(a, n - 1)
            rel = frobenius_error(approx, exact) / np.linalg.norm(exact, "fro")
            assert rel <= 1e-8

    def test_band_containment(self):
        rng = np.random.default_rng(4)
        a = random_spd(12, rng)
        for L in (0, 1, 3, 7):
            out = l_banded_inverse(a, L).to_dense()
            i, j = np.indices(out.shape)
            assert np.all(out[np.abs(i - j) > L] == 0.0)

    def test_monotone_above_input_bandwidth(self):
        rng = np.random.default_rng(5)
        for bw in (2, 5, 11):
            a = random_spd(40, rng, bw=bw)
            exact = dense_inverse(a)
            errs = [
                frobenius_error(l_banded_inverse(a, L), exact)
                for L in range(bw, 40)
            ]
            for e1, e2 in zip(errs, errs[1:]):
                assert e2 <= e1 + 1e-9

    def test_symmetry_is_structural(self):
        rng = np.random.default_rng(6)
        a = random_spd(15, rng)
        out = l_banded_inverse(a, 4).to_dense()
        np.testing.assert_array_equal(out, out.T)

    def test_diagonally_dominant_never_raises(self):
        rng = np.random.default_rng(7)
        n = 30
        a = rng.uniform(-1, 1, size=(n, n))
        a = 0.5 * (a + a.T)
        np.fill_diagonal(a, n)
        for L in range(0, n, 5):
            l_banded_inverse(a, L)

    def test_singular_submatrix(self):
        a = np.zeros((3, 3))
        a[0, 1] = a[1, 0] = 1.0
        a[2, 2] = 1.0
        with pytest.raises(SingularSubmatrixError):
            l_banded_inverse(a, 0)

    def test_invalid_l(self):
        with pytest.raises(ValueError):
            l_banded_inverse(np.eye(3), 3)


class TestAddOps:
    def test_add_scaled_identity_zeros(self):
        out = add_scaled_identity(BandedSymMatrix.zeros(3), 1.0)
        np.testing.assert_array_equal(out.to_dense(), np.eye(3))

    def test_add_scaled_identity_noop(self):
        out = add_scaled_identity(BandedSymMatrix.identity(3), 0.0)
        np.testing.assert_array_equal(out.to_dense(), np.eye(3))

    def test_add_scaled_identity_process_noise(self):
        base = BandedSymMatrix.from_dense(np.diag([1.0, 2.0]), 0)
        out = add_scaled_identity(base, 0.02)
        np.testing.assert_allclose(out.to_dense(), np.diag([1.02, 2.02]))

    def test_add_zero(self):
        a = BandedSymMatrix.from_dense(TRIDIAG, 1)
        out = add(a, BandedSymMatrix.zeros(3))
        np.testing.assert_array_equal(out.to_dense(), TRIDIAG)

    def test_add_identity_twice(self):
        out = add(BandedSymMatrix.identity(4), BandedSymMatrix.identity(4))
        np.testing.assert_array_equal(out.to_dense(), 2 * np.eye(4))

    def test_add_bandwidth_max_rule(self):
        rng = np.random.default_rng(8)
        tri = BandedSymMatrix.from_dense(random_spd(6, rng, bw=1), 1)
        penta = BandedSymMatrix.from_dense(random_spd(6, rng, bw=2), 2)
        out = add(tri, penta)
        assert out.bw == 2
        np.testing.assert_allclose(
            out.to_dense(), tri.to_dense() + penta.to_dense()
        )

    def test_add_dimension_mismatch(self):
        with pytest.raises(ValueError):
            add(BandedSymMatrix.identity(3), BandedSymMatrix.identity(4))


class TestFrobeniusError:
    def test_equal_is_zero(self):
        assert frobenius_error(TRIDIAG, TRIDIAG) == 0.0

    def test_identity_vs_zero(self):
        assert frobenius_error(np.eye(2), np.zeros((2, 2))) == pytest.approx(
            np.sqrt(2)
        )

    def test_two_unit_deviations(self):
        assert frobenius_error(np.eye(2), np.ones((2, 2))) == pytest.approx(
            np.sqrt(2)
        )

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            frobenius_error(np.eye(2), np.eye(3))
