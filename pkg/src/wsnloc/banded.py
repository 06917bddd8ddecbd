"""Symmetric banded matrices and the L-banded approximate inversion.

The covariance matrices of the banded filter are stored as a main diagonal
plus ``bw`` sub-diagonals; symmetry is structural (only the lower diagonals
are kept). The approximate inversion accumulates inverses of sliding
principal windows: add the (L+1)-wide window inverses, subtract the L-wide
overlap inverses.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.linalg import cho_factor, cho_solve

from .errors import NotPositiveDefiniteError, SingularSubmatrixError


class BandedSymMatrix:
    """Symmetric n x n matrix with every entry |i-j| > bw exactly zero.

    diagonals[k] holds the k-th sub-diagonal (length n - k); the main
    diagonal is diagonals[0]. Instances are treated as immutable values.
    """

    __slots__ = ("diagonals",)

    def __init__(self, diagonals):
        diagonals = [np.array(d, dtype=float) for d in diagonals]
        if not diagonals:
            raise ValueError("need at least the main diagonal")
        n = diagonals[0].shape[0]
        if n < 1:
            raise ValueError("matrix dimension must be >= 1")
        if len(diagonals) > n:
            raise ValueError("bandwidth must be <= n - 1")
        for k, d in enumerate(diagonals):
            if d.shape != (n - k,):
                raise ValueError(f"diagonal {k} must have length {n - k}")
        self.diagonals = diagonals

    @property
    def n(self):
        return self.diagonals[0].shape[0]

    @property
    def bw(self):
        return len(self.diagonals) - 1

    @classmethod
    def zeros(cls, n, bw=0):
        return cls([np.zeros(n - k) for k in range(bw + 1)])

    @classmethod
    def identity(cls, n):
        return cls([np.ones(n)])

    @classmethod
    def scaled_identity(cls, n, c):
        return cls([np.full(n, float(c))])

    @classmethod
    def from_dense(cls, a, bw=None, check=True, zero_tol=0.0):
        """Extract band storage from a dense symmetric array.

        With check=True, raises if any entry outside the band exceeds
        zero_tol in magnitude.
        """
        a = np.asarray(a, dtype=float)
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError("expected a square array")
        if bw is None:
            bw = bandwidth(a, zero_tol)
        if check and bw < n - 1:
            mask = np.abs(a) > zero_tol
            i, j = np.nonzero(mask)
            if i.size and np.max(np.abs(i - j)) > bw:
                raise ValueError(f"entries outside bandwidth {bw} are nonzero")
        rows = np.arange(n)
        return cls([a[rows[k:], rows[: n - k]] for k in range(bw + 1)])

    def to_dense(self):
        n = self.n
        out = np.zeros((n, n))
        rows = np.arange(n)
        for k, d in enumerate(self.diagonals):
            out[rows[k:], rows[: n - k]] = d
            out[rows[: n - k], rows[k:]] = d
        return out

    def entry(self, i, j):
        k = abs(i - j)
        if k > self.bw:
            return 0.0
        return self.diagonals[k][min(i, j)]

    def matvec(self, x):
        """Banded matrix-vector product, O(n * bw)."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError("vector length mismatch")
        y = self.diagonals[0] * x
        n = self.n
        for k in range(1, self.bw + 1):
            d = self.diagonals[k]
            y[: n - k] += d * x[k:]
            y[k:] += d * x[: n - k]
        return y

    def main_diagonal(self):
        return self.diagonals[0]

    def __eq__(self, other):
        if not isinstance(other, BandedSymMatrix):
            return NotImplemented
        if self.n != other.n:
            return False
        return np.array_equal(self.to_dense(), other.to_dense())

    def __repr__(self):
        return f"BandedSymMatrix(n={self.n}, bw={self.bw})"


def as_dense(a):
    """Accept either a BandedSymMatrix or an array-like; return an ndarray."""
    if isinstance(a, BandedSymMatrix):
        return a.to_dense()
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    return a


def bandwidth(a, zero_tol=0.0):
    """Largest |i - j| over entries with |a_ij| > zero_tol (0 if none).

    The default exact-zero test suits structural matrices such as graph
    Laplacians; pass a tolerance when measuring floating-point matrices.
    """
    if zero_tol < 0:
        raise ValueError("zero_tol must be >= 0")
    a = as_dense(a)
    i, j = np.nonzero(np.abs(a) > zero_tol)
    if i.size == 0:
        return 0
    return int(np.max(np.abs(i - j)))


def principal_submatrix(a, lo, hi):
    """Copy of the principal block spanning rows/columns lo..hi inclusive."""
    a = as_dense(a)
    n = a.shape[0]
    if not (0 <= lo <= hi < n):
        raise IndexError(f"invalid principal block [{lo}, {hi}] for n={n}")
    return a[lo : hi + 1, lo : hi + 1].copy()


def dense_inverse(a):
    """Exact inverse of a symmetric positive definite matrix via Cholesky."""
    a = as_dense(a)
    try:
        c = cho_factor(a, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from None
    inv = cho_solve(c, np.eye(a.shape[0]))
    return 0.5 * (inv + inv.T)


def _window_inverses(a, w, n_windows):
    """Inverses of all principal windows a[s:s+w, s:s+w], s = 0..n_windows-1."""
    idx = np.arange(n_windows)
    blocks = sliding_window_view(a, (w, w))[idx, idx]
    try:
        invs = np.linalg.inv(blocks)
    except np.linalg.LinAlgError as exc:
        raise SingularSubmatrixError(
            f"a {w}x{w} principal block is singular; "
            "L may be too small or the matrix is not SPD"
        ) from None
    if not np.all(np.isfinite(invs)):
        raise SingularSubmatrixError(
            f"a {w}x{w} principal block inversion produced non-finite values"
        )
    return invs


def l_banded_inverse(a, L):
    """Bandwidth-L approximation of a^{-1} for symmetric a.

    Accumulates into a zero matrix: add the inverse of each (L+1)-wide
    principal window, then subtract the inverse of each interior L-wide
    window. At L = n-1 this is the exact inverse.
    """
    a = as_dense(a)
    n = a.shape[0]
    if not 0 <= L <= n - 1:
        raise ValueError(f"L must be in [0, {n - 1}], got {L}")
    z = np.zeros((n, n))
    w = L + 1
    invs = _window_inverses(a, w, n - L)
    for s in range(n - L):
        z[s : s + w, s : s + w] += invs[s]
    if L >= 1 and n - L >= 2:
        invs = _window_inverses(a[1:, 1:], L, n - L - 1)
        for s in range(1, n - L):
            z[s : s + L, s : s + L] -= invs[s - 1]
    return BandedSymMatrix.from_dense(z, L, check=False)


def add_scaled_identity(a, sigma):
    """a + sigma * I, keeping band storage and bandwidth."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    diags = [d.copy() for d in a.diagonals]
    diags[0] += sigma
    return BandedSymMatrix(diags)


def add(a, b):
    """Entrywise sum of two banded matrices; bandwidth is the max of the two."""
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")
    if a.bw < b.bw:
        a, b = b, a
    diags = [d.copy() for d in a.diagonals]
    for k, d in enumerate(b.diagonals):
        diags[k] += d
    return BandedSymMatrix(diags)


def frobenius_error(a, b):
    """Frobenius norm of the difference of two equally sized matrices."""
    a = as_dense(a)
    b = as_dense(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b, ord="fro"))
