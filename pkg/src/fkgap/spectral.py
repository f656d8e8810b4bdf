"""Symmetric eigenvalue machinery for chain Hessian windows.

Two independent routes are implemented on purpose:

* `sturm_eigen_tridiagonal`: Sturm-sequence counting plus bisection on a
  symmetric tridiagonal matrix.  This is the production path; windows of
  scalar chains are tridiagonal already and block windows are reduced to
  tridiagonal form by Householder reflections.
* `jacobi_eigen_dense`: cyclic Jacobi rotations on a dense symmetric
  matrix.  Slower, but shares no code with the Sturm path, so the two can
  cross-validate each other.

Keep it that way: tests rely on the routes being independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CapacityError, ConvergenceError

DENSE_LIMIT = 2000


@dataclass(frozen=True, eq=False)
class HessianWindow:
    """Block-tridiagonal symmetric window of a chain Hessian.

    diag holds the (N, d, d) on-site blocks, off the (N - 1, d, d)
    coupling blocks between consecutive sites (sub-diagonal blocks are
    their transposes).  `start` is the chain index of the first site.
    """

    start: int
    diag: np.ndarray
    off: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float)
        off = np.asarray(self.off, dtype=float)
        if diag.ndim != 3 or diag.shape[1] != diag.shape[2]:
            raise ValueError("diag must have shape (N, d, d)")
        n, d = diag.shape[0], diag.shape[1]
        if off.shape != (max(n - 1, 0), d, d):
            raise ValueError("off must have shape (N - 1, d, d)")
        skew = np.max(np.abs(diag - np.swapaxes(diag, 1, 2))) if n else 0.0
        if skew > 1e-12 * max(1.0, float(np.max(np.abs(diag)))):
            raise ValueError("diagonal blocks must be symmetric (skew %g)" % skew)
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "off", off)
        object.__setattr__(self, "start", int(self.start))

    @classmethod
    def from_tridiagonal(cls, diag, off, start: int = 0) -> "HessianWindow":
        diag = np.asarray(diag, dtype=float)
        off = np.asarray(off, dtype=float)
        return cls(start, diag[:, None, None], off[:, None, None])

    @property
    def sites(self) -> int:
        return self.diag.shape[0]

    @property
    def block_dim(self) -> int:
        return self.diag.shape[1]

    @property
    def matrix_dim(self) -> int:
        return self.sites * self.block_dim

    def as_tridiagonal(self) -> tuple[np.ndarray, np.ndarray]:
        if self.block_dim != 1:
            raise ValueError("only d = 1 windows are tridiagonal")
        return self.diag[:, 0, 0].copy(), self.off[:, 0, 0].copy()

    def to_dense(self) -> np.ndarray:
        n, d = self.sites, self.block_dim
        out = np.zeros((n * d, n * d))
        for i in range(n):
            out[i * d : (i + 1) * d, i * d : (i + 1) * d] = self.diag[i]
        for i in range(n - 1):
            out[i * d : (i + 1) * d, (i + 1) * d : (i + 2) * d] = self.off[i]
            out[(i + 1) * d : (i + 2) * d, i * d : (i + 1) * d] = self.off[i].T
        return out

    def matvec(self, xi: np.ndarray) -> np.ndarray:
        """Apply the window matrix to site vectors xi of shape (N, d)."""
        xi = np.asarray(xi, dtype=float)
        out = np.einsum("nij,nj->ni", self.diag, xi)
        if self.sites > 1:
            out[:-1] += np.einsum("nij,nj->ni", self.off, xi[1:])
            out[1:] += np.einsum("nji,nj->ni", self.off, xi[:-1])
        return out


@dataclass(frozen=True)
class SpectralExtrema:
    """Extreme and nearest-to-zero eigenvalues of a symmetric window."""

    lambda_min: float
    lambda_max: float
    abs_min: float
    abs_max: float
    matrix_dim: int

    @property
    def gap_ratio(self) -> float:
        """abs_min / abs_max; zero denominator yields 0."""
        return self.abs_min / self.abs_max if self.abs_max > 0 else 0.0


def _validate_tridiagonal(diag, offdiag):
    a = np.asarray(diag, dtype=float).ravel()
    b = np.asarray(offdiag, dtype=float).ravel()
    if a.size == 0:
        raise ValueError("empty matrix")
    if b.size != a.size - 1:
        raise ValueError("offdiag must have length N - 1")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("matrix entries must be finite")
    return a, b


def sturm_count(diag, offdiag, x) -> np.ndarray:
    """Number of eigenvalues strictly below each shift in x.

    Counts the negative pivots of the LDL^T factorisation of T - x I;
    vanishing pivots are nudged to a tiny negative value (LAPACK-style
    pivmin guard), which charges eigenvalues exactly at x to the count.
    """
    a, b = _validate_tridiagonal(diag, offdiag)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    b2 = b * b
    pivmin = np.finfo(float).tiny * max(1.0, float(b2.max()) if b2.size else 1.0)
    d = a[0] - xs
    d = np.where(np.abs(d) < pivmin, -pivmin, d)
    count = (d < 0).astype(np.int64)
    for i in range(1, a.size):
        d = (a[i] - xs) - b2[i - 1] / d
        d = np.where(np.abs(d) < pivmin, -pivmin, d)
        count += d < 0
    return count if np.ndim(x) else int(count[0])


def _gershgorin(a, b):
    r = np.zeros_like(a)
    if b.size:
        r[:-1] += np.abs(b)
        r[1:] += np.abs(b)
    lo = float(np.min(a - r))
    hi = float(np.max(a + r))
    pad = 1e3 * np.finfo(float).eps * max(1.0, abs(lo), abs(hi))
    return lo - pad, hi + pad


def _bisect_for_indices(a, b, targets, lo0, hi0, tol):
    """Bisect the j-th smallest eigenvalue for each 1-based index in targets."""
    t = np.asarray(targets, dtype=np.int64)
    lo = np.full(t.shape, lo0)
    hi = np.full(t.shape, hi0)
    width = hi0 - lo0
    if width <= 0:
        return lo
    steps = min(300, int(math.ceil(math.log2(max(width / max(tol, 1e-300), 2.0)))) + 3)
    for _ in range(steps):
        if np.all(hi - lo <= tol):
            break
        mid = 0.5 * (lo + hi)
        ge = sturm_count(a, b, mid) >= t
        hi = np.where(ge, mid, hi)
        lo = np.where(ge, lo, mid)
    return 0.5 * (lo + hi)


def sturm_eigen_tridiagonal(diag, offdiag, which: str = "all", tol: float = 1e-10):
    """Eigenvalues of a symmetric tridiagonal matrix by Sturm bisection.

    which selects the output:
      "all"       all N eigenvalues ascending (with multiplicity),
      "extreme"   the smallest and largest,
      "near_zero" the one or two eigenvalues closest to zero, bisected to
                  the tighter bracket tol * max(1, abs_max).

    Every returned eigenvalue is bracketed to width <= tol (near_zero:
    the scaled bracket above) before the bracket midpoint is reported.
    """
    a, b = _validate_tridiagonal(diag, offdiag)
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = a.size
    lo, hi = _gershgorin(a, b)
    if which == "all":
        return _bisect_for_indices(a, b, np.arange(1, n + 1), lo, hi, tol)
    if which == "extreme":
        targets = [1, n] if n > 1 else [1]
        return _bisect_for_indices(a, b, targets, lo, hi, tol)
    if which == "near_zero":
        extremes = _bisect_for_indices(a, b, [1, n] if n > 1 else [1], lo, hi, tol)
        abs_max = float(np.max(np.abs(extremes)))
        tol_nz = tol * max(1.0, abs_max)
        below = int(sturm_count(a, b, 0.0))
        targets = [j for j in (below, below + 1) if 1 <= j <= n]
        vals = _bisect_for_indices(a, b, targets, lo, hi, tol_nz)
        return np.sort(vals)
    raise ValueError("which must be 'all', 'extreme' or 'near_zero'")


def jacobi_eigen_dense(M, tol: float = 1e-12, max_sweeps: int = 60) -> np.ndarray:
    """All eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations.

    Sweeps row by row, annihilating each off-diagonal entry above a
    per-sweep threshold, until the off-diagonal Frobenius norm falls below
    tol relative to the matrix norm.  Independent of the Sturm path.
    """
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if A.shape[0] > DENSE_LIMIT:
        raise CapacityError(
            "matrix dimension %d exceeds the dense limit %d" % (A.shape[0], DENSE_LIMIT)
        )
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-10:
        raise ValueError("matrix must be symmetric within 1e-10")
    n = A.shape[0]
    if n == 1:
        return A.ravel().copy()
    scale = max(1.0, float(np.linalg.norm(A)))
    # summing the off-diagonal squares directly avoids the cancellation in
    # ||A||_F^2 - ||diag||_F^2, which floors near ||A|| sqrt(eps)
    off_mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(A[off_mask] ** 2)))
        if off <= tol * scale:
            return np.sort(np.diag(A))
        thresh = off / (n * n)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= thresh:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                app, aqq = A[p, p], A[q, q]
                rowp = A[p, :].copy()
                rowq = A[q, :].copy()
                A[p, :] = c * rowp - s * rowq
                A[q, :] = s * rowp + c * rowq
                colp = A[:, p].copy()
                colq = A[:, q].copy()
                A[:, p] = c * colp - s * colq
                A[:, q] = s * colp + c * colq
                A[p, p] = app - t * apq
                A[q, q] = aqq + t * apq
                A[p, q] = 0.0
                A[q, p] = 0.0
    raise ConvergenceError("Jacobi sweeps did not reduce the off-diagonal norm")


def householder_tridiagonalize(M) -> tuple[np.ndarray, np.ndarray]:
    """Reduce a dense symmetric matrix to tridiagonal form (same spectrum)."""
    A = np.array(M, dtype=float)
    n = A.shape[0]
    for k in range(n - 2):
        x = A[k + 1 :, k]
        norm_x = np.linalg.norm(x)
        if norm_x == 0.0:
            continue
        alpha = -math.copysign(norm_x, x[0] if x[0] != 0 else 1.0)
        v = x.copy()
        v[0] -= alpha
        vnorm = np.linalg.norm(v)
        if vnorm < np.finfo(float).tiny * 4:
            continue
        v /= vnorm
        B = A[k + 1 :, k + 1 :]
        w = B @ v
        Kv = w - v * (v @ w)
        B -= 2.0 * np.outer(v, Kv) + 2.0 * np.outer(Kv, v)
        A[k + 1, k] = alpha
        A[k, k + 1] = alpha
        A[k + 2 :, k] = 0.0
        A[k, k + 2 :] = 0.0
    return np.diag(A).copy(), np.diag(A, 1).copy()


def spectral_extrema(H: HessianWindow, tol: float = 1e-10) -> SpectralExtrema:
    """Extreme eigenvalues and the eigenvalue nearest zero of a window.

    d = 1 windows take the tridiagonal Sturm path directly; block windows
    are Householder-reduced to tridiagonal form first, which requires the
    dense dimension N * d to stay within DENSE_LIMIT.
    """
    if H.block_dim == 1:
        a, b = H.as_tridiagonal()
    else:
        if H.matrix_dim > DENSE_LIMIT:
            raise CapacityError(
                "window dimension N*d = %d exceeds the dense limit %d"
                % (H.matrix_dim, DENSE_LIMIT)
            )
        a, b = householder_tridiagonalize(H.to_dense())
    extremes = sturm_eigen_tridiagonal(a, b, which="extreme", tol=tol)
    near = sturm_eigen_tridiagonal(a, b, which="near_zero", tol=tol)
    return SpectralExtrema(
        lambda_min=float(extremes[0]),
        lambda_max=float(extremes[-1]),
        abs_min=float(np.min(np.abs(near))),
        abs_max=float(np.max(np.abs(extremes))),
        matrix_dim=H.matrix_dim,
    )
