"""Periodic (cyclic) tridiagonal systems.

A cyclic tridiagonal matrix has the three usual bands plus the two corner
entries ``A[0, n-1]`` and ``A[n-1, 0]`` that close the ring. The solver
factors the banded part once with LAPACK (``?gttrf``) and removes the
corners with a rank-one Sherman-Morrison correction, so every subsequent
solve costs O(n).

Band convention used throughout the package, for row ``k``::

    lower[k] * x[k-1] + diag[k] * x[k] + upper[k] * x[k+1] = rhs[k]

with indices taken modulo ``n``; ``lower[0]`` and ``upper[n-1]`` are the
corner entries.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack

__all__ = ["CyclicTridiagonal", "SingularSystemError", "cyclic_matvec"]


class SingularSystemError(np.linalg.LinAlgError):
    """Raised when a cyclic system is singular to working precision."""

    def __init__(self, message: str, rcond: float = float("nan")):
        super().__init__(message)
        self.rcond = rcond


def cyclic_matvec(lower, diag, upper, x):
    """Apply a cyclic tridiagonal matrix to ``x`` (1-D or 2-D with nodes first)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return lower * np.roll(x, 1) + diag * x + upper * np.roll(x, -1)
    return (lower[:, None] * np.roll(x, 1, axis=0) + diag[:, None] * x
            + upper[:, None] * np.roll(x, -1, axis=0))


class CyclicTridiagonal:
    """Factored cyclic tridiagonal matrix, reusable across right-hand sides.

    Parameters
    ----------
    lower, diag, upper : array_like, shape (n,)
        Bands in the convention of the module docstring.
    """

    def __init__(self, lower, diag, upper):
        lower = np.array(lower, dtype=float)
        diag = np.array(diag, dtype=float)
        upper = np.array(upper, dtype=float)
        n = diag.shape[0]
        if diag.ndim != 1 or lower.shape != (n,) or upper.shape != (n,):
            raise ValueError("lower, diag and upper must be 1-D arrays of equal length")
        if n < 3:
            raise ValueError("cyclic systems need at least 3 unknowns")
        self.lower, self.diag, self.upper = lower, diag, upper
        self.n = n

        # A = B + u v^T with u = (g, 0, .., 0, upper[-1]), v = (1, 0, .., 0, lower[0]/g)
        g = -diag[0] if diag[0] != 0.0 else -1.0
        b = diag.copy()
        b[0] -= g
        b[-1] -= lower[0] * upper[-1] / g
        self._g = g

        dl, d, du, du2, ipiv, info = lapack.dgttrf(lower[1:], b, upper[:-1])
        if info != 0:
            raise SingularSystemError(
                f"tridiagonal factorization failed: U[{info - 1},{info - 1}] is exactly zero",
                rcond=0.0,
            )
        self._lu = (dl, d, du, du2, ipiv)
        anorm = np.max(np.abs(lower) + np.abs(diag) + np.abs(upper))
        rcond, _ = lapack.dgtcon(dl, d, du, du2, ipiv, anorm, norm="1")
        self.rcond_banded = float(rcond)

        u = np.zeros(n)
        u[0] = g
        u[-1] = upper[-1]
        self._z = self._banded_solve(u)
        self._vfac = lower[0] / g
        denom = 1.0 + self._z[0] + self._vfac * self._z[-1]
        if not np.isfinite(denom) or abs(denom) < 1e3 * np.finfo(float).eps:
            raise SingularSystemError(
                f"periodic corner correction is singular (1 + v.z = {denom:.3e}, "
                f"banded rcond = {self.rcond_banded:.3e})",
                rcond=self.rcond_banded,
            )
        if self.rcond_banded < np.finfo(float).eps:
            raise SingularSystemError(
                f"ill-conditioned cyclic system (banded rcond = {self.rcond_banded:.3e})",
                rcond=self.rcond_banded,
            )
        self._denom = denom

    def _banded_solve(self, rhs):
        dl, d, du, du2, ipiv = self._lu
        x, info = lapack.dgttrs(dl, d, du, du2, ipiv, rhs)
        if info != 0:
            raise SingularSystemError(f"dgttrs failed with info={info}")
        return x

    def solve(self, rhs):
        """Solve ``A x = rhs``; ``rhs`` may carry extra trailing columns."""
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.n:
            raise ValueError(f"rhs has {rhs.shape[0]} rows, expected {self.n}")
        y = self._banded_solve(rhs)
        vy = y[0] + self._vfac * y[-1]
        if y.ndim == 1:
            return y - (vy / self._denom) * self._z
        return y - np.outer(self._z, vy / self._denom)

    def matvec(self, x):
        return cyclic_matvec(self.lower, self.diag, self.upper, x)

    def to_dense(self):
        a = np.diag(self.diag)
        idx = np.arange(self.n)
        a[idx, (idx - 1) % self.n] += self.lower
        a[idx, (idx + 1) % self.n] += self.upper
        return a


class CyclicOperator:
    """Cyclic three-band linear map with a cached factorization per shift."""

    def __init__(self, lower, diag, upper, kind: str = ""):
        self.lower = np.asarray(lower, dtype=float)
        self.diag = np.asarray(diag, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.kind = kind
        self._cache: dict = {}

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    def apply(self, x):
        return cyclic_matvec(self.lower, self.diag, self.upper, x)

    __call__ = apply

    def shifted(self, shift: float, scale: float = 1.0) -> CyclicTridiagonal:
        """Factorization of ``shift * I - scale * self`` (memoized)."""
        key = (float(shift), float(scale))
        if key not in self._cache:
            self._cache[key] = CyclicTridiagonal(
                -scale * self.lower, shift - scale * self.diag, -scale * self.upper)
        return self._cache[key]

    def to_dense(self):
        return CyclicTridiagonal.to_dense(self)  # same band layout
