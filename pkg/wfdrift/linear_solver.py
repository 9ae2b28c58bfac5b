"""
Tridiagonal matrix algorithm for the implicit Euler systems, plus a dense
partial-pivoting solve used as an oracle.

Reference:
    https://en.wikipedia.org/wiki/Tridiagonal_matrix_algorithm
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
from numba import njit

from wfdrift.config import Config
from wfdrift.errors import SingularSystemError

__all__ = [
    "TridiagonalSystem",
    "solve_tridiagonal",
    "solve_dense",
    "safe_without_pivoting",
]

logger = logging.getLogger(__name__)


def _vector(values) -> np.ndarray:
    values = np.ascontiguousarray(values, dtype=np.float64)
    if values.ndim != 1:
        raise ValueError("Tridiagonal coefficients must be vectors")
    return values


@dataclass(frozen=True, eq=False)
class TridiagonalSystem:
    """A x = rhs with A = tri(sub, diag, sup).

    Row i reads sub[i-1] x[i-1] + diag[i] x[i] + sup[i] x[i+1].
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        for name in ("sub", "diag", "sup", "rhs"):
            object.__setattr__(self, name, _vector(getattr(self, name)))

        n = len(self.diag)
        if n == 0:
            raise ValueError("Empty tridiagonal system")
        if len(self.sub) != n - 1 or len(self.sup) != n - 1:
            raise ValueError(
                f"Off-diagonals must have length {n - 1}, "
                f"got {len(self.sub)} and {len(self.sup)}"
            )
        if len(self.rhs) != n:
            raise ValueError(f"Right-hand side must have length {n}, got {len(self.rhs)}")

    @property
    def n(self) -> int:
        return len(self.diag)

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        y = self.diag * x
        y[:-1] += self.sup * x[1:]
        y[1:] += self.sub * x[:-1]
        return y

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sup, 1) + np.diag(self.sub, -1)

    def residual(self, x) -> float:
        return float(np.max(np.abs(self.matvec(x) - self.rhs)))


@njit(cache=True, nogil=True)
def _thomas(sub, diag, sup, rhs, out, scratch, tiny, failed_pivot):
    n = diag.shape[0]

    pivot = diag[0]
    if abs(pivot) < tiny:
        failed_pivot[0] = pivot
        return 0
    if n > 1:
        scratch[0] = sup[0] / pivot
    out[0] = rhs[0] / pivot

    # forward elimination
    for i in range(1, n):
        pivot = diag[i] - sub[i - 1] * scratch[i - 1]
        if abs(pivot) < tiny:
            failed_pivot[0] = pivot
            return i
        if i < n - 1:
            scratch[i] = sup[i] / pivot
        out[i] = (rhs[i] - sub[i - 1] * out[i - 1]) / pivot

    # back substitution
    for i in range(n - 2, -1, -1):
        out[i] -= scratch[i] * out[i + 1]

    return -1


def solve_tridiagonal(system: TridiagonalSystem) -> np.ndarray:
    """Thomas algorithm, no pivoting. O(n) per solve."""
    n = system.n
    out = np.empty(n)
    scratch = np.empty(max(n - 1, 1))
    failed_pivot = np.zeros(1)

    row = _thomas(
        system.sub,
        system.diag,
        system.sup,
        system.rhs,
        out,
        scratch,
        Config.Solver.PIVOT_TOLERANCE,
        failed_pivot,
    )
    if row >= 0:
        raise SingularSystemError(int(row), float(failed_pivot[0]))
    return out


def solve_dense(matrix, rhs) -> np.ndarray:
    """Gaussian elimination with partial pivoting (LAPACK getrf/getrs)."""
    matrix = np.asarray(matrix, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"Matrix must be square, got shape {matrix.shape}")
    if rhs.shape[0] != matrix.shape[0]:
        raise ValueError("Right-hand side does not match the matrix size")
    if matrix.shape[0] > Config.Solver.DENSE_MAX_SIZE:
        logger.warning(
            "Dense solve of size %d exceeds the oracle size %d",
            matrix.shape[0],
            Config.Solver.DENSE_MAX_SIZE,
        )

    with np.errstate(divide="ignore", invalid="ignore"):
        lu, piv = scipy.linalg.lu_factor(matrix, check_finite=True)
    pivots = np.abs(np.diag(lu))
    scale = max(float(np.max(np.abs(matrix))), 1.0)
    bad = np.flatnonzero(pivots <= np.finfo(np.float64).eps * scale * matrix.shape[0])
    if bad.size:
        raise SingularSystemError(int(bad[0]), float(lu[bad[0], bad[0]]))
    return scipy.linalg.lu_solve((lu, piv), rhs)


def safe_without_pivoting(
    system: TridiagonalSystem, weights: Optional[np.ndarray] = None
) -> bool:
    """True when elimination without pivoting is backward stable.

    Accepts strict row diagonal dominance, or a nonsingular M-matrix
    certificate: nonpositive off-diagonals and weights^T A > 0 for a
    positive weight vector.
    """
    off = np.zeros(system.n)
    off[1:] += np.abs(system.sub)
    off[:-1] += np.abs(system.sup)
    if np.all(system.diag > off):
        return True

    if weights is None:
        return False
    weights = np.asarray(weights, dtype=np.float64)
    if np.any(weights <= 0) or np.any(system.sub > 0) or np.any(system.sup > 0):
        return False

    column_sums = weights * system.diag
    column_sums[:-1] += weights[1:] * system.sub
    column_sums[1:] += weights[:-1] * system.sup
    return bool(np.all(column_sums > 0))
