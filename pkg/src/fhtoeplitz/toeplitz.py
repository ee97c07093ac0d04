"""Exact log-determinants of Hermitian Toeplitz matrices and the chi_j ladder.

The Levinson recursion yields the prediction-error variances
E_j = D_{j+1}/D_j, which are exactly chi_j^{-2} for the orthonormal
polynomials of the symbol; log D_n is their log-sum.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.linalg import lapack

from . import kernels
from .symbol import CoeffTable

__all__ = [
    "Method",
    "DetResult",
    "BreakdownError",
    "NotPositiveDefiniteError",
    "logdet_levinson",
    "logdet_reference",
    "chi_tail",
    "toeplitz_matrix",
    "symbol_logdet",
]

# prediction-error threshold below which the extended-precision kernel is used
EXTENDED_THRESHOLD = 1e-10
REFERENCE_MAX_N = 2048


class Method(str, enum.Enum):
    LEVINSON = "levinson"
    CHOLESKY_REFERENCE = "cholesky-reference"


class BreakdownError(ArithmeticError):
    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class NotPositiveDefiniteError(ArithmeticError):
    def __init__(self, message: str, pivot: int):
        super().__init__(message)
        self.pivot = pivot


@dataclass(frozen=True)
class DetResult:
    n: int
    log_det: float
    log_chi: np.ndarray
    method: Method
    min_step: float
    extended: bool = False

    @property
    def chi(self) -> np.ndarray:
        return np.exp(self.log_chi)


def _check_coverage(coeffs: CoeffTable, n: int) -> None:
    if n < 1:
        raise ValueError("n must be >= 1")
    if coeffs.n_max < n - 1:
        raise ValueError(f"coefficient table covers |k| <= {coeffs.n_max}, need {n - 1}")


def logdet_levinson(coeffs: CoeffTable, n: int, backend: str | None = None) -> DetResult:
    """log D_n and log chi_0..log chi_{n-1} in O(n^2)."""
    _check_coverage(coeffs, n)
    f = np.ascontiguousarray(coeffs.nonnegative[:n])
    log_e, _ = kernels.levinson(f, n, backend=backend)
    extended = False
    if log_e.size < n or (log_e.size and math.exp(float(np.min(log_e))) < EXTENDED_THRESHOLD):
        log_e, _ = kernels.levinson(f, n, extended=True)
        extended = True
        if log_e.size < n:
            raise BreakdownError(f"prediction error not positive at step {log_e.size}", log_e.size)
    min_step = math.exp(float(np.min(log_e)))
    if min_step <= 1e-300:
        j = int(np.argmin(log_e))
        raise BreakdownError(f"prediction error {min_step:.3g} at step {j}", j)
    # exact summation of the ladder
    log_det = math.fsum(float(x) for x in log_e)
    return DetResult(
        n=n,
        log_det=log_det,
        log_chi=-0.5 * np.asarray(log_e, dtype=float),
        method=Method.LEVINSON,
        min_step=min_step,
        extended=extended,
    )


def toeplitz_matrix(coeffs: CoeffTable, n: int) -> np.ndarray:
    """Dense T[j, k] = f_{j-k}."""
    _check_coverage(coeffs, n)
    col = np.asarray(coeffs.nonnegative[:n], dtype=complex)
    return linalg.toeplitz(col, np.conj(col))


def logdet_reference(coeffs: CoeffTable, n: int) -> float:
    """log D_n from a dense Cholesky factorization (LAPACK zpotrf)."""
    if n > REFERENCE_MAX_N:
        raise ValueError(f"reference determinant limited to n <= {REFERENCE_MAX_N}")
    t = toeplitz_matrix(coeffs, n)
    c, info = lapack.zpotrf(t, lower=1)
    if info > 0:
        raise NotPositiveDefiniteError(f"leading minor {info} not positive definite", info - 1)
    if info < 0:
        raise ValueError(f"zpotrf argument error {info}")
    return 2.0 * math.fsum(np.log(np.real(np.diag(c))))


def chi_tail(result: DetResult, n: int) -> float:
    """log chi_{n-1} from a ladder computed to at least size n."""
    if not 1 <= n <= result.n:
        raise IndexError(f"n = {n} outside 1..{result.n}")
    return float(result.log_chi[n - 1])


def symbol_logdet(sym, n: int, tol: float = 1e-12, backend: str | None = None) -> DetResult:
    """Convenience: coefficients of ``sym`` followed by :func:`logdet_levinson`."""
    from .symbol import fourier_coeffs

    return logdet_levinson(fourier_coeffs(sym, max(n - 1, 1), tol), n, backend=backend)
