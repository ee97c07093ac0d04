"""NumPy implementation of the Hermitian Levinson recursion.

Used when the compiled kernel is unavailable, and for the extended
precision path (``dtype=np.clongdouble``).
"""
import numpy as np


def levinson(f, n, dtype=np.complex128):
    """Prediction-error recursion for the Hermitian Toeplitz matrix
    T[j, k] = f[j - k], f[-k] = conj(f[k]).

    ``f`` holds f_0..f_{n-1}.  Returns ``(log_e, refl)`` where ``log_e[j]``
    is the log of the j-th prediction-error variance (so that
    log det T_n = sum(log_e)) and ``refl[j-1]`` the j-th reflection
    coefficient.  A nonpositive variance stops the recursion early; the
    caller detects it through ``len(log_e) < n``.
    """
    f = np.asarray(f, dtype=dtype)
    real = np.longdouble if dtype == np.clongdouble else np.float64
    log_e = np.empty(n, dtype=real)
    refl = np.zeros(max(n - 1, 0), dtype=dtype)
    e = real(f[0].real)
    if not e > 0:
        return log_e[:0], refl
    log_e[0] = np.log(e)
    a = np.zeros(n, dtype=dtype)
    a[0] = 1.0
    for j in range(1, n):
        acc = np.dot(a[:j], f[j:0:-1])
        k = -acc / e
        refl[j - 1] = k
        a[1:j + 1] = a[1:j + 1] + k * np.conj(a[j - 1::-1])
        step = real(1.0) - real(k.real) ** 2 - real(k.imag) ** 2
        if not step > 0:
            return log_e[:j], refl
        e = e * step
        log_e[j] = log_e[j - 1] + np.log1p(-(real(k.real) ** 2 + real(k.imag) ** 2))
    return log_e, refl


def levinson_batch(f):
    """Vectorised recursion over a batch: ``f`` has shape (B, n) holding
    f_0..f_{n-1} per row.  Returns log_e of shape (B, n); rows that lose
    positivity get NaN from the failing step on."""
    f = np.asarray(f, dtype=np.complex128)
    b, n = f.shape
    log_e = np.full((b, n), np.nan)
    e = f[:, 0].real.copy()
    ok = e > 0
    log_e[ok, 0] = np.log(e[ok])
    a = np.zeros((b, n), dtype=np.complex128)
    a[:, 0] = 1.0
    for j in range(1, n):
        acc = np.einsum("bi,bi->b", a[:, :j], f[:, j:0:-1])
        k = -acc / e
        a[:, 1:j + 1] = a[:, 1:j + 1] + k[:, None] * np.conj(a[:, j - 1::-1])
        mag2 = k.real ** 2 + k.imag ** 2
        ok &= mag2 < 1.0
        e = e * (1.0 - mag2)
        log_e[:, j] = np.where(ok, log_e[:, j - 1] + np.log1p(-np.minimum(mag2, 0.5 + 0.5 * mag2)), np.nan)
    return log_e
