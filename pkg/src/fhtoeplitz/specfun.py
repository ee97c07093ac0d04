"""Complex special functions and quadrature primitives.

``log_gamma`` wraps :func:`scipy.special.loggamma`, which uses the branch
obtained by analytic continuation from the positive real axis (cut along the
negative real axis).  ``log_barnes_g`` uses the same convention, so that

    log_barnes_g(z + 1) == log_gamma(z) + log_barnes_g(z)

holds without 2*pi*i jumps everywhere off the cut.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import special

__all__ = [
    "SpecialFunctionError",
    "PoleError",
    "QuadratureError",
    "Scheme",
    "QuadratureSpec",
    "log_gamma",
    "rgamma",
    "log_barnes_g",
    "barnes_g",
    "integrate_1d",
    "gauss_legendre",
]

# zeta'(-1) = 1/12 - log(Glaisher's constant)
ZETA_PRIME_M1 = -0.16542114370045092921391966024278
LOG_2PI = math.log(2.0 * math.pi)

# Bernoulli numbers B_4, B_6, ..., B_22
_BERNOULLI = [
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
]
_G_SHIFT_RADIUS = 14.0
_MAX_ABS_ARG = 1.0e6
_EXACT_INT_MAX = 150


class SpecialFunctionError(ValueError):
    pass


class PoleError(SpecialFunctionError):
    """Argument is a pole of Gamma or a zero of Barnes G."""


class QuadratureError(RuntimeError):
    """Quadrature failed to converge; ``partial`` holds the best estimate."""

    def __init__(self, message: str, partial: float, err_est: float):
        super().__init__(message)
        self.partial = partial
        self.err_est = err_est


def _is_nonpositive_integer(z: complex) -> bool:
    return z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real)


def _check_arg(z: complex) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise SpecialFunctionError(f"non-finite argument {z!r}")
    if abs(z) > _MAX_ABS_ARG:
        raise OverflowError(f"|z| = {abs(z):g} outside supported range")
    return z


def log_gamma(z: complex) -> complex:
    """Principal-branch log Gamma(z).

    Raises :class:`PoleError` at nonpositive integers.
    """
    z = _check_arg(z)
    if _is_nonpositive_integer(z):
        raise PoleError(f"Gamma has a pole at {z.real:g}")
    if z.imag == 0.0 and z.real > 0.0:
        # real axis: libm lgamma is exact at the integer anchors
        return complex(math.lgamma(z.real), 0.0)
    val = complex(special.loggamma(z))
    if not (math.isfinite(val.real) and math.isfinite(val.imag)):
        raise SpecialFunctionError(f"log_gamma({z!r}) produced {val!r}")
    return val


def rgamma(z: complex) -> complex:
    """1/Gamma(z), equal to zero at the poles of Gamma."""
    z = _check_arg(z)
    if _is_nonpositive_integer(z):
        return 0j
    return complex(np.exp(-log_gamma(z)))


def _log_g_asymptotic(w: complex) -> complex:
    # log G(w + 1) for large |w|, Re w > 0
    logw = np.log(w)
    w2 = w * w
    s = 0.5 * w2 * logw - 0.75 * w2 + 0.5 * w * LOG_2PI - logw / 12.0 + ZETA_PRIME_M1
    inv_w2 = 1.0 / w2
    p = inv_w2
    for k, b in enumerate(_BERNOULLI, start=1):
        s += b / (4.0 * k * (k + 1)) * p
        p *= inv_w2
    return complex(s)


def _superfactorial(k: int) -> int:
    out, fact = 1, 1
    for j in range(1, k + 1):
        fact *= j
        out *= fact
    return out


def log_barnes_g(z: complex) -> complex:
    """log G(z) for the Barnes G-function.

    Uses the large-argument expansion of log G(w + 1) after shifting ``z``
    upward by the functional equation G(z + 1) = Gamma(z) G(z).
    """
    z = _check_arg(z)
    if _is_nonpositive_integer(z):
        raise PoleError(f"Barnes G vanishes at {z.real:g}")
    if z.imag == 0.0 and z.real == math.floor(z.real) and z.real <= _EXACT_INT_MAX:
        # G(k) = 0! 1! ... (k-2)! as an exact integer
        return complex(math.log(_superfactorial(int(z.real) - 2)), 0.0)
    # shift so that w = z + N - 1 lies in the asymptotic region
    n_shift = 0
    w = z - 1.0
    while abs(w) < _G_SHIFT_RADIUS or w.real < 0.5 * abs(w.imag):
        w += 1.0
        n_shift += 1
    val = _log_g_asymptotic(w)
    if n_shift:
        ks = z + np.arange(n_shift)
        val -= complex(np.sum(special.loggamma(ks)))
    if z.imag == 0.0 and z.real > 0.0:
        val = complex(val.real, 0.0)
    return val


def barnes_g(z: complex) -> complex:
    """G(z); zero at nonpositive integers, exact at small positive integers."""
    zc = complex(z)
    if zc.imag == 0.0 and zc.real == math.floor(zc.real) and 1.0 <= zc.real <= _EXACT_INT_MAX:
        return complex(float(_superfactorial(int(zc.real) - 2)))
    try:
        return complex(np.exp(log_barnes_g(z)))
    except PoleError:
        return 0j


# ---------------------------------------------------------------------------
# quadrature

class Scheme(str, enum.Enum):
    ADAPTIVE_PANEL = "adaptive-panel"
    TANH_SINH = "tanh-sinh"
    GAUSS_LEGENDRE_COMPOSITE = "gauss-legendre-composite"


@dataclass(frozen=True)
class QuadratureSpec:
    scheme: Scheme = Scheme.ADAPTIVE_PANEL
    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_subdivisions: int = 2000
    order: int = 20

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.order < 2:
            raise ValueError("order must be >= 2")


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1] (cached)."""
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def _call(f, x: np.ndarray, vectorized: bool) -> np.ndarray:
    if vectorized:
        y = np.asarray(f(x), dtype=float)
        if y.shape != x.shape:
            y = np.broadcast_to(y, x.shape).astype(float)
    else:
        y = np.fromiter((f(float(xi)) for xi in x), dtype=float, count=x.size)
    if not np.all(np.isfinite(y)):
        raise QuadratureError("integrand returned non-finite values", math.nan, math.inf)
    return y


def _gl_panel(f, a: float, b: float, order: int, vectorized: bool) -> float:
    x, w = gauss_legendre(order)
    half = 0.5 * (b - a)
    return half * float(np.dot(w, _call(f, a + half * (x + 1.0), vectorized)))


def _tanh_sinh_panel(f, a, b, sing_a, sing_b, tol, vectorized, max_level=12):
    """Tanh-sinh on [a, b] with step halving; nodes near a singular endpoint
    are placed at their exact (tiny) distance from it."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    # truncate once the endpoint distance is below ~1e-300 or the weight is negligible
    t_max = 6.5 if (sing_a is not None or sing_b is not None) else 3.5

    def nodes(h, offset):
        t = np.arange(offset, t_max + 1e-12, h if offset == 0 else 2 * h)
        if offset == 0:
            t = t[1:]
        u = 0.5 * math.pi * np.sinh(t)
        with np.errstate(over="ignore"):
            # distance from the endpoint in units of half, 1 - tanh(u)
            e = np.exp(-2.0 * u)
            d = 2.0 * e / (1.0 + e)
            wt = math.pi * np.cosh(t) * e / (1.0 + e) ** 2 * 2.0
        keep = d > 0.0
        return d[keep], wt[keep]

    def partial_sum(h, offset):
        d, wt = nodes(h, offset)
        xr = b - half * d
        xl = a + half * d
        s = 0.0
        if d.size:
            s = float(np.dot(wt, _call(f, xr, vectorized)) + np.dot(wt, _call(f, xl, vectorized)))
        return s

    h = 0.5
    total = 0.5 * math.pi * float(_call(f, np.array([mid]), vectorized)[0]) + partial_sum(h, 0)
    estimate = h * total * half
    for _ in range(max_level):
        h *= 0.5
        total += partial_sum(h, h)
        new = h * total * half
        err = abs(new - estimate)
        estimate = new
        if err <= tol(new):
            return new, err
    return estimate, err


def integrate_1d(
    f: Callable,
    a: float,
    b: float,
    hints: Iterable[tuple[float, float]] = (),
    spec: QuadratureSpec | None = None,
    vectorized: bool = False,
) -> tuple[float, float]:
    """Integrate a real function over [a, b].

    ``hints`` is a list of ``(location, exponent)`` pairs.  The interval is
    split at every hinted location inside [a, b]; a nonzero exponent marks
    an endpoint singularity |x - location|**exponent, which must exceed -1.
    Panels touching a singular point are integrated by tanh-sinh, the rest
    by adaptive Gauss-Legendre bisection (scheme ``adaptive-panel``).

    Returns ``(value, err_est)``; raises :class:`QuadratureError` when
    ``max_subdivisions`` is exhausted.
    """
    spec = spec or QuadratureSpec()
    a, b = float(a), float(b)
    if a == b:
        return 0.0, 0.0
    if b < a:
        v, e = integrate_1d(f, b, a, hints, spec, vectorized)
        return -v, e

    singular: dict[float, float] = {}
    cuts = {a, b}
    for loc, expo in hints:
        loc, expo = float(loc), float(expo)
        if expo <= -1.0:
            raise ValueError(f"singular exponent {expo} is not integrable")
        if a <= loc <= b:
            cuts.add(loc)
            if expo != 0.0:
                singular[loc] = expo
    pts = sorted(cuts)
    panels = list(zip(pts[:-1], pts[1:]))

    def tol_for(scale: float, share: float):
        # absolute tolerance is shared out by length; relative tolerance is
        # per panel, which bounds the total relative error of one-signed f
        return lambda v: max(spec.abs_tol * share, spec.rel_tol * abs(v))

    if spec.scheme is Scheme.GAUSS_LEGENDRE_COMPOSITE:
        return _composite_gl(f, panels, spec, vectorized)

    value = 0.0
    err = 0.0
    budget = spec.max_subdivisions
    for lo, hi in panels:
        share = (hi - lo) / (b - a)
        sa = singular.get(lo)
        sb = singular.get(hi)
        if spec.scheme is Scheme.TANH_SINH or sa is not None or sb is not None:
            v, e = _tanh_sinh_panel(f, lo, hi, sa, sb, tol_for(1.0, share), vectorized)
            if not e <= max(spec.abs_tol * share, spec.rel_tol * abs(v)) * 10:
                # fall back to splitting the panel in half once
                m = 0.5 * (lo + hi)
                v1, e1 = _tanh_sinh_panel(f, lo, m, sa, None, tol_for(1.0, share / 2), vectorized)
                v2, e2 = _tanh_sinh_panel(f, m, hi, None, sb, tol_for(1.0, share / 2), vectorized)
                v, e = v1 + v2, e1 + e2
        else:
            v, e, used = _adaptive_gl(f, lo, hi, spec, share, budget, vectorized)
            budget -= used
        value += v
        err += e
        if budget <= 0:
            raise QuadratureError("max_subdivisions exhausted", value, err)
    if err > max(spec.abs_tol, spec.rel_tol * abs(value)) * 10:
        raise QuadratureError(f"quadrature did not converge (err_est={err:.3g})", value, err)
    return value, err


def _adaptive_gl(f, a, b, spec, share, budget, vectorized):
    order = spec.order
    stack = [(a, b, _gl_panel(f, a, b, order, vectorized))]
    total = 0.0
    err = 0.0
    used = 0
    while stack:
        lo, hi, coarse = stack.pop()
        m = 0.5 * (lo + hi)
        left = _gl_panel(f, lo, m, order, vectorized)
        right = _gl_panel(f, m, hi, order, vectorized)
        fine = left + right
        diff = abs(fine - coarse)
        used += 1
        loc_share = share * (hi - lo) / (b - a)
        if diff <= max(spec.abs_tol * loc_share, spec.rel_tol * abs(fine)) or hi - lo < 1e-13 * max(1.0, abs(lo)):
            total += fine
            err += diff
        elif used >= budget:
            raise QuadratureError("max_subdivisions exhausted", total + fine, err + diff)
        else:
            stack.append((m, hi, right))
            stack.append((lo, m, left))
    return total, err, used


def _composite_gl(f, panels, spec, vectorized):
    """Fixed composite rule: each panel cut into ``max_subdivisions`` pieces."""
    nsub = spec.max_subdivisions
    value = 0.0
    for lo, hi in panels:
        edges = np.linspace(lo, hi, nsub + 1)
        x, w = gauss_legendre(spec.order)
        half = 0.5 * np.diff(edges)
        xs = (edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
        ws = (half[:, None] * w[None, :]).ravel()
        value += float(np.dot(ws, _call(f, xs, vectorized)))
    return value, 0.0


def composite_nodes(breaks: Sequence[float], order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on consecutive panels between ``breaks``."""
    edges = np.asarray(breaks, dtype=float)
    x, w = gauss_legendre(order)
    half = 0.5 * np.diff(edges)
    xs = (edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
    ws = (half[:, None] * w[None, :]).ravel()
    return xs, ws
