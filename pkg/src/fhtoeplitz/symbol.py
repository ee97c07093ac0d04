"""Fisher-Hartwig symbols f = exp(V) * prod_j omega_{alpha_j, beta_j}(z / z_j).

Each singular factor is ``(z/e^{i pi})^beta |z - 1|^{2 alpha}`` rotated to
``z_j = e^{i t_j}``, with ``alpha >= 0`` and ``beta = i * beta_im`` purely
imaginary, so the symbol is real and positive away from the ``t_j``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import fft as sfft

from . import specfun

__all__ = [
    "SymbolError",
    "CoefficientToleranceError",
    "FHSingularity",
    "AnalyticPart",
    "FHSymbol",
    "CoeffTable",
    "make_symbol",
    "eval_symbol",
    "fh_factor_coeff",
    "fh_factor_coeffs",
    "fh_factor_coeff_quadrature",
    "fourier_coeffs",
    "parse_symbol",
    "format_symbol",
]

TWO_PI = 2.0 * math.pi


class SymbolError(ValueError):
    """A symbol violates one of the admissibility conditions."""


class CoefficientToleranceError(RuntimeError):
    def __init__(self, message: str, attainable: float):
        super().__init__(message)
        self.attainable = attainable


@dataclass(frozen=True)
class FHSingularity:
    t: float
    alpha: float
    beta_im: float = 0.0

    @property
    def beta(self) -> complex:
        return 1j * self.beta_im

    @property
    def degenerate(self) -> bool:
        return self.alpha == 0.0 and self.beta_im == 0.0


@dataclass(frozen=True)
class AnalyticPart:
    """V(z) = sum_k coeffs[k] z^k with V_{-k} = conj(V_k).

    Only ``k >= 0`` entries are stored; negative ones are implied.
    """

    coeffs: Mapping[int, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean: dict[int, complex] = {}
        for k, v in dict(self.coeffs).items():
            k = int(k)
            v = complex(v)
            if k < 0:
                k, v = -k, v.conjugate()
                if k in clean and abs(clean[k] - v) > 1e-14 * max(1.0, abs(v)):
                    raise SymbolError("condition (a): V_{-k} must equal conj(V_k)")
            if k == 0 and abs(v.imag) > 0:
                raise SymbolError("condition (a): V_0 must be real")
            if v != 0:
                clean[k] = v
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    @property
    def v0(self) -> float:
        return float(self.coeffs.get(0, 0.0).real)

    @property
    def degree(self) -> int:
        return max(self.coeffs, default=0)

    def positive(self) -> np.ndarray:
        """[V_1, ..., V_K] as a complex array."""
        out = np.zeros(self.degree, dtype=complex)
        for k, v in self.coeffs.items():
            if k > 0:
                out[k - 1] = v
        return out

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        val = np.full(theta.shape, self.v0)
        for k, v in self.coeffs.items():
            if k > 0:
                val = val + 2.0 * np.real(v * np.exp(1j * k * theta))
        return val

    def v_plus(self, z: complex) -> complex:
        """V_+(z) = sum_{k >= 1} V_k z^k."""
        return complex(sum(v * z**k for k, v in self.coeffs.items() if k > 0))


@dataclass(frozen=True)
class FHSymbol:
    analytic: AnalyticPart
    singularities: tuple[FHSingularity, ...]

    @property
    def m(self) -> int:
        return len(self.singularities)

    @property
    def ts(self) -> np.ndarray:
        return np.array([s.t for s in self.singularities], dtype=float)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([s.alpha for s in self.singularities], dtype=float)

    @property
    def betas_im(self) -> np.ndarray:
        return np.array([s.beta_im for s in self.singularities], dtype=float)

    def rotated(self, x: float) -> "FHSymbol":
        sings = sorted(
            (FHSingularity((s.t + x) % TWO_PI, s.alpha, s.beta_im) for s in self.singularities),
            key=lambda s: s.t,
        )
        return make_symbol(self.analytic, sings, allow_degenerate=True)


@dataclass(frozen=True)
class CoeffTable:
    """Fourier coefficients f_k for |k| <= n_max; ``f[n_max + k] = f_k``."""

    n_max: int
    f: np.ndarray
    tol: float

    def __post_init__(self):
        self.f.setflags(write=False)

    def __getitem__(self, k: int) -> complex:
        if abs(k) > self.n_max:
            raise IndexError(k)
        return complex(self.f[self.n_max + k])

    @property
    def nonnegative(self) -> np.ndarray:
        """f_0, f_1, ..., f_{n_max}."""
        return self.f[self.n_max:]


def make_symbol(
    analytic: AnalyticPart | None = None,
    sings: Sequence[FHSingularity] = (),
    allow_degenerate: bool = False,
) -> FHSymbol:
    analytic = analytic if analytic is not None else AnalyticPart()
    sings = tuple(sings)
    prev = -math.inf
    for s in sings:
        if not (0.0 <= s.t < TWO_PI):
            raise SymbolError(f"condition (b): t = {s.t!r} not in [0, 2*pi)")
        if s.t == prev:
            raise SymbolError(f"condition (b): duplicate singularity angle t = {s.t!r}")
        if s.t < prev:
            raise SymbolError("condition (b): singularity angles must be strictly increasing")
        if not math.isfinite(s.alpha) or s.alpha < 0.0:
            raise SymbolError(f"condition (c): alpha = {s.alpha!r} must be >= 0")
        if not math.isfinite(s.beta_im):
            raise SymbolError("condition (c): beta must be finite and purely imaginary")
        if s.degenerate and not allow_degenerate:
            raise SymbolError("degenerate factor (alpha, beta) = (0, 0) needs allow_degenerate=True")
        prev = s.t
    return FHSymbol(analytic, sings)


def _wrap(x):
    """Map angles into [-pi, pi)."""
    return (np.asarray(x) + math.pi) % TWO_PI - math.pi


def eval_symbol(sym: FHSymbol, theta, side: int = 0):
    """Evaluate f(e^{i theta}).

    At a jump point (beta != 0) the symbol has two one-sided limits; pass
    ``side=+1`` or ``side=-1`` to pick one, otherwise a ``SymbolError`` is
    raised there.
    """
    theta = np.asarray(theta, dtype=float)
    logf = sym.analytic(theta)
    value_scale = np.ones(theta.shape)
    for s in sym.singularities:
        d = _wrap(theta - s.t)  # arg(z/z_j) in [-pi, pi)
        at = np.isclose(d, 0.0, rtol=0.0, atol=0.0)
        if s.beta_im != 0.0 and np.any(at):
            if side == 0:
                raise SymbolError(f"evaluation at jump t = {s.t!r} needs side=+1 or -1")
            d = np.where(at, 0.0, d)
        # (z/z_j / e^{i pi})^beta with arg in (-pi, pi]: exponent beta * i * (d - pi) for d > 0
        phase = np.where(d > 0.0, d - math.pi, d + math.pi)
        if side and np.any(at):
            phase = np.where(at, -math.pi if side > 0 else math.pi, phase)
        logf = logf - s.beta_im * phase
        if s.alpha:
            chord = 2.0 * np.abs(np.sin(0.5 * d))
            with np.errstate(divide="ignore"):
                logf = logf + 2.0 * s.alpha * np.log(chord)
    with np.errstate(under="ignore"):
        out = np.exp(logf) * value_scale
    return out if out.ndim else float(out)


def fh_factor_coeffs(alpha: float, beta_im: float, k_max: int) -> np.ndarray:
    """Fourier coefficients of omega_{alpha, beta} for k = 0..k_max.

    f_0 = Gamma(1+2a) / (Gamma(1+a+b) Gamma(1+a-b)) and the ratio
    f_{k+1}/f_k = (k - a - b)/(k + 1 + a - b); coefficients with negative
    index follow from f_{-k} = conj(f_k).
    """
    if alpha < 0:
        raise SymbolError("alpha must be >= 0")
    a = float(alpha)
    b = 1j * float(beta_im)
    out = np.empty(k_max + 1, dtype=complex)
    if beta_im == 0.0 and 2 * a < 160:
        out[0] = math.gamma(1 + 2 * a) / math.gamma(1 + a) ** 2
    else:
        log_f0 = specfun.log_gamma(1 + 2 * a) - specfun.log_gamma(1 + a + b) - specfun.log_gamma(1 + a - b)
        out[0] = np.exp(log_f0).real  # f_0 is real for a real symbol
    if k_max:
        k = np.arange(k_max, dtype=float)
        ratio = (k - a - b) / (k + 1 + a - b)
        out[1:] = out[0] * np.cumprod(ratio)
    return out


def fh_factor_coeff(alpha: float, beta_im: float, k: int) -> complex:
    """k-th Fourier coefficient of omega_{alpha, beta} (singularity at t = 0)."""
    c = fh_factor_coeffs(alpha, beta_im, abs(k))[abs(k)]
    return complex(c if k >= 0 else np.conj(c))


def fh_factor_coeff_quadrature(alpha: float, beta_im: float, k: int,
                               spec: specfun.QuadratureSpec | None = None) -> complex:
    """Slow route: integrate omega(e^{i theta}) e^{-ik theta} over (0, 2 pi)."""
    spec = spec or specfun.QuadratureSpec(abs_tol=1e-13, rel_tol=1e-13)
    hints = [(0.0, 2 * alpha), (TWO_PI, 2 * alpha)] if alpha else []

    def mag(th):
        return np.exp(-beta_im * (th - math.pi)) * (2.0 * np.abs(np.sin(0.5 * th))) ** (2 * alpha)

    # split at the half-periods of e^{-ik theta} so panels stay smooth
    if abs(k) > 2:
        hints = hints + [(j * math.pi / abs(k), 0.0) for j in range(1, 2 * abs(k))]
    re, _ = specfun.integrate_1d(lambda th: mag(th) * np.cos(k * th), 0.0, TWO_PI, hints, spec, vectorized=True)
    im, _ = specfun.integrate_1d(lambda th: -mag(th) * np.sin(k * th), 0.0, TWO_PI, hints, spec, vectorized=True)
    return complex(re, im) / TWO_PI


def _exp_analytic_coeffs(analytic: AnalyticPart, band: int) -> np.ndarray:
    """Coefficients of e^V for |k| <= band by exponentiating the power series
    e^{V_+} (recurrence k a_k = sum_j j V_j a_{k-j}) and pairing it with its
    conjugate e^{V_-}."""
    vpos = analytic.positive()
    kk = len(vpos)
    jv = np.arange(1, kk + 1) * vpos
    a = np.zeros(band + 1, dtype=complex)
    a[0] = 1.0
    # e^{V_+} coefficients decay super-exponentially: stop once a run of kk
    # consecutive terms is negligible, the rest of the table is then zero
    size = band + 1 if kk else 1
    for k in range(1, size):
        lo = max(0, k - kk)
        a[k] = np.dot(jv[: k - lo][::-1], a[lo:k]) / k
        if k >= kk and np.max(np.abs(a[k - kk + 1: k + 1])) < 1e-300:
            size = k + 1
            break
    a = a[:size]
    out = np.zeros(2 * band + 1, dtype=complex)
    # f_k = e^{V_0} sum_{j>=0} a_{k+j} conj(a_j), k >= 0
    ac = np.conj(a)
    for k in range(0, size):
        out[band + k] = np.dot(a[k:], ac[: size - k])
    out[:band] = np.conj(out[band + 1:][::-1])
    out *= math.exp(analytic.v0)
    return out


def _factor_sequence(s: FHSingularity, band: int) -> np.ndarray:
    c = fh_factor_coeffs(s.alpha, s.beta_im, band)
    full = np.concatenate([np.conj(c[:0:-1]), c])
    k = np.arange(-band, band + 1)
    if s.t:
        full = full * np.exp(-1j * k * s.t)
    return full


def _conv_truncate(x: np.ndarray, y: np.ndarray, band: int) -> np.ndarray:
    """Linear convolution of two centred sequences, truncated to |k| <= band."""
    bx = (x.size - 1) // 2
    by = (y.size - 1) // 2
    n = x.size + y.size - 1
    nfft = sfft.next_fast_len(n)
    z = sfft.ifft(sfft.fft(x, nfft) * sfft.fft(y, nfft))[:n]
    centre = bx + by
    return z[centre - band: centre + band + 1]


def _product_coeffs(sym: FHSymbol, band: int) -> np.ndarray:
    seqs = []
    if sym.analytic.coeffs:
        seqs.append(_exp_analytic_coeffs(sym.analytic, band))
    for s in sym.singularities:
        if not s.degenerate:
            seqs.append(_factor_sequence(s, band))
    if not seqs:
        out = np.zeros(2 * band + 1, dtype=complex)
        out[band] = 1.0
        return out
    acc = seqs[0]
    for seq in seqs[1:]:
        acc = _conv_truncate(acc, seq, band)
    return acc


def _exact_support(sym: FHSymbol) -> int | None:
    """Finite Fourier support of the symbol when every factor is a trig
    polynomial (integer alpha, beta = 0, no analytic part), else None."""
    if sym.analytic.coeffs:
        return None
    width = 0
    for s in sym.singularities:
        if s.degenerate:
            continue
        if s.beta_im != 0.0 or s.alpha != math.floor(s.alpha):
            return None
        width += int(s.alpha)
    return width


_MAX_BAND = 1 << 20


def fourier_coeffs(sym: FHSymbol, n_max: int, tol: float = 1e-12) -> CoeffTable:
    """Fourier coefficients f_k, |k| <= n_max, of the full product symbol.

    Per-factor closed-form sequences are convolved on a band |k| <= L and
    truncated back; L starts at max(4 n_max, 4096) and doubles until two
    successive bands agree to ``tol``.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    support = _exact_support(sym)
    if support is not None:
        band = max(n_max, support)
        f = _product_coeffs(sym, band)
        # every factor is a trigonometric polynomial: the product is exact
        f = f[band - n_max: band + n_max + 1].copy()
        f[np.abs(np.arange(-n_max, n_max + 1)) > support] = 0.0
        return _finish(f, n_max, tol)

    nonsmooth = [s for s in sym.singularities if not s.degenerate]
    if len(nonsmooth) <= 1 and not sym.analytic.coeffs:
        band = n_max
        f = _product_coeffs(sym, band)
        return _finish(f, n_max, tol)

    band = max(4 * n_max, 4096)
    prev = _product_coeffs(sym, band)[band - n_max: band + n_max + 1]
    while True:
        band *= 2
        cur = _product_coeffs(sym, band)[band - n_max: band + n_max + 1]
        diff = float(np.max(np.abs(cur - prev)))
        if diff <= tol:
            return _finish(cur, n_max, tol)
        if band >= _MAX_BAND:
            raise CoefficientToleranceError(
                f"coefficient tolerance {tol:g} not reached; attainable bound ~{diff:.3g}", diff
            )
        prev = cur


def _finish(f: np.ndarray, n_max: int, tol: float) -> CoeffTable:
    f = np.array(f, dtype=complex)
    # enforce Hermitian symmetry f_{-k} = conj(f_k) and a real f_0
    pos = 0.5 * (f[n_max:] + np.conj(f[n_max::-1]))
    pos[0] = pos[0].real
    f = np.concatenate([np.conj(pos[:0:-1]), pos])
    if not f[n_max].real > 0.0:
        raise SymbolError("f_0 must be positive")
    return CoeffTable(n_max=n_max, f=f, tol=tol)


# ---------------------------------------------------------------------------
# text form:  "V: 1=0.3; 2=0.1+0.2j  sing: 0,0.5,0; 3.0,1,0.2"

def parse_symbol(text: str, allow_degenerate: bool = False) -> FHSymbol:
    text = text.strip()
    coeffs: dict[int, complex] = {}
    sings: list[FHSingularity] = []
    v_part, s_part = "", ""
    low = text
    if "sing:" in low:
        head, s_part = low.split("sing:", 1)
    else:
        head = low
    head = head.strip()
    if head:
        if not head.startswith("V:"):
            raise SymbolError(f"cannot parse symbol literal {text!r}")
        v_part = head[2:]
    for item in filter(None, (p.strip() for p in v_part.split(";"))):
        try:
            k, c = item.split("=")
            coeffs[int(k)] = complex(c.strip().replace("i", "j"))
        except ValueError as exc:
            raise SymbolError(f"bad V entry {item!r}") from exc
    for item in filter(None, (p.strip() for p in s_part.split(";"))):
        try:
            fields = [float(x) for x in item.split(",")]
        except ValueError as exc:
            raise SymbolError(f"bad singularity entry {item!r}") from exc
        if len(fields) == 2:
            fields.append(0.0)
        if len(fields) != 3:
            raise SymbolError(f"singularity entry {item!r} needs t,alpha[,beta_im]")
        sings.append(FHSingularity(*fields))
    return make_symbol(AnalyticPart(coeffs), sings, allow_degenerate=allow_degenerate)


def format_symbol(sym: FHSymbol) -> str:
    parts = []
    if sym.analytic.coeffs:
        parts.append("V: " + "; ".join(f"{k}={v!r}" for k, v in sym.analytic.coeffs.items()))
    if sym.singularities:
        parts.append("sing: " + "; ".join(f"{s.t!r},{s.alpha!r},{s.beta_im!r}" for s in sym.singularities))
    return " ".join(parts)
