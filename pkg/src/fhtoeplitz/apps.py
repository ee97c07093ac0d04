"""Applications of the determinant machinery.

* Selberg-type integrals I_eps(m, alpha) of the regularised log-correlated
  kernel, estimated by importance-sampled Monte Carlo, plus scaling fits in
  eps for the supercritical and critical regimes.
* Moments E[X_n(alpha)^m] of the CUE characteristic-polynomial mass, both
  exactly (an m-fold angular integral of Toeplitz determinants) and by
  Metropolis sampling of the eigenangles.
* Zero-momentum densities of hard-core bosons on the circle, their n -> inf
  limit constants, and an independent brute-force lattice computation.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import fft as sfft

from . import specfun
from .symbol import FHSingularity, fourier_coeffs, make_symbol, TWO_PI
from .toeplitz import logdet_levinson
from ._levinson_py import levinson_batch

__all__ = [
    "MCEstimate",
    "RegimeTag",
    "ScalingFit",
    "DivergentIntegralError",
    "RegimeMismatchError",
    "NonMixingError",
    "regime_of",
    "child_seed",
    "selberg_I0",
    "I_eps_mc",
    "scaling_fit",
    "fit_eps_scaling",
    "xn_moment_exact",
    "fk_prediction",
    "fk_constant",
    "cue_mc_moment",
    "pi_kn_zero",
    "n0_limit_constant",
    "n0_limit_constant_torus",
    "boson_lattice_pi",
    "LatticeNormalizationError",
]

CRITICAL_RTOL = 1e-9


class DivergentIntegralError(ValueError):
    pass


class RegimeMismatchError(ValueError):
    pass


class NonMixingError(RuntimeError):
    def __init__(self, message: str, r_hat: float):
        super().__init__(message)
        self.r_hat = r_hat


class RegimeTag(str, enum.Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class MCEstimate:
    value: float
    std_err: float
    samples: int
    seed: int | None

    def z_score(self, exact: float) -> float:
        if self.std_err == 0.0:
            return 0.0 if self.value == exact else math.inf
        return (self.value - exact) / self.std_err


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    slope_err: float
    r_squared: float
    regime: RegimeTag
    expected_slope: float

    def __iter__(self):
        # unpacks as (slope, slope_err)
        return iter((self.slope, self.slope_err))


def regime_of(m: int, alpha: float) -> RegimeTag:
    x = m * alpha * alpha
    if math.isclose(x, 1.0, rel_tol=CRITICAL_RTOL):
        return RegimeTag.CRITICAL
    return RegimeTag.SUBCRITICAL if x < 1.0 else RegimeTag.SUPERCRITICAL


def _check_m_alpha(m: int, alpha: float) -> None:
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ValueError("m must be a positive integer")
    if not (alpha >= 0 and math.isfinite(alpha)):
        raise ValueError("alpha must be finite and >= 0")


# ---------------------------------------------------------------- Selberg


def selberg_I0(m: int, alpha: float) -> float:
    """(2 pi)^m Gamma(1 - m alpha^2) / Gamma(1 - alpha^2)^m."""
    _check_m_alpha(m, alpha)
    a2 = alpha * alpha
    if m * a2 >= 1.0:
        raise DivergentIntegralError(f"I_0 diverges for m alpha^2 = {m * a2:g} >= 1")
    lg = specfun.log_gamma(1.0 - m * a2) - m * specfun.log_gamma(1.0 - a2)
    return math.exp(m * math.log(TWO_PI) + lg.real)


def child_seed(seed: int | None, index: int) -> int:
    """Independent 32-bit seed for sub-run ``index`` of a run seeded by ``seed``."""
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1)[0])


def _rng(seed: int | None) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def _proposal_shape(alpha: float) -> float:
    return min(1.0, max(0.1, 1.0 - 2.0 * alpha * alpha))


def _log_kernel_sorted(gaps: np.ndarray, alpha: float, eps: float) -> np.ndarray:
    """-2 alpha^2 sum_{j<k} log(|sin((t_k - t_j)/2)| + eps) for points whose
    consecutive circular spacings (fractions of 2 pi) are the rows of ``gaps``.

    Each arc is the direct sum of the spacings it covers, taken on the shorter
    side, so tiny separations keep full relative precision.
    """
    n_s, m = gaps.shape
    acc = np.zeros(n_s)
    for j in range(m):
        for k in range(j + 1, m):
            inner = gaps[:, j:k].sum(axis=1)
            outer = gaps[:, k:].sum(axis=1) + gaps[:, :j].sum(axis=1)
            d = np.minimum(inner, outer)
            acc += np.log(np.sin(math.pi * d) + eps)
    return -2.0 * alpha * alpha * acc


def I_eps_mc(
    m: int,
    alpha: float,
    eps: float,
    samples: int,
    seed: int | None,
    method: str = "dirichlet",
    kernel: str = "sine",
) -> MCEstimate:
    """Monte Carlo estimate of I_eps(m, alpha).

    ``kernel="sine"`` integrates prod (sin|dt/2| + eps)^(-2 alpha^2);
    ``kernel="chord"`` integrates prod (|e^{i t_j} - e^{i t_k}| + eps)^(-2 alpha^2),
    which at eps = 0 is smaller by exactly 2^(m(m-1) alpha^2) and is the form
    whose eps = 0 value is :func:`selberg_I0`.

    The integrand depends only on the spacings between the points, so one
    point is pinned and the m spacings (which sum to 2 pi) are drawn from a
    symmetric Dirichlet law whose small-gap density u^(a-1) tames the
    |t_j - t_k|^(-2 alpha^2) singularity.  ``method="uniform"`` samples the
    torus directly instead (unbiased, but with heavy tails near criticality).
    """
    _check_m_alpha(m, alpha)
    if not eps >= 0:
        raise ValueError("eps must be >= 0")
    if samples < 1000:
        raise ValueError("samples must be >= 1000")
    if eps == 0 and m > 1 and m * alpha * alpha >= 1.0:
        raise DivergentIntegralError(f"I_0 diverges for m alpha^2 = {m * alpha * alpha:g} >= 1")
    if m == 1:
        return MCEstimate(TWO_PI, 0.0, samples, seed)
    if kernel not in ("sine", "chord"):
        raise ValueError(f"unknown kernel {kernel!r}")
    rng = _rng(seed)
    scale = m * math.log(TWO_PI)
    if kernel == "chord":
        # (2 s + eps)^p = 2^p (s + eps/2)^p
        scale -= alpha * alpha * m * (m - 1) * math.log(2.0)
        eps = 0.5 * eps
    if method == "dirichlet":
        a = _proposal_shape(alpha)
        gaps = rng.dirichlet(np.full(m, a), size=samples)
        gaps = np.maximum(gaps, np.finfo(float).tiny)
        log_w = (
            math.lgamma(m)
            + m * math.lgamma(a)
            - math.lgamma(m * a)
            + (1.0 - a) * np.log(gaps).sum(axis=1)
        )
        vals = np.exp(_log_kernel_sorted(gaps, alpha, eps) + log_w + scale)
    elif method == "uniform":
        pts = np.sort(rng.random((samples, m - 1)), axis=1)
        edges = np.concatenate([np.zeros((samples, 1)), pts, np.ones((samples, 1))], axis=1)
        vals = np.exp(_log_kernel_sorted(np.diff(edges, axis=1), alpha, eps) + scale)
    else:
        raise ValueError(f"unknown method {method!r}")
    mean = math.fsum(vals) / samples
    se = float(np.std(vals, ddof=1)) / math.sqrt(samples)
    return MCEstimate(mean, se, samples, seed)


def scaling_fit(
    m: int,
    alpha: float,
    eps_grid: Sequence[float],
    samples: int,
    seed: int | None,
    expect: RegimeTag | str | None = None,
) -> ScalingFit:
    """Fit the eps-dependence of I_eps.

    Supercritical: slope of log I_eps against log eps, expected
    (m - 1)(1 - m alpha^2).
    Critical: slope of I_eps against log(1/eps) (expected a positive constant),
    with the coefficient of determination of that linear model.
    """
    regime = regime_of(m, alpha)
    if expect is not None and RegimeTag(expect) is not regime:
        raise RegimeMismatchError(f"(m, alpha) = ({m}, {alpha}) is {regime.value}, not {RegimeTag(expect).value}")
    if regime is RegimeTag.SUBCRITICAL:
        raise RegimeMismatchError("I_eps has a finite limit in the subcritical regime; nothing to fit")
    eps = np.asarray(sorted(eps_grid), dtype=float)
    if eps.size < 3 or np.any(eps <= 0):
        raise ValueError("need at least three positive eps values")
    est = [I_eps_mc(m, alpha, float(e), samples, child_seed(seed, i)) for i, e in enumerate(eps)]
    return fit_eps_scaling(
        m, alpha, eps, np.array([e.value for e in est]), np.array([e.std_err for e in est])
    )


def fit_eps_scaling(m: int, alpha: float, eps, values, std_errs) -> ScalingFit:
    """Weighted least-squares fit behind :func:`scaling_fit`, on given estimates."""
    regime = regime_of(m, alpha)
    eps = np.asarray(eps, dtype=float)
    vals = np.asarray(values, dtype=float)
    ses = np.maximum(np.asarray(std_errs, dtype=float), 1e-300)
    if regime is RegimeTag.SUPERCRITICAL:
        x, y, sy = np.log(eps), np.log(vals), ses / vals
        expected = (m - 1) * (1.0 - m * alpha * alpha)
    elif regime is RegimeTag.CRITICAL:
        x, y, sy = np.log(1.0 / eps), vals, ses
        expected = float("nan")
    else:
        raise RegimeMismatchError("I_eps has a finite limit in the subcritical regime; nothing to fit")
    w = 1.0 / sy**2
    (slope, icpt), cov = np.polyfit(x, y, 1, w=np.sqrt(w), cov="unscaled")
    resid = y - (slope * x + icpt)
    ybar = np.average(y, weights=w)
    r2 = 1.0 - float(np.sum(w * resid**2) / np.sum(w * (y - ybar) ** 2))
    return ScalingFit(float(slope), float(math.sqrt(cov[0, 0])), r2, regime, expected)


# ---------------------------------------------------------------- CUE moments


def _root_symbol(ts: Sequence[float], alpha: float):
    """prod_j |z - e^{i t_j}|^{2 alpha} with coincident points merged."""
    pts: dict[float, float] = {}
    for t in ts:
        t = float(t) % TWO_PI
        pts[t] = pts.get(t, 0.0) + alpha
    return make_symbol(None, [FHSingularity(t, a) for t, a in sorted(pts.items())])


def _log_dn_roots(n: int, ts: Sequence[float], alpha: float) -> float:
    if n == 0 or alpha == 0.0:
        return 0.0
    sym = _root_symbol(ts, alpha)
    return logdet_levinson(fourier_coeffs(sym, max(n - 1, 1)), n).log_det


def _graded_breaks(n: int, upper: float, c: float = 8.0, levels: int = 12) -> list[float]:
    """Break points on (0, upper]: geometric refinement towards 0 below c/n and
    doubling panels above it."""
    inner = min(c / max(n, 1), upper)
    br = [inner * 2.0**-j for j in range(levels, 0, -1)] + [inner]
    x = inner
    while 2 * x < upper:
        x *= 2
        br.append(x)
    return sorted(set(b for b in br if 0 < b < upper))


def _pair_average(fn, n: int, rel_tol: float, period_half: bool = True) -> float:
    """(1/2 pi) int_0^{2 pi} fn(t) dt for fn even about pi; computed as
    (1/pi) int_0^pi on graded panels."""
    spec = specfun.QuadratureSpec(specfun.Scheme.ADAPTIVE_PANEL, abs_tol=1e-300, rel_tol=rel_tol, order=12)
    br = _graded_breaks(n, math.pi)
    hints = [(b, 0.0) for b in br]
    val, _ = specfun.integrate_1d(fn, 0.0, math.pi, hints=hints, spec=spec)
    return val / math.pi


def xn_moment_exact(n: int, m: int, alpha: float, spec=None, rel_tol: float = 1e-7) -> float:
    """E[X_n(alpha)^m] for the CUE of size n, for m in {1, 2}.

    m = 1 is D_n of a single root singularity; m = 2 averages D_n of a pair of
    singularities over their separation.
    """
    _check_m_alpha(m, alpha)
    if n < 1:
        raise ValueError("n must be >= 1")
    if spec is not None:
        rel_tol = spec.rel_tol
    if m == 1:
        return math.exp(_log_dn_roots(n, [0.0], alpha))
    if m == 2:
        return _pair_average(lambda t: math.exp(_log_dn_roots(n, [0.0, t], alpha)), n, rel_tol)
    raise NotImplementedError("exact moments are implemented for m <= 2")


def _log_barnes_ratio(alpha: float) -> float:
    """log[G(1+alpha)^2 / G(1+2 alpha)]."""
    return float((2 * specfun.log_barnes_g(1 + alpha) - specfun.log_barnes_g(1 + 2 * alpha)).real)


def fk_constant(m: int, alpha: float) -> float:
    """C_m(alpha) of the subcritical regime."""
    if regime_of(m, alpha) is not RegimeTag.SUBCRITICAL:
        raise DivergentIntegralError("C_m(alpha) exists only for m alpha^2 < 1")
    if m == 1:
        return _log_barnes_ratio(alpha)
    a2 = alpha * alpha
    return float(
        m * (_log_barnes_ratio(alpha) - specfun.log_gamma(1.0 - a2).real)
        + specfun.log_gamma(1.0 - m * a2).real
    )


def fk_prediction(n: int, m: int, alpha: float) -> tuple[float, RegimeTag]:
    """Predicted log E[X_n(alpha)^m] and its regime.

    Only the subcritical prediction carries a constant; the critical and
    supercritical values are the growth terms alone.
    """
    _check_m_alpha(m, alpha)
    if n < 2:
        raise ValueError("n must be >= 2")
    regime = regime_of(m, alpha)
    ln = math.log(n)
    if regime is RegimeTag.SUBCRITICAL:
        return m * alpha * alpha * ln + fk_constant(m, alpha), regime
    if regime is RegimeTag.CRITICAL:
        return ln + math.log(ln), regime
    return ((m * alpha) ** 2 + 1 - m) * ln, regime


# ---------------------------------------------------------------- CUE Metropolis


def _tanh_sinh_unit(level_h: float = 0.125, t_max: float = 3.5):
    t = np.arange(-t_max, t_max + level_h / 2, level_h)
    u = 0.5 * math.pi * np.sinh(t)
    x = np.tanh(u)  # in (-1, 1)
    w = level_h * 0.5 * math.pi * np.cosh(t) / np.cosh(u) ** 2
    # distance of each node to its nearer endpoint, without cancellation
    e = np.exp(-2.0 * np.abs(u))
    d = 2.0 * e / (1.0 + e)
    return x, w, d, t < 0


def _cue_mass(theta: np.ndarray, alpha: float, rule) -> np.ndarray:
    """X = (1/2 pi) int prod_j |e^{i theta_j} - e^{i t}|^{2 alpha} dt for each
    row of ``theta`` (shape (C, n)), on panels between sorted eigenangles."""
    x, w, d, left = rule
    th = np.sort(theta % TWO_PI, axis=1)
    c, n = th.shape
    nxt = np.concatenate([th[:, 1:], th[:, :1] + TWO_PI], axis=1)
    half = 0.5 * (nxt - th)  # (C, n)
    # node positions, offsets from the panel's own endpoints kept exact
    t_nodes = 0.5 * (th + nxt)[..., None] + half[..., None] * x  # (C, n, q)
    off_left = half[..., None] * np.where(left, d, 2.0 - d)
    off_right = half[..., None] * np.where(left, 2.0 - d, d)
    logs = np.zeros_like(t_nodes)
    for j in range(n):
        diff = t_nodes - th[:, j][:, None, None]
        s = np.abs(np.sin(0.5 * diff))
        # replace the two own-endpoint distances with the exact offsets
        own_l = (np.arange(n) == j)[None, :, None]
        own_r = (np.roll(np.arange(n), -1) == j)[None, :, None]
        s = np.where(own_l, np.abs(np.sin(0.5 * off_left)), s)
        s = np.where(own_r, np.abs(np.sin(0.5 * off_right)), s)
        with np.errstate(divide="ignore"):
            logs += np.log(2.0 * s)
    vals = np.exp(2.0 * alpha * logs) * (half[..., None] * w)
    return vals.sum(axis=(1, 2)) / TWO_PI


def _log_vandermonde_change(theta: np.ndarray, idx: np.ndarray, new: np.ndarray) -> np.ndarray:
    rows = np.arange(theta.shape[0])
    old = theta[rows, idx]
    d_new = np.abs(np.sin(0.5 * (new[:, None] - theta)))
    d_old = np.abs(np.sin(0.5 * (old[:, None] - theta)))
    mask = np.ones_like(theta, dtype=bool)
    mask[rows, idx] = False
    with np.errstate(divide="ignore"):
        delta = np.where(mask, np.log(d_new) - np.log(d_old), 0.0)
    return 2.0 * delta.sum(axis=1)


def cue_mc_moment(
    n: int,
    m: int,
    alpha: float,
    chains: int,
    steps: int,
    seed: int | None,
    r_hat_max: float = 1.2,
    batches: int = 20,
) -> MCEstimate:
    """Metropolis estimate of E[X_n(alpha)^m] under the CUE eigenvalue law.

    ``steps`` counts sweeps of n single-angle updates; one X_n^m sample is
    recorded per sweep after a burn-in of a fifth of the run.  The standard
    error is computed from batch means pooled across chains; a Gelman-Rubin
    statistic above ``r_hat_max`` raises :class:`NonMixingError`.
    """
    _check_m_alpha(m, alpha)
    if not 1 <= n <= 64:
        raise ValueError("n must be in 1..64")
    if chains < 4:
        raise ValueError("need at least 4 chains")
    burn = steps // 5
    kept = steps - burn
    if kept < 2 * batches:
        raise ValueError(f"steps too small: need at least {5 * 2 * batches // 4 + 1}")
    streams = [
        np.random.Generator(np.random.Philox(s)) for s in np.random.SeedSequence(seed).spawn(chains)
    ]
    init = np.stack([g.random(n) * TWO_PI for g in streams])
    idx_all = np.stack([g.integers(0, n, size=(steps, n)) for g in streams], axis=0)
    z_all = np.stack([g.standard_normal((steps, n)) for g in streams], axis=0)
    u_all = np.stack([g.random((steps, n)) for g in streams], axis=0)
    step_size = min(math.pi, 2.0 * math.pi / n)
    theta = init.copy()
    rule = _tanh_sinh_unit()
    rows = np.arange(chains)
    out = np.empty((chains, kept))
    for s in range(steps):
        for r in range(n):
            idx = idx_all[:, s, r]
            prop = (theta[rows, idx] + step_size * z_all[:, s, r]) % TWO_PI
            if n > 1:
                log_acc = _log_vandermonde_change(theta, idx, prop)
                accept = np.log(u_all[:, s, r]) < log_acc
            else:
                accept = np.ones(chains, dtype=bool)
            theta[rows[accept], idx[accept]] = prop[accept]
        if s >= burn:
            out[:, s - burn] = _cue_mass(theta, alpha, rule) ** m
    # Gelman-Rubin on the recorded series
    chain_means = out.mean(axis=1)
    w_var = out.var(axis=1, ddof=1).mean()
    b_var = kept * chain_means.var(ddof=1)
    var_hat = (kept - 1) / kept * w_var + b_var / kept
    r_hat = math.sqrt(var_hat / w_var) if w_var > 0 else 1.0
    if r_hat > r_hat_max:
        raise NonMixingError(f"chains did not mix: R-hat = {r_hat:.3f}", r_hat)
    size = kept // batches
    bm = out[:, : size * batches].reshape(chains, batches, size).mean(axis=2).ravel()
    value = float(out.mean())
    se = float(bm.std(ddof=1) / math.sqrt(bm.size))
    return MCEstimate(value, se, chains * kept, seed)


# ---------------------------------------------------------------- bosons


def _log_g32() -> float:
    return float(specfun.log_barnes_g(1.5).real)


def pi_kn_zero(k: int, n: int, spec=None, rel_tol: float = 1e-9) -> float:
    """Zero-momentum k-particle density pi_{k,n}(0, ..., 0) of n hard-core
    bosons, for k in {1, 2}."""
    if k not in (1, 2):
        raise NotImplementedError("implemented for k = 1, 2")
    if n < k:
        raise ValueError("need n >= k")
    if spec is not None:
        rel_tol = spec.rel_tol
    if k == 1:
        if n == 1:
            return 1.0
        fn = lambda t: math.exp(_log_dn_roots(n - 1, [0.0, t], 0.5))  # noqa: E731
        return _pair_average(fn, n, rel_tol)
    return _pi2_zero(n, rel_tol)


def _simplex_rule(levels: int):
    """Nested tanh-sinh nodes for 0 < u < v < w < 2 pi."""
    h = 0.5**levels
    x, wt, d, left = _tanh_sinh_unit(level_h=h, t_max=4.0)
    # map (-1, 1) -> (0, 1) with exact distance to the nearer end
    lo = np.where(left, 0.5 * d, 1.0 - 0.5 * d)
    hi_gap = np.where(left, 1.0 - 0.5 * d, 0.5 * d)  # 1 - lo, exactly
    wt = 0.5 * wt
    q = lo.size
    # w = 2 pi * lo_w; v = w * lo_v; u = v * lo_u
    W = TWO_PI * lo[:, None, None] * np.ones((1, q, q))
    V = W * lo[None, :, None]
    U = V * lo[None, None, :]
    # gaps: u, v - u, w - v, 2 pi - w, each computed without cancellation
    g1 = U
    g2 = V * hi_gap[None, None, :]
    g3 = W * hi_gap[None, :, None]
    g4 = TWO_PI * hi_gap[:, None, None] * np.ones((1, q, q))
    jac = TWO_PI * W * V  # dw dv du = 2pi * w * v dx dy dz
    weight = wt[:, None, None] * wt[None, :, None] * wt[None, None, :] * jac
    pts = np.stack([U, V, W], axis=-1).reshape(-1, 3)
    gaps = np.stack([g1, g2, g3, g4], axis=-1).reshape(-1, 4)
    return pts, gaps, weight.ravel()


def _half_root_coeffs(gaps: np.ndarray, n_max: int) -> np.ndarray:
    """f_0..f_{n_max} of prod_j |z - e^{i t_j}| for points t_0 = 0 < t_1 < ...
    given by their consecutive spacings (rows of ``gaps``, summing to 2 pi).

    Between consecutive points every factor 2|sin((theta - t_j)/2)| has a fixed
    sign and so is entire, hence Gauss-Legendre on each arc converges
    geometrically.  Distances are assembled from spacings, never by
    subtracting positions.
    """
    b, m = gaps.shape
    q = 24 + n_max
    x, w = specfun.gauss_legendre(q)
    s_lo = 0.5 * (1.0 + x)  # node offset / arc length, from the left end
    s_hi = 0.5 * (1.0 - x)
    starts = np.concatenate([np.zeros((b, 1)), np.cumsum(gaps[:, :-1], axis=1)], axis=1)
    out = np.zeros((b, n_max + 1), dtype=complex)
    for a in range(m):
        g = gaps[:, a][:, None]
        left = g * s_lo  # distance to point a
        right = g * s_hi  # distance to point a+1
        log_f = np.zeros((b, q))
        for l in range(m):
            if l == a:
                back = left
            else:
                # going backwards from the node: arc a's left part then gaps l..a-1
                idx = [(l + i) % m for i in range((a - l) % m)]
                back = left + gaps[:, idx].sum(axis=1)[:, None]
            if (l - a - 1) % m == 0:
                fwd = right
            else:
                idx = [(a + 1 + i) % m for i in range((l - a - 1) % m)]
                fwd = right + gaps[:, idx].sum(axis=1)[:, None]
            with np.errstate(divide="ignore"):
                log_f += np.log(2.0 * np.sin(0.5 * np.minimum(back, fwd)))
        rot = np.exp(-1j * (starts[:, a][:, None] + left))
        vals = np.exp(log_f) * (0.5 * g * w)
        acc = vals.astype(complex)
        for kk in range(n_max + 1):
            out[:, kk] += acc.sum(axis=1)
            acc *= rot
    return out / TWO_PI


def _chord(arc: np.ndarray, rest: np.ndarray) -> np.ndarray:
    """|e^{ia} - e^{ib}| from the two complementary arcs between a and b."""
    return 2.0 * np.sin(0.5 * np.minimum(arc, rest))


def _pi2_level(n: int, levels: int, chunk: int = 4096) -> float:
    """One nested tanh-sinh estimate of pi_{2,n}(0, 0).

    After pinning one point, the remaining three are ordered; the integrand
    is symmetric in all four points, and the pair weights are summed over
    the labelings that map onto the ordered configuration.
    """
    _, gaps, wt = _simplex_rule(levels)
    g1, g2, g3, g4 = gaps.T
    c0u, c0v, c0w = _chord(g1, g2 + g3 + g4), _chord(g1 + g2, g3 + g4), _chord(g4, g1 + g2 + g3)
    cuv, cvw, cuw = _chord(g2, g1 + g3 + g4), _chord(g3, g1 + g2 + g4), _chord(g2 + g3, g1 + g4)
    weight = 2.0 * (c0u * cvw + c0v * cuw + c0w * cuv)
    size = n - 2
    dets = np.ones(len(wt))
    if size > 0:
        for i in range(0, len(wt), chunk):
            c = _half_root_coeffs(gaps[i:i + chunk], size - 1)
            dets[i:i + chunk] = np.exp(levinson_batch(c).sum(axis=1))
    return math.fsum(wt * weight * dets) / TWO_PI**3


def _pi2_zero(n: int, rel_tol: float, max_level: int = 4) -> float:
    # tanh-sinh roughly doubles the correct digits per level; the error of
    # the finest level is modelled as d_last^2 / d_prev
    est = [_pi2_level(n, 1), _pi2_level(n, 2)]
    tol = max(rel_tol, 1e-7)
    for lev in range(3, max_level + 1):
        est.append(_pi2_level(n, lev))
        d_prev, d_last = abs(est[-2] - est[-3]), abs(est[-1] - est[-2])
        err = d_last * d_last / d_prev if d_prev > 0 else d_last
        if err <= tol * abs(est[-1]):
            return est[-1]
    raise specfun.QuadratureError(f"k=2 density not converged (err_est={err:.3g})", partial=est[-1], err_est=err)


def n0_limit_constant_torus() -> float:
    """The k = 1 constant from its two-point circular integral,
    G(3/2)^4 (2 pi)^-2 int int |e^{i t_1} - e^{i t_2}|^(-1/2): an independent
    route to ``n0_limit_constant(1)``."""
    g4 = math.exp(4 * _log_g32())
    spec = specfun.QuadratureSpec(specfun.Scheme.TANH_SINH, abs_tol=1e-15, rel_tol=1e-14)
    val, _ = specfun.integrate_1d(
        lambda s: (2.0 * np.sin(0.5 * s)) ** -0.5,
        0.0,
        math.pi,
        hints=[(0.0, -0.5)],
        spec=spec,
        vectorized=True,
    )
    # the integrand is symmetric about s = pi
    return g4 * val / math.pi


def n0_limit_constant(k: int, samples: int = 200_000, seed: int | None = 0) -> MCEstimate:
    """lim_n pi_{k,n}(0..0) / n^{k/2}.

    k = 1 is evaluated by quadrature in closed form (std_err 0); k = 2 is a
    four-point circular integral estimated by Monte Carlo.
    """
    g4 = math.exp(4 * _log_g32())
    if k == 1:
        spec = specfun.QuadratureSpec(specfun.Scheme.TANH_SINH, abs_tol=1e-15, rel_tol=1e-14)
        val, _ = specfun.integrate_1d(
            lambda t: np.sin(t) ** -0.5, 0.0, 0.5 * math.pi, hints=[(0.0, -0.5)], spec=spec, vectorized=True
        )
        return MCEstimate(math.sqrt(2.0) / math.pi * g4 * val, 0.0, 0, None)
    if k == 2:
        rng = _rng(seed)
        a = 0.5
        gaps = np.maximum(rng.dirichlet(np.full(4, a), size=samples), np.finfo(float).tiny)
        log_w = math.lgamma(4) + 4 * math.lgamma(a) - math.lgamma(4 * a) + (1 - a) * np.log(gaps).sum(axis=1)
        # all six chords of the sorted configuration (fractions of the circle)
        chords = {}
        for j in range(4):
            for l in range(j + 1, 4):
                inner = gaps[:, j:l].sum(axis=1)
                outer = gaps[:, l:].sum(axis=1) + gaps[:, :j].sum(axis=1)
                chords[(j, l)] = 2.0 * np.sin(math.pi * np.minimum(inner, outer))
        log_all = sum(np.log(c) for c in chords.values())
        # average of |e1 - e2||e3 - e4| over labelings: three pairings
        pairings = [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))]
        numer = sum(chords[p] * chords[q] for p, q in pairings) / 3.0
        vals = g4 * g4 * numer * np.exp(-0.5 * log_all + log_w)
        mean = float(np.mean(vals))
        se = float(np.std(vals, ddof=1) / math.sqrt(samples))
        return MCEstimate(mean, se, samples, seed)
    raise NotImplementedError("implemented for k = 1, 2")


def _boson_coeffs_fft(n: int, grid: int) -> np.ndarray:
    """Fourier coefficients of prod_{j<l} |e^{i x_j} - e^{i x_l}| with x_1 = 0,
    as an (n-1)-dimensional array from a grid of ``grid`` points per axis."""
    y = TWO_PI * np.arange(grid) / grid
    axes = np.meshgrid(*([y] * (n - 1)), indexing="ij", sparse=True)
    pts = [np.zeros(1)] + list(axes)
    g = np.ones([grid] * (n - 1))
    for j in range(n):
        for l in range(j + 1, n):
            g = g * np.abs(2.0 * np.sin(0.5 * (pts[l] - pts[j])))
    return sfft.fftn(g) / grid ** (n - 1)


def _boson_pi_from_coeffs(c: np.ndarray, n: int, k: int, m_max: int) -> tuple[float, float]:
    grid = c.shape[0]
    idx = np.arange(-m_max, m_max + 1)
    sub = c[np.ix_(*([idx % grid] * (n - 1)))]
    mag = np.abs(sub) ** 2
    # momenta M_2..M_n on the axes; M_1 = -(sum) must also satisfy |M_1| <= m_max
    msum = sum(np.meshgrid(*([idx] * (n - 1)), indexing="ij", sparse=True)) if n > 1 else 0
    keep = np.abs(msum) <= m_max
    norm = float(np.sum(mag * keep)) / math.factorial(n)
    # zero momentum for particles 1..k: M_2..M_k = 0 and M_1 = 0
    sl = tuple([m_max] * (k - 1) + [slice(None)] * (n - k))
    part = mag[sl]
    if n - k > 0:
        ms = sum(np.meshgrid(*([idx] * (n - k)), indexing="ij", sparse=True))
        part = part[ms == 0]
    else:
        part = np.atleast_1d(part)
    pi = math.factorial(n) / math.factorial(n - k) * float(np.sum(part)) / math.factorial(n)
    return pi, norm


# momentum cut-off and FFT grid pair per particle number; the cut-off is the
# smallest that captures all but 1e-6 of the wavefunction's mass
LATTICE_DEFAULTS = {2: (40, (128, 256)), 3: (100, (256, 512)), 4: (160, (336, 384))}


class LatticeNormalizationError(ArithmeticError):
    def __init__(self, message: str, deficit: float):
        super().__init__(message)
        self.deficit = deficit


def boson_lattice_pi(
    k: int,
    n: int,
    m_max: int | None = None,
    grids: Sequence[int] | None = None,
    norm_tol: float = 1e-6,
) -> dict:
    """Brute-force pi_{k,n}(0..0) from the momentum-space wavefunction.

    phi(M) is obtained by FFT of the pair-product on two grids and Richardson
    extrapolated in the grid size (aliasing error ~ grid^-2); momenta are
    truncated to |M_j| <= ``m_max``.  The truncated normalisation
    sum_M |phi(M)|^2 must be within ``norm_tol`` of 1, otherwise
    :class:`LatticeNormalizationError` is raised.
    """
    if not 1 <= k <= n or n < 2:
        raise ValueError("need 1 <= k <= n and n >= 2")
    if n > 4:
        raise ValueError("lattice oracle limited to n <= 4")
    d_mmax, d_grids = LATTICE_DEFAULTS[n]
    m_max = d_mmax if m_max is None else m_max
    g1, g2 = d_grids if grids is None else grids
    if min(g1, g2) <= 2 * m_max + 1 or g1 == g2:
        raise ValueError("grids must differ and exceed 2 m_max + 1")
    p1, n1 = _boson_pi_from_coeffs(_boson_coeffs_fft(n, g1), n, k, m_max)
    p2, n2 = _boson_pi_from_coeffs(_boson_coeffs_fft(n, g2), n, k, m_max)
    r = (g2 / g1) ** 2
    norm = (r * n2 - n1) / (r - 1)
    if abs(norm - 1.0) > norm_tol:
        raise LatticeNormalizationError(
            f"truncated normalisation {norm!r} misses 1 by more than {norm_tol:g}", 1.0 - norm
        )
    return {"pi": (r * p2 - p1) / (r - 1), "norm": norm, "m_max": m_max, "grids": (g1, g2)}
