"""Asymptotic predictions for log D_n(f) and for the chi_n ladder."""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .specfun import log_barnes_g, rgamma
from .symbol import AnalyticPart, FHSymbol

__all__ = [
    "Regime",
    "Prediction",
    "ClusterPartition",
    "Phi1Matrix",
    "CoincidentSingularityError",
    "szego_constant",
    "widom_log_E",
    "widom_prediction",
    "theorem1_prediction",
    "cluster_partition",
    "hn_correction",
    "phi1_matrix",
    "root_log_E",
]

U0_DEFAULT = 1.0


class Regime(str, enum.Enum):
    SEPARATED = "separated"
    UNIFORM = "uniform"


class CoincidentSingularityError(ValueError):
    pass


@dataclass(frozen=True)
class Prediction:
    n: int
    term_szego: float
    term_log_n: float
    term_pairs: float
    const_E: float | None
    regime: Regime

    def total(self) -> float:
        """Sum of the terms present (the O(1) of the uniform regime is absent)."""
        s = self.term_szego + self.term_log_n + self.term_pairs
        if self.const_E is not None:
            s += self.const_E
        return s


@dataclass(frozen=True)
class ClusterPartition:
    clusters: tuple[tuple[int, ...], ...]
    eps_n: float
    u_hat_n: float


@dataclass(frozen=True)
class Phi1Matrix:
    entries: np.ndarray

    @property
    def trace(self) -> complex:
        return complex(self.entries[0, 0] + self.entries[1, 1])


def szego_constant(analytic: AnalyticPart) -> float:
    """sum_{k >= 1} k V_k V_{-k}."""
    return math.fsum(k * abs(v) ** 2 for k, v in analytic.coeffs.items() if k > 0)


def _half_chord(dt: float) -> float:
    # sin(|t_j - t_k|/2) equals |e^{i t_j} - e^{i t_k}|/2 for any real difference
    return abs(math.sin(0.5 * dt))


def root_log_E(alpha: float, beta_im: float = 0.0) -> float:
    """log[G(1+a+b) G(1+a-b) / G(1+2a)] for one singularity, b = i*beta_im."""
    b = 1j * beta_im
    val = log_barnes_g(1 + alpha + b) + log_barnes_g(1 + alpha - b) - log_barnes_g(1 + 2 * alpha)
    return float(val.real)


def widom_log_E(sym: FHSymbol) -> float:
    """log E for separated singularities."""
    sings = sym.singularities
    V = sym.analytic
    terms = [szego_constant(V)]
    for s in sings:
        terms.append(root_log_E(s.alpha, s.beta_im))
        vp = V.v_plus(cmath.exp(1j * s.t))
        terms.append(2.0 * ((1j * s.beta_im - s.alpha) * vp).real)
    imag = 0.0
    for j in range(len(sings)):
        for k in range(j + 1, len(sings)):
            sj, sk = sings[j], sings[k]
            chord = abs(cmath.exp(1j * sj.t) - cmath.exp(1j * sk.t))
            if chord == 0.0:
                raise CoincidentSingularityError(f"singularities {j} and {k} coincide")
            bjbk = (1j * sj.beta_im) * (1j * sk.beta_im)
            ajak = sj.alpha * sk.alpha
            terms.append(2.0 * (bjbk.real - ajak) * math.log(chord))
            # i (t_k - t_j - pi)(a_j b_k - a_k b_j) with b = i*beta_im
            z = 1j * (sk.t - sj.t - math.pi) * (sj.alpha * 1j * sk.beta_im - sk.alpha * 1j * sj.beta_im)
            terms.append(z.real)
            imag += z.imag
    if abs(imag) > 1e-10:
        raise ArithmeticError(f"log E has imaginary residue {imag:g}")
    return math.fsum(terms)


def _log_n_term(sym: FHSymbol, n: int) -> float:
    # alpha^2 - beta^2 with beta = i*beta_im is alpha^2 + beta_im^2
    return math.fsum(s.alpha**2 + s.beta_im**2 for s in sym.singularities) * math.log(n)


def widom_prediction(sym: FHSymbol, n: int) -> Prediction:
    return Prediction(
        n=n,
        term_szego=n * sym.analytic.v0,
        term_log_n=_log_n_term(sym, n),
        term_pairs=0.0,
        const_E=widom_log_E(sym),
        regime=Regime.SEPARATED,
    )


def theorem1_prediction(sym: FHSymbol, n: int) -> Prediction:
    """Uniform main terms; the bounded remainder is not modelled."""
    if n < 1:
        raise ValueError("n must be >= 1")
    sings = sym.singularities
    pairs = []
    for j in range(len(sings)):
        for k in range(j + 1, len(sings)):
            sj, sk = sings[j], sings[k]
            w = sj.alpha * sk.alpha + sj.beta_im * sk.beta_im  # alpha_j alpha_k - beta_j beta_k
            if w:
                pairs.append(2.0 * w * -math.log(_half_chord(sj.t - sk.t) + 1.0 / n))
    return Prediction(
        n=n,
        term_szego=n * sym.analytic.v0,
        term_log_n=_log_n_term(sym, n),
        term_pairs=math.fsum(pairs),
        const_E=None,
        regime=Regime.UNIFORM,
    )


def cluster_partition(ts: Sequence[float], eps: float, U: float, n: int) -> ClusterPartition | None:
    """Partition of sorted angles under condition (eps, U, n), or None when
    some consecutive gap g has eps <= n*g < U."""
    if not eps < U:
        raise ValueError("need eps < U")
    ts = list(ts)
    if any(b < a for a, b in zip(ts, ts[1:])):
        raise ValueError("angles must be sorted")
    if not ts:
        return ClusterPartition((), 0.0, math.inf)
    clusters = [[0]]
    for i in range(1, len(ts)):
        g = n * (ts[i] - ts[i - 1])
        if g < eps:
            clusters[-1].append(i)
        elif g >= U:
            clusters.append([i])
        else:
            return None
    eps_n = max(n * (ts[c[-1]] - ts[c[0]]) for c in clusters)
    if len(clusters) == 1:
        u_hat = math.inf
    else:
        u_hat = min(n * (ts[b[0]] - ts[a[-1]]) for a, b in zip(clusters, clusters[1:]))
    return ClusterPartition(tuple(tuple(c) for c in clusters), eps_n, u_hat)


def hn_correction(sym: FHSymbol, n: int, U0: float = U0_DEFAULT) -> float:
    """(1/2n) sum(a^2 - b^2) + (1/n) sum_{j<k} (a_j a_k - b_j b_k) 1[|t_k - t_j| < U0/n]."""
    if n < 1 or not U0 > 0:
        raise ValueError("need n >= 1 and U0 > 0")
    sings = sym.singularities
    single = math.fsum(s.alpha**2 + s.beta_im**2 for s in sings) / (2.0 * n)
    cross = []
    for j in range(len(sings)):
        for k in range(j + 1, len(sings)):
            if 0.0 < abs(sings[k].t - sings[j].t) < U0 / n:
                cross.append(sings[j].alpha * sings[k].alpha + sings[j].beta_im * sings[k].beta_im)
    return single + math.fsum(cross) / n


def phi1_matrix(alphas: Sequence[float], betas_im: Sequence[float]) -> Phi1Matrix:
    """Merged-limit Phi_1 with A = sum(alpha), B = sum(beta)."""
    if any(a < 0 for a in alphas):
        raise ValueError("alphas must be >= 0")
    A = float(sum(alphas))
    B = 1j * float(sum(betas_im))
    d = A * A - B * B
    off12 = -cmath.exp(-1j * math.pi * (A + B)) * _gamma(1 + A - B) * rgamma(A + B)
    off21 = cmath.exp(1j * math.pi * (A + B)) * _gamma(1 + A + B) * rgamma(A - B)
    m = np.array([[d, off12], [off21, -d]], dtype=complex)
    return Phi1Matrix(m)


def _gamma(z: complex) -> complex:
    r = rgamma(z)
    return 1.0 / r if r != 0 else complex("nan")
