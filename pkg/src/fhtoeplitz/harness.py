"""Experiment orchestration: configs, grids, sweeps and record emission.

A run is a list of grid points.  Each point is evaluated independently (in a
process pool when more than one worker is requested) and yields one or more
:class:`SweepRecord` rows; rows are always emitted in grid order, followed by
summary rows computed from the whole sweep.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import apps, asympt, specfun
from .symbol import (
    CoefficientToleranceError,
    FHSingularity,
    SymbolError,
    fourier_coeffs,
    make_symbol,
    parse_symbol,
)
from .toeplitz import BreakdownError, logdet_levinson, logdet_reference

CSV_HEADER = ("experiment", "param_json", "exact", "predicted", "residual", "wall_time_ms")
EXPERIMENTS = ("detn", "uniformity", "chi-ladder", "cue", "selberg", "boson")
REFERENCE_VERIFY_MAX_N = 256

NUMERIC_ERRORS = (
    ArithmeticError,  # BreakdownError, NotPositiveDefiniteError, lattice normalisation
    specfun.QuadratureError,
    CoefficientToleranceError,
    apps.NonMixingError,
)


class ConfigError(ValueError):
    pass


class NumericFailure(RuntimeError):
    """A grid point failed numerically; carries the point's parameters."""

    def __init__(self, message: str, params: dict, kind: str):
        super().__init__(message)
        self.params = params
        self.kind = kind


@dataclass
class SweepRecord:
    experiment: str
    params: dict
    exact: float | None
    predicted: float | None
    residual: float | None = None
    wall_time_ms: int = 0

    def __post_init__(self):
        if self.residual is None and self.exact is not None and self.predicted is not None:
            self.residual = self.exact - self.predicted

    def param_json(self) -> str:
        return json.dumps(self.params, sort_keys=True, separators=(",", ":"))

    def as_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "params": self.params,
            "exact": self.exact,
            "predicted": self.predicted,
            "residual": self.residual,
            "wall_time_ms": self.wall_time_ms,
        }


# ---------------------------------------------------------------- grids & config


def _num(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None


def parse_grid(text: str, kind: str = "number") -> list:
    """Comma-separated items; each item is a value or a geometric range
    ``a..bxr`` (both ends included when reached exactly)."""
    out: list = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            raise ConfigError(f"empty item in grid {text!r}")
        if ".." in item:
            lo_s, rest = item.split("..", 1)
            for sep in ("x", "X"):
                if sep in rest:
                    hi_s, r_s = rest.split(sep, 1)
                    break
            else:
                raise ConfigError(f"range {item!r} needs a ratio, e.g. 64..1024x2")
            lo, hi, r = _num(lo_s), _num(hi_s), _num(r_s)
            if not (lo > 0 and hi >= lo and r > 1):
                raise ConfigError(f"bad range {item!r}")
            v = lo
            while v <= hi * (1 + 1e-12):
                out.append(v)
                v = v * r
        elif kind == "gap":
            parse_gap(item)  # validate; the token itself is kept
            out.append(item)
        else:
            out.append(_num(item))
    return out


def parse_gap(token: str) -> tuple[float, bool]:
    """``c`` or ``c/n``: returns (c, scaled-by-1/n)."""
    token = token.strip()
    if token.endswith("/n"):
        return float(_num(token[:-2] or "1")), True
    return float(_num(token)), False


def gap_value(token: str, n: int) -> float:
    c, scaled = parse_gap(token)
    return c / n if scaled else c


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


# key -> (parser, default); None default means required
_COMMON = {
    "experiment": (str, ""),
    "seed": (int, 0),
    "out": (str, ""),
    "workers": (int, 0),
    "format": (str, "csv"),
    "tol": (float, 1e-12),
    "verify": (_bool, False),
    "timing": (_bool, False),
}
SCHEMAS: dict[str, dict[str, tuple[Callable, Any]]] = {
    "detn": {"symbol": (str, ""), "n": (parse_grid, [10]), "chi": (_bool, False)},
    "uniformity": {
        "m": (int, 2),
        "alpha": (float, 0.5),
        "n": (parse_grid, parse_grid("64..1024x2")),
        "gaps": (lambda s: parse_grid(s, "gap"), ["0", "0.1/n", "1/n", "10/n", "0.1", "1.0"]),
    },
    "chi-ladder": {
        "symbol": (str, ""),
        "m": (int, 2),
        "alpha": (float, 0.5),
        "gap": (lambda s: (parse_gap(s), s.strip())[1], "1.0"),
        "n": (parse_grid, parse_grid("64..1024x2")),
        "U0": (float, asympt.U0_DEFAULT),
    },
    "cue": {
        "n": (parse_grid, parse_grid("32..256x2")),
        "m": (int, 1),
        "alpha": (float, 0.5),
        "mode": (str, "exact"),
        "chains": (int, 4),
        "steps": (int, 2000),
    },
    "selberg": {
        "m": (int, 2),
        "alpha": (float, 0.5),
        "eps": (parse_grid, [0.0]),
        "samples": (int, 100_000),
        "kernel": (str, "sine"),
    },
    "boson": {
        "k": (int, 1),
        "n": (parse_grid, parse_grid("16..128x2")),
        "lattice": (_bool, False),
        "samples": (int, 200_000),
    },
}


@dataclass
class RunConfig:
    experiment: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def seed(self) -> int:
        return self.values["seed"]


def parse_config_text(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value.strip()
    return raw


def build_config(experiment: str, raw: dict[str, str]) -> RunConfig:
    if experiment not in SCHEMAS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    if raw.get("experiment", experiment) != experiment:
        raise ConfigError(f"config is for {raw['experiment']!r}, not {experiment!r}")
    schema = {**_COMMON, **SCHEMAS[experiment]}
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config keys for {experiment}: {', '.join(unknown)}")
    values = {}
    for key, (parse, default) in schema.items():
        if key in raw:
            try:
                values[key] = parse(raw[key])
            except ConfigError:
                raise
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{key}: {exc}") from None
        else:
            values[key] = default
    values["experiment"] = experiment
    if values["format"] not in ("csv", "jsonl"):
        raise ConfigError("format must be csv or jsonl")
    if experiment == "detn" and not values["symbol"]:
        values["symbol"] = ""
    if experiment == "cue" and values["mode"] not in ("exact", "mc"):
        raise ConfigError("cue mode must be exact or mc")
    if experiment == "uniformity" and values["m"] not in (2, 3):
        raise ConfigError("uniformity sweep needs m = 2 or 3")
    if experiment in ("detn", "chi-ladder") and values["symbol"]:
        try:
            parse_symbol(values["symbol"])
        except SymbolError as exc:
            raise ConfigError(f"symbol: {exc}") from None
    for key in ("n",):
        if key in values and any((not isinstance(v, int)) or v < 1 for v in values[key]):
            raise ConfigError("n grid must contain positive integers")
    return RunConfig(experiment, values)


# ---------------------------------------------------------------- experiments


def _roots_symbol(ts: Sequence[float], alpha: float):
    """Root singularities at ``ts``; coincident angles are merged."""
    merged: dict[float, float] = {}
    for t in ts:
        t = float(t) % (2 * math.pi)
        merged[t] = merged.get(t, 0.0) + alpha
    return make_symbol(None, [FHSingularity(t, a) for t, a in sorted(merged.items())])


def _predict_smooth_or_widom(sym, n: int) -> float:
    return asympt.widom_prediction(sym, n).total()


def _pt_detn(cfg: dict, n: int, index: int) -> list[SweepRecord]:
    sym = parse_symbol(cfg["symbol"]) if cfg["symbol"] else make_symbol()
    coeffs = fourier_coeffs(sym, max(n - 1, 1), cfg["tol"])
    res = logdet_levinson(coeffs, n)
    params: dict = {"n": n, "symbol": cfg["symbol"], "min_step": res.min_step}
    if cfg["verify"] and n <= REFERENCE_VERIFY_MAX_N:
        ref = logdet_reference(coeffs, n)
        params["reference"] = ref
        if abs(ref - res.log_det) > 1e-8 * n:
            raise BreakdownError(f"Levinson and reference disagree: {res.log_det!r} vs {ref!r}", n)
    if cfg["chi"]:
        params["log_chi_tail"] = float(res.log_chi[-1])
    return [SweepRecord("detn", params, res.log_det, _predict_smooth_or_widom(sym, n))]


def _uniformity_ts(m: int, gap: float) -> list[float]:
    return [j * gap for j in range(m)]


def _pt_uniformity(cfg: dict, n: int, index: int) -> list[SweepRecord]:
    out = []
    for token in cfg["gaps"]:
        gap = gap_value(token, n)
        sym = _roots_symbol(_uniformity_ts(cfg["m"], gap), cfg["alpha"])
        res = logdet_levinson(fourier_coeffs(sym, n - 1, cfg["tol"]), n)
        pred = asympt.theorem1_prediction(sym, n).total()
        params = {"n": n, "m": cfg["m"], "alpha": cfg["alpha"], "gap": token, "min_step": res.min_step}
        out.append(SweepRecord("uniformity", params, res.log_det, pred))
    return out


def _ladder_symbol(cfg: dict, n: int):
    if cfg["symbol"]:
        return parse_symbol(cfg["symbol"])
    gap = gap_value(cfg["gap"], n)
    return _roots_symbol(_uniformity_ts(cfg["m"], gap), cfg["alpha"])


def _pt_chi(cfg: dict, n: int, index: int) -> list[SweepRecord]:
    sym = _ladder_symbol(cfg, n)
    res = logdet_levinson(fourier_coeffs(sym, max(n - 1, 1), cfg["tol"]), n)
    pred = -0.5 * sym.analytic.v0 - asympt.hn_correction(sym, n, cfg["U0"])
    exact = float(res.log_chi[n - 1])
    params = {"n": n, "scaled_residual": n * (exact - pred), "min_step": res.min_step}
    if cfg["symbol"]:
        params["symbol"] = cfg["symbol"]
    else:
        params.update(m=cfg["m"], alpha=cfg["alpha"], gap=cfg["gap"])
    return [SweepRecord("chi-ladder", params, exact, pred)]


def _pt_cue(cfg: dict, n: int, index: int) -> list[SweepRecord]:
    m, alpha = cfg["m"], cfg["alpha"]
    pred, regime = apps.fk_prediction(n, m, alpha) if n >= 2 else (None, apps.regime_of(m, alpha))
    params: dict = {"n": n, "m": m, "alpha": alpha, "mode": cfg["mode"], "regime": regime.value}
    if cfg["mode"] == "exact":
        moment = apps.xn_moment_exact(n, m, alpha)
    else:
        seed = apps.child_seed(cfg["seed"], index)
        est = apps.cue_mc_moment(n, m, alpha, cfg["chains"], cfg["steps"], seed)
        moment = est.value
        params.update(std_err=est.std_err, samples=est.samples, seed=seed)
    params["moment"] = moment
    return [SweepRecord("cue", params, math.log(moment), pred)]


def _pt_selberg(cfg: dict, eps: float, index: int) -> list[SweepRecord]:
    m, alpha = cfg["m"], cfg["alpha"]
    seed = apps.child_seed(cfg["seed"], index)
    est = apps.I_eps_mc(m, alpha, float(eps), cfg["samples"], seed, kernel=cfg["kernel"])
    pred = None
    if eps == 0 and apps.regime_of(m, alpha) is apps.RegimeTag.SUBCRITICAL:
        pred = apps.selberg_I0(m, alpha)
    params = {
        "m": m,
        "alpha": alpha,
        "eps": float(eps),
        "kernel": cfg["kernel"],
        "samples": est.samples,
        "seed": seed,
        "std_err": est.std_err,
        "regime": apps.regime_of(m, alpha).value,
    }
    return [SweepRecord("selberg", params, est.value, pred)]


def _pt_boson(cfg: dict, n: int, index: int) -> list[SweepRecord]:
    k = cfg["k"]
    exact = apps.pi_kn_zero(k, n)
    const = apps.n0_limit_constant(k, samples=cfg["samples"], seed=cfg["seed"])
    params: dict = {"k": k, "n": n, "scaled": exact / n ** (k / 2), "limit_constant": const.value}
    if k == 2:
        params["limit_std_err"] = const.std_err
    if cfg["lattice"] and n <= 4 and n >= 2:
        params["lattice"] = apps.boson_lattice_pi(k, n)["pi"]
    return [SweepRecord("boson", params, exact, const.value * n ** (k / 2))]


POINT_FUNCS = {
    "detn": (_pt_detn, "n"),
    "uniformity": (_pt_uniformity, "n"),
    "chi-ladder": (_pt_chi, "n"),
    "cue": (_pt_cue, "n"),
    "selberg": (_pt_selberg, "eps"),
    "boson": (_pt_boson, "n"),
}


# ---------------------------------------------------------------- summaries


def _fit_line(x, y) -> tuple[float, float]:
    slope, icpt = np.polyfit(np.asarray(x, float), np.asarray(y, float), 1)
    return float(slope), float(icpt)


def _summary(cfg: dict, records: list[SweepRecord]) -> list[SweepRecord]:
    exp = cfg["experiment"]
    name = f"{exp}.summary"
    if exp == "uniformity":
        out = []
        by_n: dict[int, list[SweepRecord]] = {}
        for r in records:
            by_n.setdefault(r.params["n"], []).append(r)
        maxes = {n: max(abs(r.residual) for r in rs) for n, rs in by_n.items()}
        ns = sorted(maxes)
        for n in ns:
            out.append(SweepRecord(name, {"n": n, "stat": "max_abs_residual"}, maxes[n], None))
        merged = [r for r in records if gap_value(r.params["gap"], r.params["n"]) == 0.0]
        if merged:
            last = max(merged, key=lambda r: r.params["n"])
            target = asympt.root_log_E(cfg["m"] * cfg["alpha"])
            out.append(
                SweepRecord(name, {"n": last.params["n"], "stat": "merged_vs_coalesced_E"}, last.residual, target)
            )
        return out
    if exp == "chi-ladder":
        worst = max(abs(r.params["scaled_residual"]) for r in records)
        return [SweepRecord(name, {"stat": "max_abs_scaled_residual"}, worst, None)]
    if exp == "cue" and len(records) >= 2:
        ns = [r.params["n"] for r in records]
        slope, icpt = _fit_line(np.log(ns), [r.exact for r in records])
        m, alpha = cfg["m"], cfg["alpha"]
        regime = apps.regime_of(m, alpha)
        if regime is apps.RegimeTag.SUBCRITICAL:
            expected = m * alpha * alpha
        elif regime is apps.RegimeTag.SUPERCRITICAL:
            expected = (m * alpha) ** 2 + 1 - m
        else:
            expected = None
        return [
            SweepRecord(name, {"stat": "slope_log_n", "regime": regime.value, "intercept": icpt}, slope, expected)
        ]
    if exp == "selberg":
        pos = [r for r in records if r.params["eps"] > 0]
        regime = apps.regime_of(cfg["m"], cfg["alpha"])
        if len(pos) >= 3 and regime is not apps.RegimeTag.SUBCRITICAL:
            fit = apps.fit_eps_scaling(
                cfg["m"],
                cfg["alpha"],
                [r.params["eps"] for r in pos],
                [r.exact for r in pos],
                [r.params["std_err"] for r in pos],
            )
            expected = None if math.isnan(fit.expected_slope) else fit.expected_slope
            params = {"stat": "eps_slope", "regime": regime.value, "slope_err": fit.slope_err, "r_squared": fit.r_squared}
            return [SweepRecord(name, params, fit.slope, expected)]
        return []
    if exp == "boson" and len(records) >= 2:
        a, b = records[-2], records[-1]
        # error in pi/n^{k/2} decays like n^{-1/2}
        r = math.sqrt(b.params["n"] / a.params["n"])
        extrap = (r * b.params["scaled"] - a.params["scaled"]) / (r - 1)
        return [SweepRecord(name, {"stat": "richardson_limit"}, extrap, a.params["limit_constant"])]
    return []


# ---------------------------------------------------------------- running


def _run_point(args):
    cfg, value, index = args
    func, _ = POINT_FUNCS[cfg["experiment"]]
    t0 = time.perf_counter()
    try:
        recs = func(cfg, value, index)
    except NUMERIC_ERRORS as exc:
        key = POINT_FUNCS[cfg["experiment"]][1]
        return ("error", type(exc).__name__, str(exc), {key: value})
    ms = int(round((time.perf_counter() - t0) * 1000)) if cfg["timing"] else 0
    for r in recs:
        r.wall_time_ms = ms
    return ("ok", recs)


def default_workers() -> int:
    env = os.environ.get("FHT_WORKERS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        raise ConfigError(f"FHT_WORKERS must be an integer, got {env!r}") from None


def run(config: RunConfig) -> list[SweepRecord]:
    """Evaluate every grid point and append the summary rows."""
    cfg = config.values
    key = POINT_FUNCS[config.experiment][1]
    grid = cfg[key]
    tasks = [(cfg, v, i) for i, v in enumerate(grid)]
    workers = cfg["workers"] or default_workers()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_point, tasks))
    else:
        results = [_run_point(t) for t in tasks]
    records: list[SweepRecord] = []
    for res in results:
        if res[0] == "error":
            _, kind, msg, params = res
            raise NumericFailure(msg, {**params, "experiment": config.experiment}, kind)
        records.extend(res[1])
    return records + _summary(cfg, records)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def write_records(records: Iterable[SweepRecord], fmt: str, stream) -> None:
    if fmt == "csv":
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([r.experiment, r.param_json(), _fmt(r.exact), _fmt(r.predicted), _fmt(r.residual), str(r.wall_time_ms)])
    elif fmt == "jsonl":
        for r in records:
            stream.write(json.dumps(r.as_dict(), sort_keys=True) + "\n")
    else:
        raise ConfigError(f"unknown format {fmt!r}")


def read_csv(text: str) -> list[dict]:
    """Parse emitted CSV back into dictionaries with floats restored."""
    rows = list(csv.DictReader(io.StringIO(text)))
    for row in rows:
        row["params"] = json.loads(row.pop("param_json"))
        for k in ("exact", "predicted", "residual"):
            row[k] = float(row[k]) if row[k] != "" else None
        row["wall_time_ms"] = int(row["wall_time_ms"])
    return rows
