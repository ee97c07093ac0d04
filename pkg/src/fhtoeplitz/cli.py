"""Command-line entry point: ``fht <experiment> [key=value ...] [options]``."""
from __future__ import annotations

import argparse
import json
import sys

from . import harness

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fht", description="Toeplitz determinant experiments")
    sub = p.add_subparsers(dest="experiment", required=True)
    for name in harness.EXPERIMENTS:
        s = sub.add_parser(name)
        s.add_argument("overrides", nargs="*", metavar="key=value", help="config entries")
        s.add_argument("--config", metavar="PATH", help="flat key=value config file")
        s.add_argument("--format", choices=("csv", "jsonl"))
        s.add_argument("--workers", type=int, help="worker processes (default: $FHT_WORKERS or 1)")
        s.add_argument("--seed", type=int)
        s.add_argument("--verify", action="store_true", help="cross-check against dense Cholesky")
        s.add_argument("--out", metavar="PATH")
        s.add_argument("--timing", action="store_true", help="record wall time per grid point")
    return p


def _error(kind: str, message: str, params: dict | None = None) -> None:
    obj = {"error": kind, "message": message}
    if params is not None:
        obj["params"] = params
    sys.stderr.write(json.dumps(obj, sort_keys=True) + "\n")


def _load(args) -> harness.RunConfig:
    raw: dict[str, str] = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                raw.update(harness.parse_config_text(fh.read()))
        except OSError as exc:
            raise harness.ConfigError(f"cannot read config: {exc}") from None
    for item in args.overrides:
        if "=" not in item:
            raise harness.ConfigError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        raw[k.strip()] = v.strip()
    for flag in ("format", "workers", "seed", "out"):
        val = getattr(args, flag)
        if val is not None:
            raw[flag] = str(val)
    if args.verify:
        raw["verify"] = "true"
    if args.timing:
        raw["timing"] = "true"
    return harness.build_config(args.experiment, raw)


def main(argv=None) -> int:
    parser = _parser()
    try:
        # overrides may follow options, so leftovers of the form key=value are kept
        args, extra = parser.parse_known_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    stray = [x for x in extra if x.startswith("-") or "=" not in x]
    if stray:
        _error("ConfigError", f"unrecognized arguments: {' '.join(stray)}")
        return EXIT_CONFIG
    args.overrides = list(args.overrides) + extra
    try:
        cfg = _load(args)
        if cfg["workers"] < 0:
            raise harness.ConfigError("workers must be >= 0")
        records = harness.run(cfg)
    except harness.ConfigError as exc:
        _error("ConfigError", str(exc))
        return EXIT_CONFIG
    except harness.NumericFailure as exc:
        _error(exc.kind, str(exc), exc.params)
        return EXIT_NUMERIC
    out = cfg["out"]
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            harness.write_records(records, cfg["format"], fh)
    else:
        harness.write_records(records, cfg["format"], sys.stdout)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
