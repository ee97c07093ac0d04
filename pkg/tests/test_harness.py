import io
import json
import math
import subprocess
import sys

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fhtoeplitz import asympt, cli, harness
from fhtoeplitz.harness import (
    CSV_HEADER,
    ConfigError,
    SweepRecord,
    build_config,
    parse_config_text,
    parse_grid,
    read_csv,
    write_records,
)


def run_cli(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return read_csv(text)


# ---------------------------------------------------------------- grids & configs


def test_parse_grid_forms():
    assert parse_grid("64..1024x2") == [64, 128, 256, 512, 1024]
    assert parse_grid("1,2, 5") == [1, 2, 5]
    assert parse_grid("0.1..0.4X2") == pytest.approx([0.1, 0.2, 0.4])
    assert parse_grid("0, 0.1/n, 1/n", "gap") == ["0", "0.1/n", "1/n"]
    for bad in ("", "1,,2", "64..1024", "8..4x2", "1..8x1", "abc"):
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_gap_tokens():
    assert harness.gap_value("10/n", 100) == pytest.approx(0.1)
    assert harness.gap_value("0.3", 100) == 0.3


def test_config_text_parsing():
    raw = parse_config_text("# sweep\nexperiment = detn\nn = 4, 8  # two sizes\n\nsymbol = sing: 0,1,0\n")
    assert raw == {"experiment": "detn", "n": "4, 8", "symbol": "sing: 0,1,0"}
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config_text("n = 1\nn = 2\n")
    with pytest.raises(ConfigError):
        parse_config_text("just words\n")


def test_build_config_rejects_unknown_and_bad_values():
    with pytest.raises(ConfigError, match="unknown"):
        build_config("detn", {"bogus": "1"})
    with pytest.raises(ConfigError):
        build_config("detn", {"n": "0"})
    with pytest.raises(ConfigError):
        build_config("detn", {"symbol": "sing: 0,-1"})
    with pytest.raises(ConfigError):
        build_config("cue", {"mode": "fast"})
    with pytest.raises(ConfigError):
        build_config("nope", {})
    with pytest.raises(ConfigError):
        build_config("detn", {"experiment": "cue"})
    cfg = build_config("uniformity", {})
    assert cfg["gaps"] == ["0", "0.1/n", "1/n", "10/n", "0.1", "1.0"]
    assert cfg["n"] == [64, 128, 256, 512, 1024]


# ---------------------------------------------------------------- records & output


@given(
    st.floats(allow_nan=False, allow_infinity=False),
    st.floats(allow_nan=False, allow_infinity=False, min_value=-1e300, max_value=1e300),
    st.dictionaries(st.sampled_from(["n", "m", "eps", "seed"]), st.integers(0, 10**9), max_size=4),
)
def test_records_round_trip_losslessly(exact, predicted, params):
    rec = SweepRecord("detn", params, exact, predicted)
    if math.isfinite(exact - predicted):
        assert rec.residual == exact - predicted
    buf = io.StringIO()
    write_records([rec], "csv", buf)
    back = read_csv(buf.getvalue())[0]
    assert back["exact"] == exact and back["predicted"] == predicted and back["params"] == params
    assert back["residual"] == rec.residual


def test_csv_header_is_fixed():
    buf = io.StringIO()
    write_records([SweepRecord("x", {}, None, None)], "csv", buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(CSV_HEADER) == "experiment,param_json,exact,predicted,residual,wall_time_ms"
    assert lines[1] == "x,{},,,,0"


# ---------------------------------------------------------------- experiments via the CLI


def test_detn_tridiagonal(capsys):
    code, out, _ = run_cli(["detn", "symbol=sing: 0,1,0", "n=10", "--verify"], capsys)
    assert code == 0
    (row,) = rows(out)
    assert row["exact"] == pytest.approx(math.log(11), abs=1e-13)
    assert row["params"]["reference"] == pytest.approx(math.log(11), abs=1e-13)


def test_detn_constant_symbol(capsys):
    code, out, _ = run_cli(["detn", "n=100"], capsys)
    assert code == 0 and rows(out)[0]["exact"] == 0


def test_detn_verify_random_symbol(capsys):
    code, out, _ = run_cli(["detn", "symbol=V: 1=0.2; 2=0.05-0.1j sing: 0.5,0.7,0.2; 3,1.2,0", "n=64", "--verify", "chi=true"], capsys)
    assert code == 0
    row = rows(out)[0]
    assert abs(row["exact"] - row["params"]["reference"]) <= 1e-8 * 64
    assert "log_chi_tail" in row["params"]


def test_uniformity_doubling_and_merged_column(capsys):
    code, out, _ = run_cli(["uniformity", "n=128,256", "gaps=0,1.0"], capsys)
    assert code == 0
    recs = rows(out)
    sep = {r["params"]["n"]: r["residual"] for r in recs if r["experiment"] == "uniformity" and r["params"]["gap"] == "1.0"}
    # the pair term itself moves by ~2 alpha^2 / (n sin(1/2)) between the two sizes
    assert abs(sep[128] - sep[256]) < 1e-2
    merged = [r for r in recs if r["experiment"] == "uniformity.summary" and r["params"]["stat"] == "merged_vs_coalesced_E"]
    assert merged and abs(merged[0]["residual"]) < 0.01
    assert merged[0]["predicted"] == pytest.approx(asympt.root_log_E(1.0), abs=1e-15)


def test_chi_ladder_rows(capsys):
    code, out, _ = run_cli(["chi-ladder", "m=1", "alpha=1", "n=64,128"], capsys)
    assert code == 0
    recs = [r for r in rows(out) if r["experiment"] == "chi-ladder"]
    assert all(abs(r["params"]["scaled_residual"]) < 0.1 for r in recs)
    # f = |z - 1|^2: log chi_{n-1} = log(n/(n+1))/2 exactly
    assert recs[0]["exact"] == pytest.approx(0.5 * math.log(64 / 65), abs=1e-13)


def test_cue_exact_rows(capsys):
    code, out, _ = run_cli(["cue", "n=2,4", "m=1", "alpha=1"], capsys)
    assert code == 0
    recs = rows(out)
    assert recs[0]["params"]["moment"] == pytest.approx(3.0, rel=1e-12)
    assert recs[-1]["experiment"] == "cue.summary"


def test_selberg_rows_and_seed_derivation(capsys):
    code, out, _ = run_cli(["selberg", "m=2", "alpha=0.5", "eps=0", "samples=20000", "kernel=chord", "--seed", "5"], capsys)
    assert code == 0
    row = rows(out)[0]
    assert abs(row["residual"]) < 3 * row["params"]["std_err"] + 1e-12
    assert row["params"]["seed"] == harness.apps.child_seed(5, 0)


def test_boson_rows_with_lattice(capsys):
    code, out, _ = run_cli(["boson", "k=1", "n=2,3", "lattice=true"], capsys)
    assert code == 0
    recs = [r for r in rows(out) if r["experiment"] == "boson"]
    for r in recs:
        assert abs(r["exact"] - r["params"]["lattice"]) < 1e-4


# ---------------------------------------------------------------- contracts


def test_reproducible_bytes_and_worker_invariance(tmp_path, capsys):
    args = ["selberg", "m=2", "alpha=1", "eps=0.1,0.05,0.025", "samples=5000", "--seed", "9"]
    outs = []
    for workers in ("1", "1", "2"):
        path = tmp_path / f"out{len(outs)}.csv"
        assert cli.main(args + ["--workers", workers, "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_jsonl_format(capsys):
    code, out, _ = run_cli(["detn", "n=3,4", "symbol=sing: 0,1", "--format", "jsonl"], capsys)
    assert code == 0
    lines = [json.loads(x) for x in out.splitlines()]
    assert [x["params"]["n"] for x in lines] == [3, 4]
    assert lines[1]["exact"] == pytest.approx(math.log(5))


def test_timing_flag(capsys):
    code, out, _ = run_cli(["detn", "n=200", "symbol=sing: 0,0.5", "--timing"], capsys)
    assert code == 0 and rows(out)[0]["wall_time_ms"] >= 0


def test_exit_code_config_error(capsys):
    code, out, err = run_cli(["detn", "colour=blue"], capsys)
    assert code == 2 and out == ""
    assert json.loads(err)["error"] == "ConfigError"
    assert run_cli(["detn", "n=abc"], capsys)[0] == 2
    assert run_cli(["nonsense"], capsys)[0] == 2


def test_exit_code_numeric_failure(capsys):
    # two opposite jumps: coefficients decay like 1/k, the tolerance is unattainable
    code, out, err = run_cli(["detn", "symbol=sing: 0,0,0.8; 2,0,-0.8", "tol=1e-15", "n=8"], capsys)
    assert code == 3
    obj = json.loads(err)
    assert obj["error"] == "CoefficientToleranceError"
    assert obj["params"] == {"n": 8, "experiment": "detn"}


def test_config_file_and_env_workers(tmp_path, monkeypatch, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("experiment = detn\nsymbol = sing: 0,1,0\nn = 5..20x2\n")
    monkeypatch.setenv("FHT_WORKERS", "2")
    code, out, _ = run_cli(["detn", "--config", str(conf)], capsys)
    assert code == 0
    assert [round(math.exp(r["exact"])) for r in rows(out)] == [6, 11, 21]
    monkeypatch.setenv("FHT_WORKERS", "many")
    assert run_cli(["detn", "--config", str(conf)], capsys)[0] == 2


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "fhtoeplitz.cli", "detn", "symbol=sing: 0,1,0", "n=10"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert read_csv(proc.stdout)[0]["exact"] == pytest.approx(math.log(11))
