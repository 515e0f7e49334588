import csv
import json
import math

import jsonschema
import pytest

from hallmhd import schemas
from hallmhd.cli import main

SOLVER = """schema_version = 1
nu = 0.1
mu = 0.1
alpha = 1.0
N = 16
dt = 2e-3
t_end = 0.01
eta = 0.02
diag_stride = 2
"""

SWEEP = SOLVER.replace("eta = 0.02\n", "") + 'kind = "sweep"\netas = [0.001, 0.01, 0.1]\n'


@pytest.fixture
def solver_cfg(tmp_path):
    p = tmp_path / "run.toml"
    p.write_text(SOLVER)
    return p


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_usage_errors(capsys):
    assert run_cli(capsys)[0] == 64
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--bogus"])
    assert exc.value.code == 64
    with pytest.raises(SystemExit) as exc:
        main(["transmogrify"])
    assert exc.value.code == 64


def test_config_errors(capsys, tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text(SOLVER + "gamma = 1\n")
    code, _, err = run_cli(capsys, "simulate", "--config", bad, "--out-dir", tmp_path)
    assert code == 1 and "gamma" in err and "line 10" in err
    assert run_cli(capsys, "simulate", "--config", tmp_path / "nope.toml")[0] == 1
    assert run_cli(capsys, "simulate", "--out-dir", tmp_path)[0] == 1


def test_simulate_stream_and_snapshot(capsys, tmp_path, solver_cfg):
    code, out, _ = run_cli(capsys, "simulate", "--config", solver_cfg, "--out-dir", tmp_path)
    assert code == 0
    records = [json.loads(line) for line in out.splitlines()]
    for r in records:
        jsonschema.validate(r, schemas.SIMULATE_RECORD)
    assert [r["step"] for r in records] == [0, 2, 4, 5]
    assert (tmp_path / "final.bin").exists()
    code, out, _ = run_cli(capsys, "decompose", "--snapshot", tmp_path / "final.bin")
    assert code == 0
    rows = list(csv.reader(out.splitlines()))
    assert tuple(rows[0]) == schemas.CSV_COLUMNS["decompose"]
    assert [int(r[0]) for r in rows[1:]] == list(range(-1, 5))


def test_simulate_blowup_exit(capsys, tmp_path):
    p = tmp_path / "b.toml"
    p.write_text(SOLVER + "blowup_threshold = 1e-6\n")
    code, out, err = run_cli(capsys, "simulate", "--config", p, "--out-dir", tmp_path)
    assert code == 2 and "BlowupDetected" in err
    jsonschema.validate(json.loads(out.splitlines()[-1]), schemas.SIMULATE_ERROR)
    assert (tmp_path / "final.bin").exists()


def test_cfl_exit(capsys, tmp_path):
    p = tmp_path / "c.toml"
    p.write_text(SOLVER.replace("dt = 2e-3", "dt = 1.0").replace("t_end = 0.01", "t_end = 2.0"))
    assert run_cli(capsys, "simulate", "--config", p, "--out-dir", tmp_path)[0] == 2


def test_budget_outputs(capsys, tmp_path, solver_cfg):
    assert run_cli(capsys, "budget", "--config", solver_cfg, "--out-dir", tmp_path)[0] == 0
    lines = (tmp_path / "budget.ndjson").read_text().splitlines()
    assert len(lines) == 4
    for line in lines:
        rec = json.loads(line)
        jsonschema.validate(rec, schemas.BUDGET)
        assert rec["closure_residual"] < 1e-10
    with open(tmp_path / "cancellations.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0]) == schemas.CSV_COLUMNS["cancellations"]
    for r in rows:
        jsonschema.validate({k: float(v) for k, v in r.items()}, schemas.CANCELLATION)
        assert float(r["r312"]) < 1e-9


def test_probe_outputs(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "probe", "--N", 16, "--seeds", 2, "--lemma", "bernstein", "--out-dir", tmp_path)
    assert code == 0
    summary = json.loads(out)
    jsonschema.validate(summary, schemas.PROBE_SUMMARY)
    assert list(summary["max_ratio"]) == ["bernstein"]
    with open(tmp_path / "probes.csv") as fh:
        assert tuple(next(csv.reader(fh))) == schemas.CSV_COLUMNS["probes"]


def test_sweep_outputs(capsys, tmp_path):
    p = tmp_path / "s.toml"
    p.write_text(SWEEP)
    code, out, _ = run_cli(capsys, "sweep", "--config", p, "--out-dir", tmp_path)
    assert code == 0
    summary = json.loads(out)
    jsonschema.validate(summary, schemas.SWEEP_SUMMARY)
    assert summary == json.loads((tmp_path / "sweep_summary.json").read_text())
    with open(tmp_path / "sweep.csv") as fh:
        assert tuple(next(csv.reader(fh))) == schemas.CSV_COLUMNS["sweep"]
    # a solver file is not a sweep file
    q = tmp_path / "r.toml"
    q.write_text(SOLVER)
    assert run_cli(capsys, "sweep", "--config", q)[0] == 1


def test_sweep_abort_writes_partial(capsys, tmp_path):
    p = tmp_path / "s.toml"
    p.write_text(SWEEP + "blowup_threshold = 1e-6\n")
    code, _, _ = run_cli(capsys, "sweep", "--config", p, "--out-dir", tmp_path)
    assert code == 2
    summary = json.loads((tmp_path / "sweep_summary.json").read_text())
    jsonschema.validate(summary, schemas.SWEEP_SUMMARY)
    assert "aborted_eta" in summary


def test_riccati_outputs(capsys, tmp_path, solver_cfg):
    code, out, _ = run_cli(capsys, "riccati", "--config", solver_cfg, "--out-dir", tmp_path)
    assert code == 0
    summary = json.loads(out)
    jsonschema.validate(summary, schemas.RICCATI_SUMMARY)
    T = summary["T_guaranteed"]
    assert T is None or T > 0
    with open(tmp_path / "riccati.csv") as fh:
        assert tuple(next(csv.reader(fh))) == schemas.CSV_COLUMNS["riccati"]


def test_repeat_runs_byte_identical(capsys, tmp_path, solver_cfg):
    outs = []
    for name in ("a", "b"):
        d = tmp_path / name
        code, out, _ = run_cli(capsys, "simulate", "--config", solver_cfg, "--out-dir", d, "--seed-override", 5)
        assert code == 0
        outs.append((out, (d / "final.bin").read_bytes()))
    assert outs[0] == outs[1]


def test_threads_flag(capsys, tmp_path, solver_cfg):
    a = run_cli(capsys, "--threads", 1, "simulate", "--config", solver_cfg, "--out-dir", tmp_path)
    b = run_cli(capsys, "simulate", "--threads", 2, "--config", solver_cfg, "--out-dir", tmp_path)
    assert a[0] == b[0] == 0
    ea = [json.loads(x)["energy"] for x in a[1].splitlines()]
    eb = [json.loads(x)["energy"] for x in b[1].splitlines()]
    assert all(math.isclose(x, y, rel_tol=1e-12) for x, y in zip(ea, eb))
