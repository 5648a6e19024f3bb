import csv
import json

import pytest

from ncma.cli import ExperimentSpec, cmd_replay, cmd_stats, cmd_sweep, main, parse_config
from ncma.protocol import ConfigError, SessionConfig, run_session

CONFIG = """
# small balanced sweep
snr_a = [1, 4]
snr_b = [1, 4]
L_A = 4
L_B = [4]
variant = [NCMA-RMUD, RMUD]
repetitions = 2
slots = 60
K = 4
seed = 3
"""


def test_parse_config():
    spec = parse_config(CONFIG)
    assert spec.snr_a == [1.0, 4.0]
    assert spec.L_A == [4]
    assert spec.variant == ["NCMA-RMUD", "RMUD"]
    assert spec.repetitions == 2 and spec.K == 4
    assert len(list(spec.points())) == 2 * 2 * 2


@pytest.mark.parametrize("text", ["snr_a = []", "repetitions = 0", "variant = [FOO]",
                                  "channel = awgn"])
def test_experiment_validation(text):
    with pytest.raises(ConfigError):
        parse_config(text).validate()


@pytest.mark.parametrize("text", ["nonsense", "bogus = 1", "slots = many", "snr_a = [1, 2"])
def test_parse_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_sweep_outputs(tmp_path):
    spec = parse_config(CONFIG + f"\noutput = {tmp_path / 'out'}\n")
    rows, code = cmd_sweep(spec)
    assert code == 0
    with open(tmp_path / "out" / "sweep.csv") as f:
        table = list(csv.DictReader(f))
    kinds = [r["kind"] for r in table]
    assert kinds.count("point") == 16 and kinds.count("mean") == 8 and kinds.count("stderr") == 8
    side = json.loads((tmp_path / "out" / "sweep.json").read_text())
    assert side["spec_hash"] == spec.spec_hash() and side["failed"] == 0
    for r in table:
        if r["kind"] == "point":
            assert len(r["config_hash"]) == 16
            assert 0 <= float(r["th_total"]) <= float(r["upper_bound"]) + 1e-12


def test_sweep_is_reproducible(tmp_path):
    outs = []
    for name in ("a", "b"):
        spec = parse_config(CONFIG + f"\noutput = {tmp_path / name}\n")
        cmd_sweep(spec)
        outs.append((tmp_path / name / "sweep.csv").read_bytes())
    assert outs[0] == outs[1]


def test_sweep_failed_point_sets_exit_code(tmp_path):
    spec = ExperimentSpec(L_A=[4, 300], L_B=[4], slots=20, K=4, output=str(tmp_path))
    rows, code = cmd_sweep(spec)
    assert code == 1
    assert sum(r["status"] != "ok" for r in rows if r["kind"] == "point") == 1


def test_sweep_worker_pool(tmp_path):
    spec = parse_config(CONFIG + f"\noutput = {tmp_path}\n")
    spec.variant = ["NCMA-RMUD"]
    serial, _ = cmd_sweep(spec, workers=1)
    pooled, _ = cmd_sweep(spec, workers=2)
    assert serial == pooled


@pytest.fixture
def trace_path(tmp_path):
    _, trace = run_session(SessionConfig(nodes={"A": 2.0, "B": 2.0}, L=8, K=4, slots=300, seed=5))
    p = tmp_path / "trace.jsonl"
    trace.save(p)
    return p


def test_replay_table_ordering(trace_path):
    rows = cmd_replay(trace_path)
    th = {r["mac"]: r["th_total"] for r in rows}
    assert th["su"] <= th["mud"] <= th["ncma"] <= rows[0]["upper_bound"]


def test_replay_L_sweep(trace_path):
    rows = cmd_replay(trace_path, L_B=[4, 8], ratio=1.5, macs=("ncma",))
    assert [(r["L_A"], r["L_B"]) for r in rows] == [(6, 4), (12, 8)]


def test_stats(trace_path):
    out = cmd_stats(trace_path)
    assert out["slots"] == 300
    assert sum(out["groups"].values()) == pytest.approx(1.0)
    assert 0 <= out["upper_bound"] <= 2


def test_main_run_and_replay(tmp_path, capsys):
    t = tmp_path / "t.jsonl"
    assert main(["run", "--snr-a", "5", "--slots", "40", "--K", "4", "--L-A", "4",
                 "--trace", str(t)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["stats"]["slots"] == 40
    assert main(["replay", str(t)]) == 0
    assert capsys.readouterr().out.startswith("mac,L_A,L_B")
    assert main(["stats", str(t)]) == 0


def test_main_sweep_uses_env_config(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("snr_a = [3]\nsnr_b = [3]\nslots = 30\nK = 4\nL_A = [4]\nL_B = [4]\n")
    monkeypatch.setenv("NCMA_CONFIG", str(cfg))
    assert main(["sweep", "-o", str(tmp_path / "o"), "--seed", "9"]) == 0
    side = json.loads((tmp_path / "o" / "sweep.json").read_text())
    assert side["spec"]["seed"] == 9 and side["spec"]["slots"] == 30


def test_main_reports_bad_trace(tmp_path, capsys, trace_path):
    lines = trace_path.read_text().splitlines()
    lines[4] = lines[4].replace('"event"', '"evnt"')
    trace_path.write_text("\n".join(lines) + "\n")
    assert main(["replay", str(trace_path)]) == 2
    assert "slot 3" in capsys.readouterr().err


def test_main_missing_config(tmp_path, capsys):
    assert main(["sweep", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_balanced_sweep_trends(tmp_path):
    spec = ExperimentSpec(snr_a=[-1.0, 1.0, 3.0, 6.0], snr_b=[0.0], L_A=[8], L_B=[8], slots=600,
                          K=4, output=str(tmp_path))
    spec.snr_b = spec.snr_a
    rows, _ = cmd_sweep(spec)
    bal = [r for r in rows if r["kind"] == "point" and r["snr_a"] == r["snr_b"]]
    ab = [r["Pr_AB"] for r in bal]
    none = [r["Pr_NONE"] for r in bal]
    assert all(y >= x - 0.02 for x, y in zip(ab, ab[1:]))
    assert all(y <= x + 0.02 for x, y in zip(none, none[1:]))
    assert ab[-1] > ab[0]


def test_unbalanced_sweep_helps_both_nodes(tmp_path):
    spec = ExperimentSpec(snr_a=[2.0], snr_b=[0.0, 4.0, 8.0], L_A=[8], L_B=[8], slots=1000, K=4,
                          output=str(tmp_path))
    rows, _ = cmd_sweep(spec)
    pts = [r for r in rows if r["kind"] == "point"]
    for node in ("th_A", "th_B"):
        th = [r[node] for r in pts]
        assert all(y >= x - 0.02 for x, y in zip(th, th[1:])), (node, th)


def test_absolute_L_B_does_not_matter(tmp_path):
    _, trace = run_session(SessionConfig(nodes={"A": 2.0, "B": 2.0}, L=16, K=4, slots=2000, seed=4))
    p = tmp_path / "t.jsonl"
    trace.save(p)
    th = [r["th_total"] for r in cmd_replay(p, L_B=[4, 8, 16, 32], ratio=1.5, macs=("ncma",))]
    assert max(th) <= 1.05 * min(th)
