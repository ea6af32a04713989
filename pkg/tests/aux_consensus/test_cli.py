"""Tests for the command-line interface."""

import json

import pytest

from aux_consensus import cli
from aux_consensus.const import GRID_LARGE

SMALL = ["--n", "4", "--instances", "2", "--warmup", "0", "--seed", "5"]


def run_cli(capsys, *argv):
    with pytest.raises(SystemExit) as exit_info:
        cli.main(list(argv))
    captured = capsys.readouterr()
    return exit_info.value.code, captured.out, captured.err


def test_run_green_json(capsys):
    code, out, _ = run_cli(capsys, "run", *SMALL, "--format", "json")
    assert code == cli.EXIT_OK
    report = json.loads(out)
    assert report["green"] is True
    assert len(report["rows"]) == 2


def test_run_mode_flags(capsys):
    code, out, _ = run_cli(
        capsys,
        "run",
        *SMALL,
        "--combine-messages",
        "--no-include-proofs",
        "--no-lazy-stop",
        "--format",
        "json",
    )
    assert code == cli.EXIT_OK
    report = json.loads(out)
    assert {r["mode"] for r in report["rows"]} == {"combined/no-proofs"}
    assert report["config"]["lazy_stop"] is False


def test_run_writes_out_file(capsys, tmp_path):
    target = tmp_path / "report.csv"
    code, out, err = run_cli(capsys, "run", *SMALL, "--format", "csv", "--out", str(target))
    assert code == cli.EXIT_OK
    assert out == ""
    assert str(target) in err
    assert target.read_text().startswith("n,t,index,mode")


def test_flags_override_config_file(capsys, tmp_path):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps({"n": [4], "instances": 5, "warmup": 0, "adversary": "random"}))
    code, out, _ = run_cli(
        capsys, "run", "--config", str(path), "--instances", "1", "--format", "json"
    )
    assert code == cli.EXIT_OK
    report = json.loads(out)
    assert len(report["rows"]) == 1
    assert report["config"]["adversary"] == "random"


def test_grid_preset():
    parser = cli.build_parser()
    args = parser.parse_args(["run", "--grid", "large"])
    assert cli.load_config(args).n_values == list(GRID_LARGE)
    args = parser.parse_args(["run", "--grid", "large", "--n", "4"])
    assert cli.load_config(args).n_values == [4]


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--n", "4", "--t", "2"],
        ["run", "--faults", "0:silent,1:silent", "--n", "4"],
        ["run", "--config", "/nonexistent/experiment.json"],
        ["replay", "/nonexistent/instance-0.trace"],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run_cli(capsys, *argv)
    assert code == cli.EXIT_USAGE
    assert err.startswith("Error:")


def test_argparse_rejects_unknown_adversary(capsys):
    code, _, _ = run_cli(capsys, "run", "--adversary", "omniscient")
    assert code == 2


def test_compare_text(capsys):
    code, out, _ = run_cli(capsys, "compare", *SMALL, "--proposals", "1", "--format", "text")
    assert code == cli.EXIT_OK
    assert "Value Matches:        2" in out
    assert "RESULT: green" in out


@pytest.fixture
def traces(capsys, tmp_path):
    trace_dir = tmp_path / "traces"
    code, _, _ = run_cli(capsys, "run", *SMALL, "--trace-dir", str(trace_dir))
    assert code == cli.EXIT_OK
    return sorted(trace_dir.rglob("*.trace"))


def test_replay_traces(capsys, traces):
    assert len(traces) == 2
    code, out, _ = run_cli(capsys, "replay", *map(str, traces), "--format", "json")
    assert code == cli.EXIT_OK
    rows = json.loads(out)
    assert [row["trace"] for row in rows] == [str(p) for p in traces]
    assert all(row["violations"] == [] for row in rows)


def test_replay_mode_mismatch(capsys, traces):
    code, _, err = run_cli(capsys, "replay", str(traces[0]), "--combine-messages")
    assert code == cli.EXIT_USAGE
    assert "cannot replay" in err


def test_replay_divergence_exits_1(capsys, traces):
    path = traces[0]
    lines = path.read_text().splitlines()
    for position, line in enumerate(lines[1:], start=1):
        record = json.loads(line)
        if record[1] == "deliver" and record[5]:
            record[5] = "f" * 16
            lines[position] = json.dumps(record, separators=(",", ":"))
            break
    path.write_text("\n".join(lines) + "\n")

    code, _, err = run_cli(capsys, "replay", str(path))
    assert code == cli.EXIT_VIOLATION
    assert "Replay diverged" in err
