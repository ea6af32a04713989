"""Tests for the experiment runner, metrics and report formatting."""

import json

import pytest

from aux_consensus.core.config import ExperimentConfig
from aux_consensus.core.exceptions import ConfigError, ModeMismatch
from aux_consensus.stats.analyzer import ReportAnalyzer
from aux_consensus.stats.manager import (
    ExperimentRunner,
    compare_modes,
    run_experiment,
    trace_path,
)
from aux_consensus.stats.metrics import InstanceRow, ModeDiff, ModeSummary, Report, Spread


def small_config(**kwargs) -> ExperimentConfig:
    values = {"n_values": [4], "instances": 6, "warmup": 1, "seed": 3}
    values.update(kwargs)
    return ExperimentConfig(**values)


def row(index=0, **kwargs) -> InstanceRow:
    values = {
        "n": 4,
        "t": 1,
        "index": index,
        "mode": "base/proofs",
        "proposals": "0110",
        "decided_value": 1,
        "decision_round": 2,
        "participation_round": 2,
        "terminated": True,
        "messages_sent": 30,
        "bytes_sent": 3000,
    }
    values.update(kwargs)
    return InstanceRow(**values)


def test_spread():
    assert Spread.of([]) == Spread()
    spread = Spread.of([1, 2, 6])
    assert (spread.min, spread.avg, spread.max) == (1, 3.0, 6)


def test_summary_requires_rows():
    with pytest.raises(ValueError):
        ModeSummary.from_rows([])


def test_summary_aggregates():
    summary = ModeSummary.from_rows(
        [row(0, decision_round=1), row(1, decision_round=3, violations=["x"])]
    )
    assert summary.instances == 2
    assert summary.decision_round.avg == 2.0
    assert summary.total_messages == 60
    assert summary.avg_bytes == 3000.0
    assert summary.violations == 1


def test_report_groups_and_greenness():
    report = Report.from_rows({}, [row(1), row(0), row(0, n=7, t=2)])
    assert [(r.n, r.index) for r in report.rows] == [(4, 0), (4, 1), (7, 0)]
    assert [s.n for s in report.summaries] == [4, 7]
    assert report.green
    assert report.summary_for(7).instances == 1
    with pytest.raises(KeyError):
        report.summary_for(10)

    stalled = Report.from_rows({}, [row(0, terminated=False, stalled=True)])
    assert not stalled.green
    assert not Report.from_rows({}, []).green


def test_report_lists_violations():
    report = Report.from_rows({}, [row(2, violations=["agreement: split"])])
    assert report.violations == ["n=4 base/proofs #2: agreement: split"]


def test_mode_diff_deltas():
    base = Report.from_rows({}, [row(0), row(1)])
    combined = Report.from_rows(
        {}, [row(0, mode="combined/proofs", participation_round=3), row(1, mode="combined/proofs", participation_round=3)]
    )
    diff = ModeDiff(base=base, combined=combined)
    (delta,) = diff.deltas()
    assert delta["participation_round_delta"] == 1.0
    assert delta["decision_round_delta"] == 0.0
    assert diff.green and diff.value_matches == 2
    assert not ModeDiff(base=base, combined=combined, mismatches=[(4, 1)]).green


@pytest.mark.anyio
async def test_run_experiment_excludes_warmup():
    report = await ExperimentRunner(small_config()).run_experiment()
    assert [r.index for r in report.rows] == list(range(6))
    assert report.green
    summary = report.summary_for(4, "base/proofs")
    assert summary.instances == 6
    assert 1 <= summary.decision_round.min <= summary.decision_round.avg
    assert report.config["n"] == [4]


@pytest.mark.anyio
async def test_thread_pool_matches_serial():
    serial = await ExperimentRunner(small_config()).run_experiment()
    pooled = await ExperimentRunner(small_config(max_workers=3)).run_experiment()
    assert [r.to_dict() for r in pooled.rows] == [r.to_dict() for r in serial.rows]


@pytest.mark.anyio
async def test_traces_written_per_instance(tmp_path):
    config = small_config(trace_dir=str(tmp_path / "traces"), instances=2)
    runner = ExperimentRunner(config)
    await runner.run_experiment()
    for index in range(2):
        path = trace_path(config.trace_dir, runner.instance_config(4, index))
        assert path.exists()
        assert path.parent.name == "n4-base-proofs"
    assert not any(p.name.startswith("instance--") for p in tmp_path.rglob("*"))


@pytest.mark.anyio
async def test_event_log_lines(tmp_path):
    log = tmp_path / "events.jsonl"
    await ExperimentRunner(small_config(event_log_path=str(log))).run_experiment()
    kinds = [json.loads(line)["type"] for line in log.read_text().splitlines()]
    assert kinds.count("instance") == 6
    assert kinds.count("summary") == 1


@pytest.mark.anyio
async def test_compare_modes_pairs_identical_seeds():
    config = small_config(proposals="1", instances=4)
    diff = await ExperimentRunner(config).compare_modes()
    assert diff.pairs == 4
    assert diff.value_matches == 4
    assert diff.green
    (delta,) = diff.deltas()
    assert delta["combined_mode"] == "combined/proofs"
    assert delta["broadcasts_per_round_combined"] < delta["broadcasts_per_round_base"]


@pytest.mark.anyio
async def test_compare_modes_strict_mismatch(monkeypatch):
    runner = ExperimentRunner(small_config(instances=2))
    original = ExperimentRunner.run_experiment

    async def flipped(self):
        report = await original(self)
        if self.config.combine_messages:
            for item in report.rows:
                item.decided_value = 1 - item.decided_value
        return report

    monkeypatch.setattr(ExperimentRunner, "run_experiment", flipped)
    with pytest.raises(ModeMismatch) as err:
        await runner.compare_modes(strict=True)
    assert err.value.mismatches == [(4, 0), (4, 1)]
    diff = await runner.compare_modes(strict=False)
    assert not diff.green


def test_blocking_wrappers():
    config = small_config(instances=2, warmup=0)
    assert run_experiment(config).green
    assert compare_modes(config).pairs == 2


def test_invalid_config_rejected():
    with pytest.raises(ConfigError):
        ExperimentRunner(small_config(instances=0))


@pytest.mark.parametrize("fmt", ["json", "csv", "text"])
def test_report_emit_is_deterministic(tmp_path, fmt):
    report = run_experiment(small_config(instances=3))
    analyzer = ReportAnalyzer()
    first = analyzer.report_emit(report, fmt, tmp_path / f"a.{fmt}")
    second = analyzer.report_emit(report, fmt, tmp_path / f"b.{fmt}")
    assert first == second
    assert (tmp_path / f"a.{fmt}").read_bytes() == (tmp_path / f"b.{fmt}").read_bytes()


def test_csv_and_json_load_to_identical_summaries(tmp_path):
    report = run_experiment(small_config(instances=4, n_values=[4, 7]))
    analyzer = ReportAnalyzer()
    analyzer.report_emit(report, "csv", tmp_path / "report.csv")
    analyzer.report_emit(report, "json", tmp_path / "report.json")
    from_csv = analyzer.load_report(tmp_path / "report.csv")
    from_json = analyzer.load_report(tmp_path / "report.json")
    assert [s.to_dict() for s in from_csv.summaries] == [s.to_dict() for s in from_json.summaries]
    assert [s.to_dict() for s in from_json.summaries] == [s.to_dict() for s in report.summaries]


def test_text_report_mentions_result():
    report = Report.from_rows({}, [row(0), row(1, violations=["fairness: late"])])
    text = ReportAnalyzer().format_output(report, "text")
    assert "n=4 t=1 mode=base/proofs" in text
    assert "RESULT: 1 violation(s)" in text
    assert "fairness: late" in text


def test_diff_formats():
    base = Report.from_rows({}, [row(0)])
    combined = Report.from_rows({}, [row(0, mode="combined/proofs")])
    diff = ModeDiff(base=base, combined=combined)
    analyzer = ReportAnalyzer()
    assert "RESULT: green" in analyzer.format_diff(diff, "text")
    assert json.loads(analyzer.format_diff(diff, "json"))["value_matches"] == 1
    assert len(analyzer.format_diff(diff, "csv").splitlines()) == 3


def test_unknown_format():
    with pytest.raises(ConfigError):
        ReportAnalyzer().format_output(Report.from_rows({}, [row()]), "xml")


def test_load_report_errors(tmp_path):
    analyzer = ReportAnalyzer()
    with pytest.raises(FileNotFoundError):
        analyzer.load_report(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    with pytest.raises(ValueError):
        analyzer.load_report(bad)
    empty = tmp_path / "empty.json"
    empty.write_text("{}")
    with pytest.raises(ValueError):
        analyzer.load_report(empty)


@pytest.mark.slow
def test_mode_equivalence_over_many_pairs():
    diff = compare_modes(
        ExperimentConfig(n_values=[4], instances=300, warmup=0, seed=12), strict=True
    )
    assert diff.value_matches == 300
    assert len(diff.combined.rows) == 300
    assert all(
        row.participation_round == row.decision_round + 1 for row in diff.combined.rows
    )
    (delta,) = diff.deltas()
    assert abs(delta["decision_round_delta"]) <= 0.5
