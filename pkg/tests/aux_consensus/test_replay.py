"""Tests for trace persistence and replay."""

from dataclasses import replace

import pytest

from aux_consensus.core.exceptions import ConfigError, MalformedMessage, ReplayDivergence
from aux_consensus.core.state import ProtocolMode
from aux_consensus.sim.faults import FaultKind, FaultSpec
from aux_consensus.sim.simulator import InstanceConfig, queue_postponements, replay, run_instance
from aux_consensus.sim.trace import DELIVER, Trace


@pytest.fixture
def recorded():
    config = InstanceConfig.build(
        4,
        index=3,
        seed=8,
        adversary="random",
        faults=(FaultSpec(3, FaultKind.CRASH, 40),),
    )
    return run_instance(config)


@pytest.mark.parametrize(
    "mode",
    [
        ProtocolMode(),
        ProtocolMode(combine_messages=True),
        ProtocolMode(include_proofs=False),
        ProtocolMode(lazy_stop=False),
    ],
    ids=lambda m: m.label,
)
def test_replay_reproduces_outcome(mode):
    result = run_instance(InstanceConfig.build(7, index=2, adversary="heuristic", mode=mode))
    replayed = replay(result.trace)
    assert replayed.outcome() == result.outcome()
    assert replayed.max_postponed == result.max_postponed


def test_replay_through_file(tmp_path, recorded):
    path = recorded.trace.write(tmp_path / "nested" / "instance-3.trace")
    loaded = Trace.read(path)
    assert loaded.header == recorded.trace.header
    assert loaded.records == recorded.trace.records
    assert replay(loaded).outcome() == recorded.outcome()


def test_tampered_digest_diverges(recorded):
    trace = recorded.trace
    position = next(i for i, r in enumerate(trace.records) if r.kind == DELIVER and r.digest)
    trace.records[position] = replace(trace.records[position], digest="0" * 64)
    with pytest.raises(ReplayDivergence) as err:
        replay(trace)
    assert err.value.expected == "0" * 64


def test_tampered_payload_diverges(recorded):
    trace = recorded.trace
    delivered = [
        i
        for i, r in enumerate(trace.records)
        if r.kind == DELIVER and r.digest and r.process != r.peer
    ]
    position = delivered[len(delivered) // 2]
    trace.records[position] = replace(trace.records[position], payload=b"\x01")
    with pytest.raises(ReplayDivergence):
        replay(trace)


def test_mode_flags_must_match(recorded):
    other = replace(recorded.config, mode=ProtocolMode(combine_messages=True))
    with pytest.raises(ConfigError):
        replay(recorded.trace, other)
    assert replay(recorded.trace, recorded.config).outcome() == recorded.outcome()


def test_unsupported_header_version(recorded):
    trace = Trace(header={**recorded.trace.header, "version": 99}, records=[])
    with pytest.raises(ConfigError):
        replay(trace)


@pytest.mark.parametrize(
    "text",
    ["", "not json\n", "[1, 2]\n", '{"version": 1}\n[0, "deliver"]\n'],
)
def test_malformed_trace_text(text):
    with pytest.raises(MalformedMessage):
        Trace.from_text(text)


def test_trace_text_is_stable(recorded):
    text = recorded.trace.to_text()
    assert Trace.from_text(text).to_text() == text


def test_postponements_rebuilt_from_records(recorded):
    assert queue_postponements(recorded.trace, 4) == recorded.max_postponed
