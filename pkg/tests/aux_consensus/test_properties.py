"""Tests for the safety and liveness checks."""

from dataclasses import replace

import pytest

from aux_consensus.core.state import Decision
from aux_consensus.sim.properties import (
    check_agreement,
    check_all,
    check_fairness,
    check_no_double_quorum,
    check_reliability,
    check_round_rule,
    check_termination,
    check_unanimous_exactness,
    check_validity,
    expected_unanimous_round,
)
from aux_consensus.sim.simulator import InstanceConfig, InstanceResult, run_instance
from aux_consensus.sim.trace import DELIVER


def result_with(decisions, proposals=(0, 1, 1, 0), coin_map=None, **kwargs):
    config = InstanceConfig.build(4, 1, proposals=proposals, coin="real")
    return InstanceResult(
        config=config,
        decisions=decisions,
        participation={i: 1 for i in decisions},
        messages_sent=0,
        bytes_sent=0,
        steps=10,
        stalled=kwargs.pop("stalled", False),
        coin_map=coin_map or {1: 0, 2: 1, 3: 0},
        **kwargs,
    )


def decided(value, round_=1, basis=None):
    return Decision(value=value, round=round_, basis_round=round_ if basis is None else basis)


def test_expected_unanimous_round():
    assert expected_unanimous_round({0: 1, 1: 0, 2: 0, 3: 1}, 1) == 3
    assert expected_unanimous_round({1: 0, 2: 0}, 1) is None


def test_agreement_violation():
    result = result_with({0: decided(0), 1: decided(1), 2: decided(0), 3: decided(0)})
    assert len(check_agreement(result)) == 1
    assert check_agreement(replace(result, decisions={0: decided(1)})) == []


def test_validity_violation():
    result = result_with({i: decided(1) for i in range(4)}, proposals="0")
    assert len(check_validity(result)) == 4


def test_termination():
    assert check_termination(result_with({0: decided(0), 1: None})) != []
    assert check_termination(result_with({0: decided(0)}, stalled=True)) != []
    assert check_termination(result_with({0: decided(0)})) == []


def test_round_rule():
    # first deciding round 1 (coin 0); next round with coin 0 is 3
    ok = result_with({0: decided(0, 1), 1: decided(0, 3, 3)})
    assert check_round_rule(ok) == []
    late = result_with({0: decided(0, 1), 1: decided(0, 2, 2)})
    assert check_round_rule(late) != []


def test_round_rule_uses_basis_round_for_adopted_decisions():
    adopted = Decision(value=0, round=4, basis_round=1, adopted=True)
    assert check_round_rule(result_with({0: decided(0, 1), 1: adopted})) == []


def test_unanimous_exactness():
    proposals = (1, 1, 1, 1)
    coins = {1: 0, 2: 1}
    assert check_unanimous_exactness(
        result_with({0: decided(1, 2)}, proposals=proposals, coin_map=coins)
    ) == []
    wrong_round = result_with({0: decided(1, 1)}, proposals=proposals, coin_map=coins)
    assert any("round" in v for v in check_unanimous_exactness(wrong_round))


def test_double_quorum_detected():
    tallies = {
        0: {(2, 0): frozenset({0, 1}), (2, 1): frozenset({1, 2, 3})},
        1: {(2, 0): frozenset({2})},
    }
    result = result_with({0: decided(0)}, tallies=tallies)
    assert len(check_no_double_quorum(result)) == 1


def test_fairness_bound():
    result = result_with({0: decided(0)}, max_postponed=10_000)
    assert check_fairness(result) != []
    assert check_fairness(replace(result, max_postponed=3)) == []


def test_clean_run_has_no_violations():
    result = run_instance(InstanceConfig.build(7, index=6, adversary="random"))
    assert check_all(result) == []


def test_reliability_detects_duplicate_delivery():
    result = run_instance(InstanceConfig.build(4, index=1))
    network = next(
        r for r in result.trace.of_kind(DELIVER) if r.process != r.peer
    )
    result.trace.records.append(network)
    assert any("never sent" in v for v in check_reliability(result))


def test_checks_skip_missing_trace():
    result = run_instance(InstanceConfig.build(4, index=1))
    result.trace = None
    assert check_reliability(result) == []
    assert check_all(result) == []


@pytest.mark.parametrize("index", range(3))
def test_unanimous_run_is_exact(index):
    result = run_instance(
        InstanceConfig.build(4, index=index, proposals="0", adversary="random")
    )
    assert check_unanimous_exactness(result) == []
