"""
Safety and liveness checks over finished instances.

Each `check_*` function takes an `InstanceResult` and returns a list of
human-readable violations (empty when the property holds). Trace-based
checks are skipped for results that carry no trace.
"""

from __future__ import annotations

import logging
from collections import Counter
from typing import Callable, Iterable, Optional

from ..core.exceptions import ConsensusError
from ..protocol.codec import decode, decode_vote
from ..protocol.messages import AuxProofMsg, CombinedMsg, SignedAux
from ..protocol.validity import missing_coins, prev_r, resolve_value
from .simulator import InstanceResult
from .trace import DELIVER, DISCARD, FLUSH, SEND, VALID

_LOGGER = logging.getLogger(__name__)

Check = Callable[[InstanceResult], list[str]]


def _honest_proposals(result: InstanceResult) -> set[int]:
    proposals = result.config.proposals
    return {proposals[i] for i in result.config.honest}


def _valid_records(result: InstanceResult) -> Iterable[tuple[int, int, int]]:
    """(receiver, round, resolved value) of every vote an honest process accepted."""
    if result.trace is None:
        return
    honest = set(result.config.honest)
    for record in result.trace.of_kind(VALID):
        if record.process in honest:
            round_, value = decode_vote(record.payload)
            yield record.process, round_, value


def check_agreement(result: InstanceResult) -> list[str]:
    values = result.decided_values
    if len(values) > 1:
        detail = {
            i: d.value for i, d in sorted(result.decisions.items()) if d is not None
        }
        return [f"agreement: honest processes decided different values {detail}"]
    return []


def check_validity(result: InstanceResult) -> list[str]:
    proposed = _honest_proposals(result)
    return [
        f"validity: p{i} decided {d.value}, proposed only {sorted(proposed)}"
        for i, d in sorted(result.decisions.items())
        if d is not None and d.value not in proposed
    ]


def check_termination(result: InstanceResult) -> list[str]:
    if result.stalled:
        return [f"termination: stalled after {result.steps} steps"]
    undecided = [i for i, d in sorted(result.decisions.items()) if d is None]
    if undecided:
        return [f"termination: p{undecided} never decided"]
    return []


def expected_unanimous_round(coin_map: dict[int, int], value: int) -> Optional[int]:
    """First round r >= 1 whose coin equals `value`."""
    for round_ in sorted(r for r in coin_map if r >= 1):
        if coin_map[round_] == value:
            return round_
    return None


def check_unanimous_exactness(result: InstanceResult) -> list[str]:
    """With unanimous honest input v, decisions land on the first coin equal to v."""
    proposed = _honest_proposals(result)
    if len(proposed) != 1:
        return []
    value = next(iter(proposed))
    violations = []

    override = result.config.coin_override()
    if override is not None:
        for round_, bit in sorted(result.coin_map.items()):
            if override.bit(round_) != bit:
                violations.append(
                    f"unanimous: coin of round {round_} is {bit}, "
                    f"seeded sequence says {override.bit(round_)}"
                )

    expected = expected_unanimous_round(result.coin_map, value)
    for i, decision in sorted(result.decisions.items()):
        if decision is None:
            continue
        if decision.value != value:
            violations.append(f"unanimous: p{i} decided {decision.value}, input was {value}")
        elif decision.basis_round != expected:
            violations.append(
                f"unanimous: p{i} decided in round {decision.basis_round}, "
                f"first coin equal to {value} is round {expected}"
            )
    return violations


def check_round_rule(result: InstanceResult) -> list[str]:
    """
    Honest decisions fall in the first deciding round r_f or in the first
    later round whose coin equals the coin of r_f.
    """
    rounds = {
        i: d.basis_round for i, d in result.decisions.items() if d is not None
    }
    if not rounds:
        return []
    first = min(rounds.values())
    coin_map = result.coin_map
    if first not in coin_map:
        return [f"round rule: coin of first deciding round {first} unknown"]

    allowed = {first}
    for later in sorted(r for r in coin_map if r > first):
        if coin_map[later] == coin_map[first]:
            allowed.add(later)
            break
    return [
        f"round rule: p{i} decided in round {r}, allowed {sorted(allowed)}"
        for i, r in sorted(rounds.items())
        if r not in allowed
    ]


def check_no_double_quorum(result: InstanceResult) -> list[str]:
    """No round ever gathers n-t distinct signers for both values."""
    quorum = result.config.n - result.config.t
    merged: dict[tuple[int, int], set[int]] = {}
    for cells in result.tallies.values():
        for key, signers in cells.items():
            merged.setdefault(key, set()).update(signers)

    rounds = sorted({r for r, _ in merged})
    return [
        f"double quorum: round {r} holds {quorum}+ signers for both values"
        for r in rounds
        if len(merged.get((r, 0), ())) >= quorum and len(merged.get((r, 1), ())) >= quorum
    ]


def check_honest_support(result: InstanceResult) -> list[str]:
    """Votes accepted for rounds >= 1 only carry values some honest process proposed."""
    proposed = _honest_proposals(result)
    return [
        f"honest support: p{receiver} accepted AUX({round_},{value}) "
        f"but honest processes proposed {sorted(proposed)}"
        for receiver, round_, value in _valid_records(result)
        if round_ >= 1 and value not in proposed
    ]


def _signed_votes(message) -> list[SignedAux]:
    if isinstance(message, CombinedMsg):
        message = message.aux
    if isinstance(message, AuxProofMsg):
        return [message.signed, *message.proofs]
    return []


def _possible_signers(result: InstanceResult) -> dict[tuple[int, int], set[int]]:
    """
    Every signer that could ever back (round, value): honest processes that
    actually signed it, plus every faulty process.
    """
    config = result.config
    honest = set(config.honest)
    signers: dict[tuple[int, int], set[int]] = {}
    for record in result.trace.of_kind(SEND):
        if record.process not in honest or record.peer != record.process:
            continue
        try:
            message = decode(record.payload)
        except ConsensusError:
            continue
        for vote in _signed_votes(message):
            if vote.signer not in honest:
                continue
            value = resolve_value(vote.round, vote.value, result.coin_map)
            if value is not None:
                signers.setdefault((vote.round, value), set()).add(vote.signer)
    return signers


def _could_be_valid(
    round_: int, value: int, possible: dict[tuple[int, int], set[int]], result: InstanceResult
) -> Optional[bool]:
    config = result.config
    faulty = len(config.faults)
    coin_map = result.coin_map

    def backing(r: int) -> int:
        return len(possible.get((r, value), ())) + faulty

    if round_ == 0:
        return True
    if round_ == 1:
        return backing(0) >= config.t + 1
    if missing_coins(round_, coin_map):
        return None
    p = prev_r(round_, value, coin_map)
    if p == 0:
        return backing(0) >= config.t + 1
    return backing(p) >= config.n - config.t


def check_monotone_validity(result: InstanceResult) -> list[str]:
    """
    Once a value cannot be valid in some round, no later round accepts it.

    A value counts as "cannot be valid" in round r_f when even every honest
    signature ever produced plus every faulty signer fails the predicate.
    """
    if result.trace is None:
        return []
    possible = _possible_signers(result)
    violations = []
    verdicts: dict[tuple[int, int], Optional[bool]] = {}
    for receiver, round_, value in _valid_records(result):
        for earlier in range(1, round_):
            key = (earlier, value)
            if key not in verdicts:
                verdicts[key] = _could_be_valid(earlier, value, possible, result)
            if verdicts[key] is False:
                violations.append(
                    f"monotone validity: p{receiver} accepted AUX({round_},{value}) "
                    f"although {value} could not be valid in round {earlier}"
                )
                break
    return violations


def check_fairness(result: InstanceResult) -> list[str]:
    bound = result.config.fairness_bound
    worst = result.max_postponed
    if worst > bound:
        return [f"fairness: an event was postponed {worst} times, bound is {bound}"]
    return []


def check_reliability(result: InstanceResult) -> list[str]:
    """
    Every network send is consumed exactly once, unaltered: delivered,
    discarded at a non-live target, or flushed.
    """
    if result.trace is None:
        return []
    sent: Counter = Counter()
    consumed: Counter = Counter()
    flushed_live = []
    for record in result.trace:
        if record.process == record.peer:
            continue
        if record.kind == SEND:
            sent[(record.peer, record.process, record.payload)] += 1
        elif record.kind in (DELIVER, DISCARD, FLUSH):
            consumed[(record.process, record.peer, record.payload)] += 1
            if (
                record.kind == FLUSH
                and not result.stalled
                and result.decisions.get(record.process, False) is None
            ):
                flushed_live.append(record.process)

    violations = []
    created = consumed - sent
    lost = sent - consumed
    if created:
        violations.append(f"reliability: {sum(created.values())} deliveries never sent")
    if lost:
        violations.append(f"reliability: {sum(lost.values())} sends never consumed")
    if flushed_live:
        violations.append(
            f"reliability: undelivered messages to live p{sorted(set(flushed_live))}"
        )
    return violations


SAFETY_CHECKS: tuple[Check, ...] = (
    check_agreement,
    check_validity,
    check_round_rule,
    check_no_double_quorum,
    check_honest_support,
    check_monotone_validity,
)

CHECKS: tuple[Check, ...] = (
    *SAFETY_CHECKS,
    check_termination,
    check_unanimous_exactness,
    check_fairness,
    check_reliability,
)


def check_all(result: InstanceResult, checks: Iterable[Check] = CHECKS) -> list[str]:
    """Run every check; the result is empty iff the instance is clean."""
    violations: list[str] = []
    for check in checks:
        violations.extend(check(result))
    if violations:
        _LOGGER.warning(
            "Instance %d: %d violation(s), first: %s",
            result.config.index,
            len(violations),
            violations[0],
        )
    return violations


__all__ = [
    "CHECKS",
    "SAFETY_CHECKS",
    "check_agreement",
    "check_all",
    "check_fairness",
    "check_honest_support",
    "check_monotone_validity",
    "check_no_double_quorum",
    "check_reliability",
    "check_round_rule",
    "check_termination",
    "check_unanimous_exactness",
    "check_validity",
    "expected_unanimous_round",
]
