"""
Typed state objects for one consensus process.

Plain dataclasses; all mutation happens inside `core.process`.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Union

from ..const import C_VAL
from ..protocol.coin import CoinState
from ..protocol.messages import AuxProofMsg, DecisionProof, ProtocolMessage
from ..protocol.tally import AuxStore


class Phase(str, Enum):
    """Where a process is in the round loop."""

    UNSET = "unset"
    AWAIT_ROUND0 = "await_round0"
    AWAIT_AUX = "await_aux"
    AWAIT_COIN = "await_coin"
    DECIDED = "decided"
    STOPPED = "stopped"


@dataclass(frozen=True)
class ProtocolMode:
    """Switchable protocol variants."""

    combine_messages: bool = False
    include_proofs: bool = True
    lazy_stop: bool = True

    @property
    def label(self) -> str:
        base = "combined" if self.combine_messages else "base"
        proofs = "proofs" if self.include_proofs else "no-proofs"
        return f"{base}/{proofs}"

    def to_dict(self) -> dict[str, bool]:
        return {
            "combine_messages": self.combine_messages,
            "include_proofs": self.include_proofs,
            "lazy_stop": self.lazy_stop,
        }


@dataclass(frozen=True)
class Outbound:
    """One message leaving a process; `target` None means broadcast."""

    message: Union[ProtocolMessage, bytes]
    target: Optional[int] = None

    @property
    def is_broadcast(self) -> bool:
        return self.target is None


@dataclass(frozen=True)
class Decision:
    """
    A decided value.

    `round` is the reported decision round; `basis_round` is the round whose
    votes and coin justified the value (they differ only for adopted proofs).
    """

    value: int
    round: int
    basis_round: int
    adopted: bool = False


@dataclass
class ProtocolOutput:
    """Effects of one transition."""

    messages: list[Outbound] = field(default_factory=list)
    decision: Optional[Decision] = None
    stopped: bool = False

    def broadcast(self, message: ProtocolMessage) -> None:
        self.messages.append(Outbound(message=message))

    def send(self, target: int, message: ProtocolMessage) -> None:
        self.messages.append(Outbound(message=message, target=target))

    def extend(self, other: ProtocolOutput) -> ProtocolOutput:
        self.messages.extend(other.messages)
        if other.decision is not None:
            self.decision = other.decision
        self.stopped = self.stopped or other.stopped
        return self


@dataclass
class PendingAux:
    """A vote waiting for coins (deferred) or for support (proofs-on-request)."""

    msg: AuxProofMsg
    origin: Optional[int]
    extra: frozenset = frozenset()
    missing: frozenset[int] = frozenset()
    requested: bool = False
    counted_deferred: bool = False
    checked_at: int = -1


@dataclass
class ProcessStats:
    """Per-process counters surfaced in instance results."""

    dropped: dict[str, int] = field(default_factory=dict)
    deferred: int = 0
    accepted: int = 0
    round_broadcasts: int = 0
    decision_proofs_sent: int = 0
    proof_requests_sent: int = 0
    proof_responses_sent: int = 0
    requests_ignored: int = 0
    requests_resolved: int = 0
    responses_unresolved: int = 0

    def drop(self, reason: str) -> None:
        self.dropped[reason] = self.dropped.get(reason, 0) + 1

    @property
    def total_dropped(self) -> int:
        return sum(self.dropped.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "dropped": dict(sorted(self.dropped.items())),
            "deferred": self.deferred,
            "accepted": self.accepted,
            "round_broadcasts": self.round_broadcasts,
            "decision_proofs_sent": self.decision_proofs_sent,
            "proof_requests_sent": self.proof_requests_sent,
            "proof_responses_sent": self.proof_responses_sent,
            "requests_ignored": self.requests_ignored,
            "requests_resolved": self.requests_resolved,
            "responses_unresolved": self.responses_unresolved,
        }


@dataclass
class ProcessState:
    """
    Complete state of one process.

    Holds the round/estimate registers, the aux_values store with its tally,
    the coin state, buffered votes and the decision.
    """

    index: int
    n: int
    t: int
    instance: bytes
    mode: ProtocolMode
    store: AuxStore
    coin: CoinState

    phase: Phase = Phase.UNSET
    phase_round: int = 0
    round: int = 0
    est: Optional[int] = None
    proposal: Optional[int] = None
    participation_round: int = 0

    decision: Optional[Decision] = None
    decision_proof: Optional[DecisionProof] = None

    deferred: dict = field(default_factory=dict)
    pending_support: dict = field(default_factory=dict)
    sent_proofs: dict[tuple[int, int], frozenset] = field(default_factory=dict)
    stats: ProcessStats = field(default_factory=ProcessStats)

    @property
    def quorum(self) -> int:
        return self.n - self.t

    @property
    def coin_map(self) -> dict[int, int]:
        return self.coin.coin_map

    def summary(self) -> dict[str, Any]:
        """Stable primitive view used for digests and results."""
        decision = None
        if self.decision is not None:
            decision = [
                self.decision.value,
                self.decision.round,
                self.decision.basis_round,
                self.decision.adopted,
            ]
        return {
            "index": self.index,
            "phase": self.phase.value,
            "phase_round": self.phase_round,
            "round": self.round,
            "est": "C" if self.est == C_VAL else self.est,
            "decision": decision,
            "coin_map": sorted(self.coin_map.items()),
            "store": self.store.version,
            "deferred": len(self.deferred),
            "pending": len(self.pending_support),
            "dropped": self.stats.total_dropped,
        }

    def digest(self) -> str:
        encoded = json.dumps(self.summary(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(encoded.encode("utf-8")).hexdigest()[:16]
