"""
Deterministic discrete-event simulator for one consensus instance.

The loop repeatedly asks the adversary for the next queued delivery, hands it
to its target and enqueues whatever the target sends. Self-addressed messages
bypass the queue and are handled immediately. Every effect is recorded in a
`Trace`, which `replay` can re-execute against fresh processes.
"""

from __future__ import annotations

import hashlib
import logging
import random
from collections import deque
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Any, Iterable, Optional, Sequence, Union

from ..const import (
    COIN_MODES,
    COIN_OVERRIDE,
    DEFAULT_ADVERSARY,
    DEFAULT_COIN,
    DEFAULT_COIN_HORIZON,
    DEFAULT_FAIRNESS_FACTOR,
    DEFAULT_SEED,
    DEFAULT_STEP_CAP,
    DOMAIN,
    PROVIDER_MOCK_PRF,
)
from ..core.exceptions import ConfigError, ReplayDivergence
from ..core.interfaces import ByzantineBehavior
from ..core.process import ConsensusProcess
from ..core.state import Decision, Outbound, Phase, ProtocolMode
from ..crypto.keyring import KeyRing
from ..crypto.provider import get_provider
from ..protocol.codec import decode, encode, kind_of
from ..protocol.coin import CoinOverride
from ..protocol.messages import (
    AuxProofMsg,
    CoinShare,
    CombinedMsg,
    DecisionProof,
    ProofRequest,
    ProofResponse,
    ProtocolMessage,
)
from .faults import FaultKind, FaultSpec, FlippingProcess, build_behavior, byzantine_step
from .network import AdversaryPolicy, MessageQueue, make_scheduler
from .trace import CRASH, DELIVER, DISCARD, FLUSH, SEND, START, STOP, Trace, TraceRecord

_LOGGER = logging.getLogger(__name__)

TRACE_VERSION = 1

# Message kinds that make up the per-round broadcast pattern
ROUND_KINDS = frozenset({"aux", "coin", "combined"})


def derive_int(label: str) -> int:
    """Stable 64-bit integer from a label."""
    return int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "little")


def instance_tag(seed: int, index: int) -> bytes:
    return hashlib.sha256(f"{DOMAIN}:{seed}:{index}".encode("utf-8")).digest()


def seeded_proposals(seed: int, index: int, n: int) -> tuple[int, ...]:
    """Random proposals that depend only on (seed, index, n)."""
    rng = random.Random(f"proposals:{seed}:{index}:{n}")
    return tuple(rng.getrandbits(1) for _ in range(n))


def resolve_proposals(
    source: Union[str, Sequence[int]], seed: int, index: int, n: int
) -> tuple[int, ...]:
    """Proposals from "random", a bit string ("1" means unanimous) or a sequence."""
    if isinstance(source, str):
        if source == "random":
            return seeded_proposals(seed, index, n)
        bits = tuple(int(ch) for ch in source)
        return bits * n if len(bits) == 1 else bits
    return tuple(int(bit) for bit in source)


@dataclass(frozen=True)
class InstanceConfig:
    """Everything that determines one simulated execution."""

    n: int
    t: int
    index: int = 0
    seed: int = DEFAULT_SEED
    proposals: tuple[int, ...] = ()
    mode: ProtocolMode = ProtocolMode()
    coin: str = DEFAULT_COIN
    adversary: str = DEFAULT_ADVERSARY
    fairness_factor: int = DEFAULT_FAIRNESS_FACTOR
    faults: tuple[FaultSpec, ...] = ()
    provider: str = PROVIDER_MOCK_PRF
    step_cap: int = DEFAULT_STEP_CAP
    coin_horizon: int = DEFAULT_COIN_HORIZON

    def __post_init__(self) -> None:
        errors = []
        if self.n < 1 or self.t < 0 or self.n < 3 * self.t + 1:
            errors.append(f"n must be >= 3t+1 (n={self.n}, t={self.t})")
        if len(self.proposals) != self.n:
            errors.append(f"need {self.n} proposals, got {len(self.proposals)}")
        if any(p not in (0, 1) for p in self.proposals):
            errors.append(f"proposals must be binary: {self.proposals}")
        if len(self.faults) > self.t:
            errors.append(f"{len(self.faults)} faulty processes exceed t={self.t}")
        if len({f.index for f in self.faults}) != len(self.faults):
            errors.append("a process can carry only one fault")
        if any(not 0 <= f.index < self.n for f in self.faults):
            errors.append("fault index out of range")
        if self.coin not in COIN_MODES:
            errors.append(f"unknown coin mode {self.coin!r}")
        if self.step_cap < 1:
            errors.append(f"step_cap must be > 0, got {self.step_cap}")
        if errors:
            raise ConfigError("; ".join(errors), errors)

    @classmethod
    def build(
        cls,
        n: int,
        t: Optional[int] = None,
        index: int = 0,
        seed: int = DEFAULT_SEED,
        proposals: Union[str, Sequence[int]] = "random",
        **kwargs: Any,
    ) -> InstanceConfig:
        """Convenience constructor deriving t and proposals."""
        t = max(0, (n - 1) // 3) if t is None else t
        return cls(
            n=n,
            t=t,
            index=index,
            seed=seed,
            proposals=resolve_proposals(proposals, seed, index, n),
            **kwargs,
        )

    @property
    def instance_tag(self) -> bytes:
        return instance_tag(self.seed, self.index)

    @property
    def key_seed(self) -> int:
        return derive_int(f"keys:{self.seed}:{self.index}:{self.n}")

    @property
    def coin_seed(self) -> int:
        return derive_int(f"coin:{self.seed}:{self.index}")

    @property
    def fairness_bound(self) -> int:
        return self.fairness_factor * self.n

    @property
    def policy(self) -> AdversaryPolicy:
        return AdversaryPolicy.for_instance(
            self.adversary,
            derive_int(f"adversary:{self.seed}:{self.index}"),
            self.n,
            self.fairness_factor,
        )

    @property
    def fault_map(self) -> dict[int, FaultSpec]:
        return {fault.index: fault for fault in self.faults}

    @property
    def honest(self) -> list[int]:
        faulty = self.fault_map
        return [i for i in range(self.n) if i not in faulty]

    def coin_override(self) -> Optional[CoinOverride]:
        return CoinOverride(self.coin_seed) if self.coin == COIN_OVERRIDE else None

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": TRACE_VERSION,
            "n": self.n,
            "t": self.t,
            "index": self.index,
            "seed": self.seed,
            "proposals": list(self.proposals),
            "mode": self.mode.to_dict(),
            "coin": self.coin,
            "adversary": self.adversary,
            "fairness_factor": self.fairness_factor,
            "faults": [fault.to_list() for fault in self.faults],
            "provider": self.provider,
            "step_cap": self.step_cap,
            "coin_horizon": self.coin_horizon,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> InstanceConfig:
        if data.get("version") != TRACE_VERSION:
            raise ConfigError(f"unsupported trace version {data.get('version')!r}")
        try:
            return cls(
                n=int(data["n"]),
                t=int(data["t"]),
                index=int(data["index"]),
                seed=int(data["seed"]),
                proposals=tuple(int(p) for p in data["proposals"]),
                mode=ProtocolMode(**data["mode"]),
                coin=str(data["coin"]),
                adversary=str(data["adversary"]),
                fairness_factor=int(data["fairness_factor"]),
                faults=tuple(FaultSpec.from_list(f) for f in data["faults"]),
                provider=str(data["provider"]),
                step_cap=int(data["step_cap"]),
                coin_horizon=int(data["coin_horizon"]),
            )
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError(f"incomplete instance header: {err}") from err


@dataclass
class InstanceResult:
    """Outcome and counters of one execution."""

    config: InstanceConfig
    decisions: dict[int, Optional[Decision]]
    participation: dict[int, int]
    messages_sent: int
    bytes_sent: int
    steps: int
    stalled: bool
    digests: dict[int, str] = field(default_factory=dict)
    coin_map: dict[int, int] = field(default_factory=dict)
    process_stats: dict[int, dict[str, Any]] = field(default_factory=dict)
    tallies: dict[int, dict[tuple[int, int], frozenset[int]]] = field(
        default_factory=dict
    )
    round_broadcasts: dict[tuple[int, int], int] = field(default_factory=dict)
    max_postponed: int = 0
    trace: Optional[Trace] = None

    @property
    def honest(self) -> list[int]:
        return sorted(self.decisions)

    @property
    def decided_values(self) -> set[int]:
        return {d.value for d in self.decisions.values() if d is not None}

    @property
    def terminated(self) -> bool:
        return not self.stalled and all(d is not None for d in self.decisions.values())

    @property
    def agreed(self) -> bool:
        return len(self.decided_values) <= 1

    @property
    def decided_value(self) -> Optional[int]:
        values = self.decided_values
        return next(iter(values)) if len(values) == 1 else None

    @property
    def decision_round(self) -> int:
        return max((d.round for d in self.decisions.values() if d), default=0)

    @property
    def participation_round(self) -> int:
        return max(self.participation.values(), default=0)

    @property
    def broadcasts_per_round(self) -> float:
        """Average round-pattern broadcasts per (process, round >= 1)."""
        counts = [c for (_, r), c in self.round_broadcasts.items() if r >= 1]
        return sum(counts) / len(counts) if counts else 0.0

    def counter(self, name: str) -> int:
        return sum(int(stats.get(name, 0)) for stats in self.process_stats.values())

    def dropped(self) -> int:
        return sum(sum(s.get("dropped", {}).values()) for s in self.process_stats.values())

    def outcome(self) -> dict[str, Any]:
        """Comparable view used by replay checks."""
        return {
            "decisions": {
                i: None if d is None else [d.value, d.round, d.basis_round, d.adopted]
                for i, d in sorted(self.decisions.items())
            },
            "participation": dict(sorted(self.participation.items())),
            "messages_sent": self.messages_sent,
            "bytes_sent": self.bytes_sent,
            "steps": self.steps,
            "stalled": self.stalled,
            "digests": dict(sorted(self.digests.items())),
            "coin_map": dict(sorted(self.coin_map.items())),
            "process_stats": {i: s for i, s in sorted(self.process_stats.items())},
            "round_broadcasts": sorted(self.round_broadcasts.items()),
        }


def message_meta(message: Union[ProtocolMessage, bytes]) -> tuple[str, int, Optional[int]]:
    """(kind, round, value) the scheduler may inspect."""
    if isinstance(message, bytes):
        return "garbage", -1, None
    if isinstance(message, CombinedMsg):
        return "combined", message.aux.round, message.aux.value
    if isinstance(message, AuxProofMsg):
        return "aux", message.round, message.value
    if isinstance(message, CoinShare):
        return "coin", message.round, None
    if isinstance(message, DecisionProof):
        return "decision", message.round, message.value
    if isinstance(message, (ProofRequest, ProofResponse)):
        kind = "proof_request" if isinstance(message, ProofRequest) else "proof_response"
        return kind, message.round, message.value
    return "garbage", -1, None


def _build_participants(
    config: InstanceConfig,
    observer_for=None,
) -> tuple[dict[int, ConsensusProcess], dict[int, ByzantineBehavior]]:
    keyring = KeyRing.generate(config.n, config.t, config.key_seed)
    provider = get_provider(config.provider, keyring)
    faults = config.fault_map
    processes: dict[int, ConsensusProcess] = {}
    behaviors: dict[int, ByzantineBehavior] = {}

    for i in range(config.n):
        signer = provider.signer_for(i)
        fault = faults.get(i)
        if fault is not None and not fault.runs_protocol:
            behaviors[i] = build_behavior(
                fault,
                signer,
                config.instance_tag,
                config.seed,
                override=config.coin_override(),
                coin_horizon=config.coin_horizon,
            )
            continue
        cls = (
            FlippingProcess
            if fault is not None and fault.kind is FaultKind.FLIP_VALUE
            else ConsensusProcess
        )
        processes[i] = cls(
            signer,
            config.instance_tag,
            mode=config.mode,
            override=config.coin_override(),
            coin_horizon=config.coin_horizon,
            observer=None if observer_for is None else observer_for(i),
        )
    return processes, behaviors


class Simulator:
    """Runs one instance to completion (or to the step cap)."""

    def __init__(self, config: InstanceConfig) -> None:
        self.config = config
        self.trace = Trace(header=config.to_dict())
        self.queue = MessageQueue(config.fairness_bound)
        self.scheduler = make_scheduler(config.policy)
        self.step = 0
        self.messages_sent = 0
        self.bytes_sent = 0
        self.crashed: set[int] = set()
        self._honest = set(config.honest)
        self._local: deque[tuple[int, int, bytes]] = deque()
        self._round_broadcasts: dict[tuple[int, int], int] = {}
        self._crash_steps = {
            f.index: f.crash_step or 0
            for f in config.faults
            if f.kind is FaultKind.CRASH
        }
        self.processes, self.behaviors = _build_participants(
            config, lambda i: partial(self._observe, i)
        )

    # ------------------------------------------------------------------

    def run(self) -> InstanceResult:
        cfg = self.config
        self._apply_crashes()
        for i in range(cfg.n):
            if i in self.crashed:
                continue
            if i in self.processes:
                proc = self.processes[i]
                position = self._open_record(START, i, i)
                out = proc.start(cfg.proposals[i])
                self._close_record(position, proc.digest())
                self._dispatch(i, out.messages)
            else:
                self._dispatch(i, self.behaviors[i].start(cfg.proposals[i]))
            self._drain_local()

        stalled = False
        while not self._all_honest_stopped():
            if self.step >= cfg.step_cap:
                stalled = True
                _LOGGER.warning(
                    "Instance %d stalled after %d steps", cfg.index, self.step
                )
                break
            self._apply_crashes()
            if not self.queue:
                self._quiesce()
                break
            event = self.queue.pop_next(self.scheduler, self._majority)
            self.step += 1
            self._deliver(event.target, event.origin, event.payload)
            self._drain_local()

        for event in self.queue.drain():
            self.trace.append(self.step, FLUSH, event.target, event.origin, event.payload)

        result = _collect(
            cfg,
            self.processes,
            messages_sent=self.messages_sent,
            bytes_sent=self.bytes_sent,
            steps=self.step,
            stalled=stalled,
            round_broadcasts=self._round_broadcasts,
            max_postponed=self.queue.max_postponed,
            trace=self.trace,
        )
        _LOGGER.debug(
            "Instance %d finished: decided=%s rounds=%d steps=%d",
            cfg.index,
            result.decided_value,
            result.decision_round,
            result.steps,
        )
        return result

    # ------------------------------------------------------------------

    def _observe(self, process: int, kind: str, peer: int, payload: bytes) -> None:
        self.trace.append(self.step, kind, process, peer, payload)

    def _open_record(self, kind: str, process: int, peer: int, payload: bytes = b"") -> int:
        self.trace.append(self.step, kind, process, peer, payload)
        return len(self.trace.records) - 1

    def _close_record(self, position: int, digest: str) -> None:
        records = self.trace.records
        records[position] = replace(records[position], digest=digest)

    def _all_honest_stopped(self) -> bool:
        return all(self.processes[i].phase is Phase.STOPPED for i in self._honest)

    def _majority(self) -> Optional[int]:
        counts = [0, 0]
        for i in self._honest:
            proc = self.processes[i]
            if proc.phase is not Phase.STOPPED and proc.state.est in (0, 1):
                counts[proc.state.est] += 1
        if counts[0] == counts[1]:
            return None
        return 0 if counts[0] > counts[1] else 1

    def _apply_crashes(self) -> None:
        for index, at_step in self._crash_steps.items():
            if index in self.crashed or at_step > self.step:
                continue
            self.crashed.add(index)
            self.trace.append(self.step, CRASH, index, index)
            for event in self.queue.drop_target(index):
                self.trace.append(
                    self.step, FLUSH, event.target, event.origin, event.payload
                )
            _LOGGER.debug("p%d crashed at step %d", index, self.step)

    def _quiesce(self) -> None:
        for i in sorted(self._honest):
            self.processes[i].quiesce()

    def _deliver(self, target: int, origin: int, payload: bytes) -> None:
        proc = self.processes.get(target)
        if target in self.crashed or (proc is not None and proc.phase is Phase.STOPPED):
            self.trace.append(self.step, DISCARD, target, origin, payload)
            return

        position = self._open_record(DELIVER, target, origin, payload)
        if proc is None:
            outbound = byzantine_step(self.behaviors[target], origin, payload)
            self._dispatch(target, outbound)
            return

        out = proc.receive(origin, payload)
        self._close_record(position, proc.digest())
        self._dispatch(target, out.messages)

    def _drain_local(self) -> None:
        while self._local:
            target, origin, payload = self._local.popleft()
            self._deliver(target, origin, payload)

    def _dispatch(self, sender: int, outbound: Iterable[Outbound]) -> None:
        if sender in self.crashed:
            return
        n = self.config.n
        honest = sender in self._honest
        for item in outbound:
            message = item.message
            payload = message if isinstance(message, bytes) else encode(message)
            kind, round_, value = message_meta(message)
            if honest and item.is_broadcast and kind in ROUND_KINDS:
                key = (sender, round_)
                self._round_broadcasts[key] = self._round_broadcasts.get(key, 0) + 1

            targets = range(n) if item.is_broadcast else [item.target]
            for target in targets:
                if not 0 <= target < n:
                    continue
                self.trace.append(self.step, SEND, sender, target, payload)
                if target == sender:
                    self._local.append((target, sender, payload))
                    continue
                if honest:
                    self.messages_sent += 1
                    self.bytes_sent += len(payload)
                self.queue.push(target, payload, sender, self.step, kind, round_, value)


def _collect(
    config: InstanceConfig,
    processes: dict[int, ConsensusProcess],
    **counters: Any,
) -> InstanceResult:
    honest = config.honest
    coin_map: dict[int, int] = {}
    for i in honest:
        coin_map.update(processes[i].state.coin_map)
    return InstanceResult(
        config=config,
        decisions={i: processes[i].decision for i in honest},
        participation={i: processes[i].state.participation_round for i in honest},
        digests={i: processes[i].digest() for i in honest},
        coin_map=dict(sorted(coin_map.items())),
        process_stats={i: processes[i].state.stats.to_dict() for i in honest},
        tallies={i: processes[i].state.store.tally.cells() for i in honest},
        **counters,
    )


def run_instance(config: InstanceConfig) -> InstanceResult:
    """Execute one instance; see `Simulator`."""
    return Simulator(config).run()


def replay(trace: Trace, expected: Optional[InstanceConfig] = None) -> InstanceResult:
    """
    Re-execute a trace against fresh processes.

    Every `start` and `deliver` record addressed to a protocol process is fed
    again and the resulting state digest must match the recorded one.

    Raises:
        ConfigError: header missing or recorded with different mode flags
        ReplayDivergence: a recomputed digest differs from the trace
    """
    config = InstanceConfig.from_dict(trace.header)
    if expected is not None and expected.mode != config.mode:
        raise ConfigError(
            f"trace recorded in mode {config.mode.label}, "
            f"cannot replay as {expected.mode.label}"
        )

    processes, _ = _build_participants(config)
    honest = set(config.honest)
    messages_sent = bytes_sent = steps = 0
    round_broadcasts: dict[tuple[int, int], int] = {}

    for record in trace:
        steps = max(steps, record.step)
        proc = processes.get(record.process)

        if record.kind == SEND and record.process in honest:
            if record.peer != record.process:
                messages_sent += 1
                bytes_sent += len(record.payload)
            elif kind_of(record.payload) in ROUND_KINDS:
                key = (record.process, _payload_round(record))
                round_broadcasts[key] = round_broadcasts.get(key, 0) + 1
            continue

        if proc is None:
            continue

        if record.kind == START:
            proc.start(config.proposals[record.process])
            _check_digest(record, proc)
        elif record.kind == DELIVER:
            proc.receive(record.peer, record.payload)
            _check_digest(record, proc)
        elif record.kind == STOP and proc.phase is Phase.DECIDED:
            proc.quiesce()

    all_stopped = all(processes[i].phase is Phase.STOPPED for i in honest)
    return _collect(
        config,
        processes,
        messages_sent=messages_sent,
        bytes_sent=bytes_sent,
        steps=steps,
        stalled=steps >= config.step_cap and not all_stopped,
        round_broadcasts=round_broadcasts,
        max_postponed=queue_postponements(trace, config.n),
        trace=trace,
    )


def _payload_round(record: TraceRecord) -> int:
    _, round_, _ = message_meta(decode(record.payload))
    return round_


def _check_digest(record: TraceRecord, proc: ConsensusProcess) -> None:
    actual = proc.digest()
    if record.digest and actual != record.digest:
        raise ReplayDivergence(
            step=record.step,
            expected=record.digest,
            actual=actual,
            detail=f"{record.kind} at p{record.process} from p{record.peer}",
        )
    if not record.digest:
        raise ReplayDivergence(
            step=record.step,
            expected="<missing>",
            actual=actual,
            detail=f"{record.kind} at p{record.process} has no digest",
        )


def queue_postponements(trace: Trace, n: int) -> int:
    """
    Rebuild the network queue from send/deliver/discard records and return
    the largest number of deliveries that overtook any single event.
    """
    pending: list[list] = []  # [target, origin, payload, postponed]
    worst = 0
    for record in trace:
        if record.kind == SEND and record.peer != record.process:
            pending.append([record.peer, record.process, record.payload, 0])
        elif record.kind in (DELIVER, DISCARD, FLUSH) and record.process != record.peer:
            for position, item in enumerate(pending):
                if (
                    item[0] == record.process
                    and item[1] == record.peer
                    and item[2] == record.payload
                ):
                    if record.kind != FLUSH:
                        for earlier in pending[:position]:
                            earlier[3] += 1
                        worst = max(worst, item[3])
                    del pending[position]
                    break
    return worst

