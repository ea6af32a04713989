"""
Adversarial message queue.

The network never loses, duplicates or alters a message; the adversary only
picks which queued event is delivered next. A fairness bound caps how many
later deliveries may overtake any queued event.
"""

from __future__ import annotations

import random
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..const import (
    ADVERSARIES,
    ADVERSARY_FIFO,
    ADVERSARY_HEURISTIC,
    ADVERSARY_RANDOM,
    DEFAULT_FAIRNESS_FACTOR,
)
from ..core.exceptions import ConfigError

# Probability that the heuristic adversary restricts itself to minority values
HEURISTIC_BIAS = 0.8


@dataclass
class SimEvent:
    """One queued delivery."""

    seq: int
    target: int
    payload: bytes
    origin: int
    enqueue_step: int
    kind: str = "garbage"
    round: int = -1
    value: Optional[int] = None
    postponed: int = 0


@dataclass(frozen=True)
class AdversaryPolicy:
    """Scheduling strategy plus the fairness bound it must respect."""

    kind: str = ADVERSARY_FIFO
    seed: int = 0
    fairness_bound: int = DEFAULT_FAIRNESS_FACTOR * 4

    def __post_init__(self) -> None:
        if self.kind not in ADVERSARIES:
            raise ConfigError(f"unknown adversary {self.kind!r}")
        if self.fairness_bound < 1:
            raise ConfigError(f"fairness bound must be > 0, got {self.fairness_bound}")

    @classmethod
    def for_instance(
        cls, kind: str, seed: int, n: int, factor: int = DEFAULT_FAIRNESS_FACTOR
    ) -> AdversaryPolicy:
        return cls(kind=kind, seed=seed, fairness_bound=factor * n)


# Callback returning the current majority estimate among honest processes
MajorityView = Callable[[], Optional[int]]


class Scheduler(ABC):
    """Chooses the index of the next event among the queue."""

    def __init__(self, policy: AdversaryPolicy) -> None:
        self.policy = policy
        self._rng = random.Random(f"scheduler:{policy.seed}")

    @abstractmethod
    def choose(self, events: list[SimEvent], majority: MajorityView) -> int:
        """Index into `events` (never empty)."""


class FifoScheduler(Scheduler):
    def choose(self, events: list[SimEvent], majority: MajorityView) -> int:
        return 0


class RandomScheduler(Scheduler):
    def choose(self, events: list[SimEvent], majority: MajorityView) -> int:
        return self._rng.randrange(len(events))


class HeuristicScheduler(Scheduler):
    """
    Delays messages carrying the honest majority estimate.

    Most of the time it delivers something whose value differs from the
    majority, which keeps estimates split and stresses round progression.
    """

    def choose(self, events: list[SimEvent], majority: MajorityView) -> int:
        current = majority()
        if current is not None and self._rng.random() < HEURISTIC_BIAS:
            minority = [
                i for i, event in enumerate(events) if event.value != current
            ]
            if minority:
                return minority[self._rng.randrange(len(minority))]
        return self._rng.randrange(len(events))


_SCHEDULERS: dict[str, type[Scheduler]] = {
    ADVERSARY_FIFO: FifoScheduler,
    ADVERSARY_RANDOM: RandomScheduler,
    ADVERSARY_HEURISTIC: HeuristicScheduler,
}


def make_scheduler(policy: AdversaryPolicy) -> Scheduler:
    return _SCHEDULERS[policy.kind](policy)


@dataclass
class MessageQueue:
    """
    Pending deliveries in enqueue order.

    `max_postponed` records the largest overtaking count any delivered event
    suffered; it never exceeds the fairness bound.
    """

    fairness_bound: int
    events: list[SimEvent] = field(default_factory=list)
    max_postponed: int = 0
    forced: int = 0
    _next_seq: int = 0

    def __len__(self) -> int:
        return len(self.events)

    def push(
        self,
        target: int,
        payload: bytes,
        origin: int,
        step: int,
        kind: str = "garbage",
        round_: int = -1,
        value: Optional[int] = None,
    ) -> SimEvent:
        event = SimEvent(
            seq=self._next_seq,
            target=target,
            payload=payload,
            origin=origin,
            enqueue_step=step,
            kind=kind,
            round=round_,
            value=value,
        )
        self._next_seq += 1
        self.events.append(event)
        return event

    def pop_next(self, scheduler: Scheduler, majority: MajorityView) -> SimEvent:
        """Remove and return the next event, honoring the fairness bound."""
        if not self.events:
            raise IndexError("pop from empty message queue")

        if self.events[0].postponed >= self.fairness_bound:
            index = 0
            self.forced += 1
        else:
            index = scheduler.choose(self.events, majority)

        for overtaken in self.events[:index]:
            overtaken.postponed += 1
        event = self.events.pop(index)
        self.max_postponed = max(self.max_postponed, event.postponed)
        return event

    def drop_target(self, target: int) -> list[SimEvent]:
        """Remove every event addressed to `target`."""
        dropped = [event for event in self.events if event.target == target]
        if dropped:
            self.events = [event for event in self.events if event.target != target]
        return dropped

    def drain(self) -> list[SimEvent]:
        leftover, self.events = self.events, []
        return leftover
