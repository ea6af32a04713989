"""Exception hierarchy for the consensus simulator."""

from __future__ import annotations

from typing import Any, Optional


class ConsensusError(Exception):
    """Base class for every error raised by this package."""


class UnknownSigner(ConsensusError):
    """Signer index outside [0, n)."""


class ThresholdUnavailable(ConsensusError):
    """Fewer than n-t distinct valid shares were supplied for aggregation."""


class MixedMessages(ConsensusError):
    """Shares handed to aggregation do not all sign the same message."""


class InvalidThresholdSignature(ConsensusError):
    """A threshold signature does not verify."""


class MalformedMessage(ConsensusError):
    """Bytes that do not decode into a well-formed protocol message."""


class InsufficientStore(ConsensusError):
    """No subset of the local store satisfies the validity predicate."""


class ProtocolStateError(ConsensusError):
    """A transition was requested from a phase that does not allow it."""


class ConfigError(ConsensusError):
    """Invalid experiment or instance configuration."""

    def __init__(self, message: str, errors: Optional[list[str]] = None) -> None:
        super().__init__(message)
        self.errors = list(errors or [])


class ReplayDivergence(ConsensusError):
    """Replaying a trace produced a state that differs from the recorded one."""

    def __init__(
        self,
        step: int,
        expected: str,
        actual: str,
        detail: str = "",
    ) -> None:
        message = (
            f"Replay diverged at step {step}: expected digest {expected}, got {actual}"
        )
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)
        self.step = step
        self.expected = expected
        self.actual = actual


class ModeMismatch(ConsensusError):
    """Paired base/combined runs decided different values."""

    def __init__(self, mismatches: list[tuple[int, int]], diff: Any = None) -> None:
        super().__init__(
            f"Decided values differ between modes for (n, instance) {mismatches}"
        )
        self.mismatches = list(mismatches)
        self.diff = diff
