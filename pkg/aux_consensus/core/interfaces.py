"""
Abstract interfaces.

Minimal abstraction layer decoupling the protocol core from a concrete
signature scheme and the simulator from concrete fault behaviors.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Iterable, Optional, Protocol

if TYPE_CHECKING:
    from ..crypto.keyring import KeyRing, Signature, ThresholdSignature
    from .state import Outbound


class CryptoProvider(Protocol):
    """Interface for signature / threshold-signature providers."""

    name: str

    @property
    def keyring(self) -> KeyRing:
        """Key material the provider was built for."""
        ...

    def sign(self, signer: int, message: bytes) -> Signature:
        """Sign exact bytes as `signer`."""
        ...

    def verify(self, sig: Signature, signer: int, message: bytes) -> bool:
        """Check a signature; malformed input yields False."""
        ...

    def aggregate(
        self, shares: Iterable[Signature], message: bytes
    ) -> ThresholdSignature:
        """Combine at least n-t distinct shares over one message."""
        ...

    def verify_threshold(
        self, tsig: ThresholdSignature, message: Optional[bytes] = None
    ) -> bool:
        """Check an aggregate, optionally against the signed message."""
        ...

    def coin_bit(self, tsig: ThresholdSignature) -> int:
        """First bit of the hash of a verified aggregate."""
        ...


class ByzantineBehavior(ABC):
    """Interface for faulty process behaviors driven by the simulator."""

    index: int

    @abstractmethod
    def start(self, proposal: int) -> list[Outbound]:
        """Messages emitted at time zero."""

    @abstractmethod
    def step(self, origin: int, payload: bytes) -> list[Outbound]:
        """React to one delivered message."""
