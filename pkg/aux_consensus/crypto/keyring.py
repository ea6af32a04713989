"""Key material and signature value types."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from ..const import DIGEST_SIZE
from ..core.exceptions import ConfigError


def _derive(seed: int, label: bytes) -> bytes:
    return hashlib.sha256(
        seed.to_bytes(8, "little", signed=False) + b"|" + label
    ).digest()


@dataclass(frozen=True)
class KeyRing:
    """
    Public and private key material for one deployment.

    The mock provider derives every identity from `master_seed`, so a keyring
    is fully reproducible from (n, t, master_seed).
    """

    n: int
    t: int
    master_seed: int
    identities: tuple[bytes, ...] = field(repr=False)
    threshold_identity: bytes = field(repr=False)

    def __post_init__(self) -> None:
        if self.n < 1 or self.t < 0:
            raise ConfigError(f"invalid keyring size n={self.n}, t={self.t}")
        if self.n < 3 * self.t + 1:
            raise ConfigError(f"n must be >= 3t+1 (n={self.n}, t={self.t})")
        if len(self.identities) != self.n:
            raise ConfigError(
                f"expected {self.n} signing identities, got {len(self.identities)}"
            )

    @classmethod
    def generate(cls, n: int, t: int, master_seed: int) -> KeyRing:
        """Derive a keyring deterministically from a 64-bit seed."""
        seed = master_seed & 0xFFFFFFFFFFFFFFFF
        return cls(
            n=n,
            t=t,
            master_seed=seed,
            identities=tuple(_derive(seed, i.to_bytes(4, "little")) for i in range(n)),
            threshold_identity=_derive(seed, b"thr"),
        )

    @property
    def threshold(self) -> int:
        """Number of distinct shares needed for an aggregate (n - t)."""
        return self.n - self.t

    def has_signer(self, signer: int) -> bool:
        return isinstance(signer, int) and 0 <= signer < self.n


@dataclass(frozen=True, order=True)
class Signature:
    """A single process signature over exact message bytes."""

    signer: int
    digest: bytes

    def is_well_formed(self) -> bool:
        return (
            isinstance(self.signer, int)
            and self.signer >= 0
            and isinstance(self.digest, (bytes, bytearray))
            and len(self.digest) == DIGEST_SIZE
        )


@dataclass(frozen=True)
class ThresholdSignature:
    """Aggregate of n-t shares; identical for every contributing subset."""

    message_digest: bytes
    aggregate: bytes
