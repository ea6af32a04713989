"""
Crypto providers.

The mock-prf provider realizes idealized signatures and (n-t) threshold
signatures with keyed HMAC-SHA256:

- share(i, m)    = HMAC(identity_i, m)
- aggregate(m)   = HMAC(threshold_identity, sha256(m))
- coin_bit(tsig) = first bit of sha256(aggregate)

The threshold rule is enforced by the API: `aggregate` refuses to emit
anything unless n-t distinct valid shares over the same message are present.
"""

from __future__ import annotations

import hashlib
import hmac
import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from ..const import PROVIDER_MOCK_PRF
from ..core.exceptions import (
    ConfigError,
    InvalidThresholdSignature,
    MixedMessages,
    ThresholdUnavailable,
    UnknownSigner,
)
from ..core.interfaces import CryptoProvider
from .keyring import KeyRing, Signature, ThresholdSignature

_LOGGER = logging.getLogger(__name__)


class MockPrfProvider:
    """Deterministic PRF-based provider. Immutable after construction."""

    name = PROVIDER_MOCK_PRF

    def __init__(self, keyring: KeyRing) -> None:
        self._keyring = keyring

    @property
    def keyring(self) -> KeyRing:
        return self._keyring

    def sign(self, signer: int, message: bytes) -> Signature:
        if not self._keyring.has_signer(signer):
            raise UnknownSigner(
                f"signer {signer} outside [0, {self._keyring.n})"
            )
        digest = hmac.new(
            self._keyring.identities[signer], bytes(message), hashlib.sha256
        ).digest()
        return Signature(signer=signer, digest=digest)

    def verify(self, sig: Signature, signer: int, message: bytes) -> bool:
        try:
            if not isinstance(sig, Signature) or not sig.is_well_formed():
                return False
            if sig.signer != signer or not self._keyring.has_signer(signer):
                return False
            expected = hmac.new(
                self._keyring.identities[signer], bytes(message), hashlib.sha256
            ).digest()
            return hmac.compare_digest(expected, bytes(sig.digest))
        except (TypeError, ValueError):
            return False

    def aggregate(
        self, shares: Iterable[Signature], message: bytes
    ) -> ThresholdSignature:
        signers: set[int] = set()
        for share in shares:
            if not self.verify(share, share.signer, message):
                raise MixedMessages(
                    f"share from signer {share.signer} does not sign the aggregated message"
                )
            signers.add(share.signer)

        if len(signers) < self._keyring.threshold:
            raise ThresholdUnavailable(
                f"{len(signers)} distinct shares, {self._keyring.threshold} required"
            )

        message_digest = hashlib.sha256(bytes(message)).digest()
        return ThresholdSignature(
            message_digest=message_digest,
            aggregate=self._threshold_mac(message_digest),
        )

    def verify_threshold(
        self, tsig: ThresholdSignature, message: Optional[bytes] = None
    ) -> bool:
        try:
            if message is not None and not hmac.compare_digest(
                hashlib.sha256(bytes(message)).digest(), bytes(tsig.message_digest)
            ):
                return False
            return hmac.compare_digest(
                self._threshold_mac(bytes(tsig.message_digest)), bytes(tsig.aggregate)
            )
        except (AttributeError, TypeError, ValueError):
            return False

    def coin_bit(self, tsig: ThresholdSignature) -> int:
        if not self.verify_threshold(tsig):
            raise InvalidThresholdSignature("coin aggregate does not verify")
        return hashlib.sha256(bytes(tsig.aggregate)).digest()[0] >> 7

    def signer_for(self, index: int) -> ProcessSigner:
        if not self._keyring.has_signer(index):
            raise UnknownSigner(f"signer {index} outside [0, {self._keyring.n})")
        return ProcessSigner(provider=self, index=index)

    def _threshold_mac(self, message_digest: bytes) -> bytes:
        return hmac.new(
            self._keyring.threshold_identity, message_digest, hashlib.sha256
        ).digest()


@dataclass(frozen=True)
class ProcessSigner:
    """
    Capability handed to one process.

    Signs only as `index`; verification and aggregation go through the shared
    provider. Faulty behaviors receive nothing else, so they cannot forge
    another process's signature or aggregate below threshold.
    """

    provider: CryptoProvider
    index: int

    @property
    def keyring(self) -> KeyRing:
        return self.provider.keyring

    def sign(self, message: bytes) -> Signature:
        return self.provider.sign(self.index, message)

    def verify(self, sig: Signature, signer: int, message: bytes) -> bool:
        return self.provider.verify(sig, signer, message)

    def aggregate(
        self, shares: Iterable[Signature], message: bytes
    ) -> ThresholdSignature:
        return self.provider.aggregate(shares, message)

    def verify_threshold(
        self, tsig: ThresholdSignature, message: Optional[bytes] = None
    ) -> bool:
        return self.provider.verify_threshold(tsig, message)

    def coin_bit(self, tsig: ThresholdSignature) -> int:
        return self.provider.coin_bit(tsig)


ProviderFactory = Callable[[KeyRing], CryptoProvider]

_PROVIDERS: dict[str, ProviderFactory] = {
    PROVIDER_MOCK_PRF: MockPrfProvider,
}


def register_provider(name: str, factory: ProviderFactory) -> None:
    """Register an additional provider (e.g. a real threshold scheme adapter)."""
    _PROVIDERS[name] = factory
    _LOGGER.debug("Crypto provider registered: %s", name)


def available_providers() -> list[str]:
    return sorted(_PROVIDERS)


def get_provider(name: str, keyring: KeyRing) -> CryptoProvider:
    """Build the named provider for `keyring`."""
    try:
        factory = _PROVIDERS[name]
    except KeyError:
        raise ConfigError(
            f"unknown crypto provider '{name}', expected one of {available_providers()}"
        ) from None
    return factory(keyring)
