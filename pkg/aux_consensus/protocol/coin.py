"""Per-round common coin: shares in, revealed bits out."""

from __future__ import annotations

import logging
import random
from typing import Optional

from ..const import DEFAULT_COIN_HORIZON
from ..crypto.keyring import Signature, ThresholdSignature
from ..crypto.provider import ProcessSigner
from .codec import coin_payload
from .messages import CoinShare

_LOGGER = logging.getLogger(__name__)


def make_share(signer: ProcessSigner, instance: bytes, round_: int) -> CoinShare:
    """Sign COIN(round) as `signer`."""
    if round_ < 1:
        raise ValueError(f"coin rounds start at 1, got {round_}")
    return CoinShare(
        instance=instance,
        round=round_,
        signature=signer.sign(coin_payload(instance, round_)),
    )


def verify_share(signer: ProcessSigner, share: CoinShare, instance: bytes) -> bool:
    return (
        share.instance == instance
        and share.round >= 1
        and signer.verify(
            share.signature, share.signer, coin_payload(instance, share.round)
        )
    )


class CoinOverride:
    """
    Seeded replacement for revealed coin bits.

    The aggregate is still computed and still gates reveal timing; only the
    published bit comes from here. Every process built with the same seed sees
    the same sequence.
    """

    def __init__(self, seed: int) -> None:
        self._seed = seed
        self._bits: dict[int, int] = {}

    @property
    def seed(self) -> int:
        return self._seed

    def bit(self, round_: int) -> int:
        if round_ not in self._bits:
            self._bits[round_] = random.Random(f"{self._seed}:{round_}").getrandbits(1)
        return self._bits[round_]

    def sequence(self, rounds: int) -> list[int]:
        """Bits for rounds 1..rounds."""
        return [self.bit(r) for r in range(1, rounds + 1)]


class CoinState:
    """
    Coin shares collected by one process and the coin_map they produce.

    A round is revealed exactly once, when n-t distinct shares are present;
    later shares for that round are absorbed without effect.
    """

    def __init__(
        self,
        signer: ProcessSigner,
        instance: bytes,
        override: Optional[CoinOverride] = None,
        horizon: int = DEFAULT_COIN_HORIZON,
    ) -> None:
        self._signer = signer
        self._instance = instance
        self._override = override
        self._horizon = horizon
        self._threshold = signer.keyring.threshold
        self._shares: dict[int, dict[int, Signature]] = {}
        self.coin_map: dict[int, int] = {}
        self.aggregates: dict[int, ThresholdSignature] = {}

    def signers(self, round_: int) -> frozenset[int]:
        return frozenset(self._shares.get(round_, {}))

    def revealed(self, round_: int) -> Optional[int]:
        return self.coin_map.get(round_)

    def bit_for(self, round_: int, tsig: ThresholdSignature) -> int:
        """The published bit for an aggregate of COIN(round)."""
        if self._override is not None:
            self._signer.coin_bit(tsig)  # still rejects invalid aggregates
            return self._override.bit(round_)
        return self._signer.coin_bit(tsig)

    def add_share(self, share: CoinShare, current_round: int = 0) -> Optional[int]:
        """Record a verified share; return the bit if this share revealed it."""
        round_ = share.round
        if round_ > current_round + self._horizon:
            _LOGGER.debug(
                "Coin share for round %d beyond horizon (current %d), dropped",
                round_,
                current_round,
            )
            return None

        shares = self._shares.setdefault(round_, {})
        shares.setdefault(share.signer, share.signature)
        if round_ in self.coin_map or len(shares) < self._threshold:
            return None

        tsig = self._signer.aggregate(
            shares.values(), coin_payload(self._instance, round_)
        )
        bit = self.bit_for(round_, tsig)
        self.coin_map[round_] = bit
        self.aggregates[round_] = tsig
        return bit
