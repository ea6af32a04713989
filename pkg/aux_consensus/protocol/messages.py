"""
Protocol message types.

All messages are immutable values. Signatures always cover the canonical
encoding produced by `protocol.codec`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from ..const import BIN_VALUES, C_VAL
from ..crypto.keyring import Signature, ThresholdSignature

# Binary values are plain ints 0/1; AUX values additionally allow C_VAL.
BinValue = int
AuxValue = int


def negate(value: BinValue) -> BinValue:
    """Negation on {0, 1}."""
    if value not in BIN_VALUES:
        raise ValueError(f"cannot negate non-binary value {value!r}")
    return 1 - value


def is_bin(value: object) -> bool:
    return value in BIN_VALUES


def is_aux_value(value: object) -> bool:
    return value in BIN_VALUES or value == C_VAL


@dataclass(frozen=True, order=True)
class AuxMsg:
    """AUX(round, value) for one consensus instance."""

    instance: bytes
    round: int
    value: AuxValue


@dataclass(frozen=True)
class SignedAux:
    """A process's signed vote."""

    aux: AuxMsg
    signature: Signature

    @property
    def signer(self) -> int:
        return self.signature.signer

    @property
    def round(self) -> int:
        return self.aux.round

    @property
    def value(self) -> AuxValue:
        return self.aux.value

    def sort_key(self) -> tuple[int, int, int, bytes]:
        """Canonical order: signer, then value, then round."""
        return (self.signer, self.value, self.round, bytes(self.signature.digest))


def sorted_signed(items) -> list[SignedAux]:
    return sorted(items, key=SignedAux.sort_key)


@dataclass(frozen=True)
class AuxProofMsg:
    """A signed vote plus the proofs establishing its validity."""

    signed: SignedAux
    proofs: frozenset[SignedAux] = frozenset()

    @property
    def round(self) -> int:
        return self.signed.round

    @property
    def value(self) -> AuxValue:
        return self.signed.value

    @property
    def signer(self) -> int:
        return self.signed.signer

    @property
    def instance(self) -> bytes:
        return self.signed.aux.instance


@dataclass(frozen=True)
class CoinShare:
    """Signature share over COIN(round)."""

    instance: bytes
    round: int
    signature: Signature

    @property
    def signer(self) -> int:
        return self.signature.signer


@dataclass(frozen=True)
class CombinedMsg:
    """Round-r coin share piggybacked with the round-(r+1) AUX vote."""

    share: CoinShare
    aux: AuxProofMsg


@dataclass(frozen=True)
class DecisionProof:
    """
    Evidence of a decision.

    `aux_set` holds at least n-t votes for (round, value) from distinct
    signers and `coin` aggregates COIN(round). When some votes carry C_VAL,
    `prior_coin` aggregates COIN(round-1) so the receiver can resolve them.
    """

    instance: bytes
    round: int
    value: BinValue
    aux_set: frozenset[SignedAux]
    coin: ThresholdSignature
    prior_coin: Optional[ThresholdSignature] = None


@dataclass(frozen=True)
class ProofRequest:
    """Ask the signer of AUX(round, value) for its validity proofs."""

    instance: bytes
    round: int
    value: AuxValue
    requester: int


@dataclass(frozen=True)
class ProofResponse:
    """Proofs answering a ProofRequest."""

    instance: bytes
    round: int
    value: AuxValue
    responder: int
    proofs: frozenset[SignedAux] = frozenset()


ProtocolMessage = Union[
    AuxProofMsg,
    CoinShare,
    CombinedMsg,
    DecisionProof,
    ProofRequest,
    ProofResponse,
]
