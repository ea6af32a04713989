"""
Canonical byte encoding for protocol messages.

Layout rules:
- one leading kind byte per top-level message
- integers are fixed-width little-endian (round u32, signer u16, value u8)
- every message carries the 32-byte instance tag once; nested votes inherit it
- vote sets are prefixed with a u16 count and sorted by signer, then value

Identical logical messages therefore always yield identical bytes, and the
same bytes are what signatures cover.
"""

from __future__ import annotations

import struct
from typing import Iterable, Optional

from ..const import C_VAL, DIGEST_SIZE, INSTANCE_TAG_SIZE
from ..core.exceptions import MalformedMessage
from ..crypto.keyring import Signature, ThresholdSignature
from .messages import (
    AuxMsg,
    AuxProofMsg,
    CoinShare,
    CombinedMsg,
    DecisionProof,
    ProofRequest,
    ProofResponse,
    ProtocolMessage,
    SignedAux,
    sorted_signed,
)

KIND_AUX_PROOF = 0x01
KIND_COIN_SHARE = 0x02
KIND_COMBINED = 0x03
KIND_DECISION_PROOF = 0x04
KIND_PROOF_REQUEST = 0x05
KIND_PROOF_RESPONSE = 0x06

KIND_NAMES = {
    KIND_AUX_PROOF: "aux",
    KIND_COIN_SHARE: "coin",
    KIND_COMBINED: "combined",
    KIND_DECISION_PROOF: "decision",
    KIND_PROOF_REQUEST: "proof_request",
    KIND_PROOF_RESPONSE: "proof_response",
}

_AUX_DOMAIN = b"AUX\x00"
_COIN_DOMAIN = b"COIN"

_ROUND = struct.Struct("<I")
_ROUND_VALUE = struct.Struct("<IB")
_SIGNER = struct.Struct("<H")
_COUNT = struct.Struct("<H")
_FLAG = struct.Struct("<B")


# --------------------------------------------------------------------------
# Signing payloads
# --------------------------------------------------------------------------


def aux_payload(aux: AuxMsg) -> bytes:
    """Bytes a process signs for AUX(round, value)."""
    return _AUX_DOMAIN + bytes(aux.instance) + _ROUND_VALUE.pack(aux.round, aux.value)


def coin_payload(instance: bytes, round_: int) -> bytes:
    """Bytes a process signs for COIN(round)."""
    return _COIN_DOMAIN + bytes(instance) + _ROUND.pack(round_)


def encode_vote(round_: int, value: int) -> bytes:
    """Compact (round, value) payload used by trace records."""
    return _ROUND_VALUE.pack(round_, value)


def decode_vote(data: bytes) -> tuple[int, int]:
    if len(data) != _ROUND_VALUE.size:
        raise MalformedMessage(f"vote payload must be {_ROUND_VALUE.size} bytes")
    return _ROUND_VALUE.unpack(data)


# --------------------------------------------------------------------------
# Encoding
# --------------------------------------------------------------------------


def _check_instance(instance: bytes) -> bytes:
    if not isinstance(instance, (bytes, bytearray)) or len(instance) != INSTANCE_TAG_SIZE:
        raise MalformedMessage(f"instance tag must be {INSTANCE_TAG_SIZE} bytes")
    return bytes(instance)


def _encode_signature(sig: Signature) -> bytes:
    if not sig.is_well_formed() or sig.signer > 0xFFFF:
        raise MalformedMessage(f"cannot encode signature from signer {sig.signer}")
    return _SIGNER.pack(sig.signer) + bytes(sig.digest)


def _encode_vote_body(signed: SignedAux) -> bytes:
    return _ROUND_VALUE.pack(signed.round, signed.value) + _encode_signature(
        signed.signature
    )


def _encode_vote_set(instance: bytes, items: Iterable[SignedAux]) -> bytes:
    ordered = sorted_signed(items)
    parts = [_COUNT.pack(len(ordered))]
    for signed in ordered:
        if bytes(signed.aux.instance) != instance:
            raise MalformedMessage("nested vote carries a foreign instance tag")
        parts.append(_encode_vote_body(signed))
    return b"".join(parts)


def _encode_tsig(tsig: ThresholdSignature) -> bytes:
    if len(tsig.message_digest) != DIGEST_SIZE or len(tsig.aggregate) != DIGEST_SIZE:
        raise MalformedMessage("threshold signature has the wrong size")
    return bytes(tsig.message_digest) + bytes(tsig.aggregate)


def _encode_aux_proof_body(msg: AuxProofMsg) -> bytes:
    instance = _check_instance(msg.instance)
    return (
        instance
        + _encode_vote_body(msg.signed)
        + _encode_vote_set(instance, msg.proofs)
    )


def _encode_coin_share_body(share: CoinShare) -> bytes:
    return (
        _check_instance(share.instance)
        + _ROUND.pack(share.round)
        + _encode_signature(share.signature)
    )


def encode(message: ProtocolMessage) -> bytes:
    """Canonical bytes for any protocol message."""
    if isinstance(message, AuxProofMsg):
        return bytes([KIND_AUX_PROOF]) + _encode_aux_proof_body(message)

    if isinstance(message, CoinShare):
        return bytes([KIND_COIN_SHARE]) + _encode_coin_share_body(message)

    if isinstance(message, CombinedMsg):
        return (
            bytes([KIND_COMBINED])
            + _encode_coin_share_body(message.share)
            + _encode_aux_proof_body(message.aux)
        )

    if isinstance(message, DecisionProof):
        instance = _check_instance(message.instance)
        prior = b""
        if message.prior_coin is not None:
            prior = _encode_tsig(message.prior_coin)
        return (
            bytes([KIND_DECISION_PROOF])
            + instance
            + _ROUND_VALUE.pack(message.round, message.value)
            + _encode_vote_set(instance, message.aux_set)
            + _encode_tsig(message.coin)
            + _FLAG.pack(1 if message.prior_coin is not None else 0)
            + prior
        )

    if isinstance(message, ProofRequest):
        return (
            bytes([KIND_PROOF_REQUEST])
            + _check_instance(message.instance)
            + _ROUND_VALUE.pack(message.round, message.value)
            + _SIGNER.pack(message.requester)
        )

    if isinstance(message, ProofResponse):
        instance = _check_instance(message.instance)
        return (
            bytes([KIND_PROOF_RESPONSE])
            + instance
            + _ROUND_VALUE.pack(message.round, message.value)
            + _SIGNER.pack(message.responder)
            + _encode_vote_set(instance, message.proofs)
        )

    raise MalformedMessage(f"cannot encode {type(message).__name__}")


# --------------------------------------------------------------------------
# Decoding
# --------------------------------------------------------------------------


class _Reader:
    """Bounds-checked cursor over a byte buffer."""

    def __init__(self, data: bytes) -> None:
        self._data = memoryview(bytes(data))
        self._pos = 0

    def take(self, size: int) -> bytes:
        end = self._pos + size
        if end > len(self._data):
            raise MalformedMessage(
                f"truncated message: wanted {size} bytes at offset {self._pos}"
            )
        chunk = self._data[self._pos : end].tobytes()
        self._pos = end
        return chunk

    def unpack(self, fmt: struct.Struct) -> tuple:
        return fmt.unpack(self.take(fmt.size))

    def done(self) -> None:
        if self._pos != len(self._data):
            raise MalformedMessage(
                f"{len(self._data) - self._pos} trailing bytes after message"
            )

    def instance(self) -> bytes:
        return self.take(INSTANCE_TAG_SIZE)

    def signature(self) -> Signature:
        (signer,) = self.unpack(_SIGNER)
        return Signature(signer=signer, digest=self.take(DIGEST_SIZE))

    def round_value(self) -> tuple[int, int]:
        round_, value = self.unpack(_ROUND_VALUE)
        if value not in (0, 1, C_VAL):
            raise MalformedMessage(f"illegal AUX value {value}")
        return round_, value

    def vote(self, instance: bytes) -> SignedAux:
        round_, value = self.round_value()
        return SignedAux(
            aux=AuxMsg(instance=instance, round=round_, value=value),
            signature=self.signature(),
        )

    def vote_set(self, instance: bytes) -> frozenset[SignedAux]:
        (count,) = self.unpack(_COUNT)
        items = [self.vote(instance) for _ in range(count)]
        votes = frozenset(items)
        if len(votes) != count:
            raise MalformedMessage("duplicate vote in set")
        if sorted_signed(votes) != items:
            raise MalformedMessage("vote set is not in canonical order")
        return votes

    def tsig(self) -> ThresholdSignature:
        return ThresholdSignature(
            message_digest=self.take(DIGEST_SIZE), aggregate=self.take(DIGEST_SIZE)
        )

    def aux_proof(self) -> AuxProofMsg:
        instance = self.instance()
        signed = self.vote(instance)
        proofs = self.vote_set(instance)
        if signed.round == 0 and proofs:
            raise MalformedMessage("round-0 vote must not carry proofs")
        if signed.round == 0 and signed.value == C_VAL:
            raise MalformedMessage("round-0 vote must be binary")
        if any(p.round >= signed.round for p in proofs):
            raise MalformedMessage("proof from a round not below the vote's round")
        return AuxProofMsg(signed=signed, proofs=proofs)

    def coin_share(self) -> CoinShare:
        instance = self.instance()
        (round_,) = self.unpack(_ROUND)
        if round_ < 1:
            raise MalformedMessage("coin share round must be >= 1")
        return CoinShare(instance=instance, round=round_, signature=self.signature())


def decode(data: bytes) -> ProtocolMessage:
    """Parse canonical bytes; anything else raises MalformedMessage."""
    if not data:
        raise MalformedMessage("empty message")
    reader = _Reader(data)
    (kind,) = reader.unpack(_FLAG)

    message: ProtocolMessage
    if kind == KIND_AUX_PROOF:
        message = reader.aux_proof()
    elif kind == KIND_COIN_SHARE:
        message = reader.coin_share()
    elif kind == KIND_COMBINED:
        share = reader.coin_share()
        aux = reader.aux_proof()
        if aux.instance != share.instance or aux.round != share.round + 1:
            raise MalformedMessage("combined bundle must pair COIN(r) with AUX(r+1)")
        message = CombinedMsg(share=share, aux=aux)
    elif kind == KIND_DECISION_PROOF:
        instance = reader.instance()
        round_, value = reader.round_value()
        if value == C_VAL or round_ < 1:
            raise MalformedMessage("decision proof needs a binary value and round >= 1")
        aux_set = reader.vote_set(instance)
        coin = reader.tsig()
        (has_prior,) = reader.unpack(_FLAG)
        prior: Optional[ThresholdSignature] = None
        if has_prior == 1:
            prior = reader.tsig()
        elif has_prior != 0:
            raise MalformedMessage("bad prior-coin flag")
        message = DecisionProof(
            instance=instance,
            round=round_,
            value=value,
            aux_set=aux_set,
            coin=coin,
            prior_coin=prior,
        )
    elif kind == KIND_PROOF_REQUEST:
        instance = reader.instance()
        round_, value = reader.round_value()
        (requester,) = reader.unpack(_SIGNER)
        message = ProofRequest(
            instance=instance, round=round_, value=value, requester=requester
        )
    elif kind == KIND_PROOF_RESPONSE:
        instance = reader.instance()
        round_, value = reader.round_value()
        (responder,) = reader.unpack(_SIGNER)
        message = ProofResponse(
            instance=instance,
            round=round_,
            value=value,
            responder=responder,
            proofs=reader.vote_set(instance),
        )
    else:
        raise MalformedMessage(f"unknown message kind 0x{kind:02x}")

    reader.done()
    return message


def kind_of(data: bytes) -> str:
    """Short kind name for a raw payload ("garbage" when unknown)."""
    if not data:
        return "garbage"
    return KIND_NAMES.get(data[0], "garbage")
