"""Tests for the canonical wire encoding."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aux_consensus.const import C_VAL
from aux_consensus.core.exceptions import MalformedMessage
from aux_consensus.crypto.keyring import Signature
from aux_consensus.protocol.codec import (
    KIND_NAMES,
    decode,
    decode_vote,
    encode,
    encode_vote,
    kind_of,
)
from aux_consensus.protocol.coin import make_share
from aux_consensus.protocol.messages import (
    AuxMsg,
    AuxProofMsg,
    CombinedMsg,
    ProofRequest,
    ProofResponse,
    SignedAux,
)


def test_aux_with_proofs_decodes_to_same_message(aux_msg, signed_aux):
    proofs = [signed_aux(i, 0, 1) for i in (2, 0, 1)]
    msg = aux_msg(3, 1, 1, proofs)
    data = encode(msg)
    assert decode(data) == msg
    assert kind_of(data) == "aux"


def test_encoding_is_canonical(signed_aux):
    """Proof order does not change the bytes."""
    vote = signed_aux(0, 2, 0)
    proofs = [signed_aux(i, 1, 0) for i in range(3)]
    a = AuxProofMsg(signed=vote, proofs=frozenset(proofs))
    b = AuxProofMsg(signed=vote, proofs=frozenset(reversed(proofs)))
    assert encode(a) == encode(b)


def test_combined_bundle(provider, instance, aux_msg, signed_aux):
    share = make_share(provider.signer_for(1), instance, 2)
    bundle = CombinedMsg(share=share, aux=aux_msg(1, 3, C_VAL, [signed_aux(0, 2, 1)]))
    data = encode(bundle)
    assert kind_of(data) == "combined"
    assert decode(data) == bundle


def test_combined_bundle_requires_adjacent_rounds(provider, instance, aux_msg):
    share = make_share(provider.signer_for(1), instance, 2)
    bundle = CombinedMsg(share=share, aux=aux_msg(1, 2, 0))
    with pytest.raises(MalformedMessage, match="COIN"):
        decode(encode(bundle))


def test_proof_request_and_response(instance, signed_aux):
    request = ProofRequest(instance=instance, round=3, value=1, requester=2)
    assert decode(encode(request)) == request

    response = ProofResponse(
        instance=instance,
        round=3,
        value=1,
        responder=0,
        proofs=frozenset({signed_aux(1, 2, 1), signed_aux(3, 2, 1)}),
    )
    assert kind_of(encode(response)) == "proof_response"
    assert decode(encode(response)) == response


@pytest.mark.parametrize(
    "data",
    [
        b"",
        b"\x7f",
        b"\x01" + bytes(10),
    ],
)
def test_decode_rejects_garbage(data):
    with pytest.raises(MalformedMessage):
        decode(data)


def test_decode_rejects_trailing_bytes(aux_msg):
    with pytest.raises(MalformedMessage, match="trailing"):
        decode(encode(aux_msg(0, 0, 1)) + b"\x00")


def test_decode_rejects_illegal_values(aux_msg, signed_aux, instance, provider):
    # round 0 may not carry C_VAL
    c_val = AuxMsg(instance=instance, round=0, value=C_VAL)
    signed = SignedAux(aux=c_val, signature=provider.sign(0, b"irrelevant"))
    with pytest.raises(MalformedMessage):
        decode(encode(AuxProofMsg(signed=signed)))

    # round-0 votes carry no proofs
    with pytest.raises(MalformedMessage):
        decode(encode(aux_msg(0, 0, 1, [signed_aux(1, 0, 1)])))

    # proofs must come from earlier rounds
    with pytest.raises(MalformedMessage):
        decode(encode(aux_msg(0, 2, 1, [signed_aux(1, 2, 1)])))

    data = bytearray(encode(aux_msg(0, 1, 1)))
    data[1 + 32 + 4] = 7  # value byte after kind, instance and round
    with pytest.raises(MalformedMessage, match="illegal"):
        decode(bytes(data))


def test_encode_rejects_bad_fields(signed_aux):
    vote = signed_aux(0, 1, 1)
    short = SignedAux(
        aux=AuxMsg(instance=b"short", round=1, value=1), signature=vote.signature
    )
    with pytest.raises(MalformedMessage):
        encode(AuxProofMsg(signed=short))

    unsigned = SignedAux(aux=vote.aux, signature=Signature(signer=0, digest=b"x"))
    with pytest.raises(MalformedMessage):
        encode(AuxProofMsg(signed=unsigned))

    with pytest.raises(MalformedMessage):
        encode("not a message")


def test_kind_of():
    assert kind_of(b"") == "garbage"
    assert kind_of(b"\xff") == "garbage"
    for kind, name in KIND_NAMES.items():
        assert kind_of(bytes([kind])) == name


def test_vote_payload():
    assert decode_vote(encode_vote(5, 1)) == (5, 1)
    with pytest.raises(MalformedMessage):
        decode_vote(b"\x00")


@settings(max_examples=300, deadline=None)
@given(
    kind=st.sampled_from(sorted(KIND_NAMES)),
    body=st.binary(max_size=256),
)
def test_decode_never_raises_anything_but_malformed(kind, body):
    """Arbitrary input either decodes or raises MalformedMessage."""
    data = bytes([kind]) + body
    try:
        message = decode(data)
    except MalformedMessage:
        return
    assert encode(message) == data
