"""Tests for the validity predicate and proof construction."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aux_consensus.const import C_VAL
from aux_consensus.core.exceptions import InsufficientStore
from aux_consensus.crypto.keyring import Signature
from aux_consensus.protocol.messages import AuxMsg, AuxProofMsg, SignedAux
from aux_consensus.protocol.tally import AuxStore
from aux_consensus.protocol.validity import (
    Validity,
    build_proofs,
    is_valid,
    minimize_on_receive,
    minimize_proofs,
    missing_coins,
    prev_r,
    resolve_value,
)

N, T = 4, 1
TAG = bytes(32)


def vote(signer: int, round_: int, value: int) -> SignedAux:
    return SignedAux(
        aux=AuxMsg(instance=TAG, round=round_, value=value),
        signature=Signature(signer=signer, digest=bytes([signer, round_, value]) * 10 + b"xx"),
    )


def votes(round_: int, value: int, *signers: int) -> set[SignedAux]:
    return {vote(s, round_, value) for s in signers}


def store_of(items, coin_map=None) -> AuxStore:
    store = AuxStore()
    for item in items:
        store.add(item, resolve_value(item.round, item.value, coin_map or {}))
    return store


def test_prev_r():
    assert prev_r(3, 1, {1: 0, 2: 1}) == 1
    assert prev_r(4, 0, {1: 0, 2: 0, 3: 0}) == 0
    assert prev_r(4, 1, {1: 0, 2: 1, 3: 0}) == 3
    with pytest.raises(ValueError):
        prev_r(3, 1, {1: 0})
    with pytest.raises(ValueError):
        prev_r(2, C_VAL, {1: 0})


def test_missing_coins():
    assert missing_coins(1, {}) == frozenset()
    assert missing_coins(4, {2: 1}) == {1, 3}


def test_resolve_value():
    assert resolve_value(3, 1, {}) == 1
    assert resolve_value(3, C_VAL, {2: 0}) == 0
    assert resolve_value(3, C_VAL, {1: 0}) is None
    assert resolve_value(1, C_VAL, {0: 1}) is None


@pytest.mark.parametrize(
    "r,est,proofs,coin_map,expected",
    [
        (0, 1, set(), {}, Validity.VALID),
        (0, C_VAL, set(), {}, Validity.INVALID),
        (1, 0, votes(0, 0, 0, 2), {}, Validity.VALID),
        (1, 0, votes(0, 0, 0), {}, Validity.INVALID),
        (1, C_VAL, votes(0, 0, 0, 1), {}, Validity.INVALID),
        (2, 1, votes(1, 1, 0, 1, 2), {1: 0}, Validity.VALID),
        (2, 1, votes(1, 1, 0, 1), {1: 0}, Validity.INVALID),
        (2, 1, votes(0, 1, 0, 3), {1: 1}, Validity.VALID),
        (2, 1, votes(0, 1, 0, 3), {1: 0}, Validity.INVALID),
        (3, 0, votes(0, 0, 0, 1), {1: 0}, Validity.DEFERRED),
        (3, C_VAL, votes(0, 0, 1, 2), {1: 0, 2: 0}, Validity.VALID),
        (2, 5, set(), {1: 0}, Validity.INVALID),
    ],
)
def test_is_valid(r, est, proofs, coin_map, expected):
    assert is_valid(r, est, proofs, coin_map, N, T).status is expected


def test_deferred_lists_missing_rounds_and_resolves():
    proofs = votes(2, 0, 0, 1, 2)
    outcome = is_valid(3, 0, proofs, {1: 0}, N, T)
    assert outcome.is_deferred
    assert outcome.missing == {2}

    assert is_valid(3, 0, proofs, {1: 0, 2: 1}, N, T).is_valid
    # coin 2 = 0 moves prev_r to 0 and the round-2 votes no longer help
    assert not is_valid(3, 0, proofs, {1: 0, 2: 0}, N, T).is_valid


def test_c_val_proofs_count_toward_the_coin_value():
    """AUX(2, C_VAL) stands for coin 1."""
    coin_map = {1: 0, 2: 1}
    proofs = votes(2, C_VAL, 0, 1) | votes(2, 0, 2)
    assert is_valid(3, 0, proofs, coin_map, N, T).is_valid
    assert not is_valid(3, 0, proofs, {1: 1, 2: 1}, N, T).is_valid


def test_duplicate_signer_counts_once():
    proofs = {vote(0, 0, 1), vote(0, 0, 1)} | {
        SignedAux(aux=AuxMsg(TAG, 0, 1), signature=Signature(0, b"y" * 32))
    }
    assert not is_valid(1, 1, proofs, {}, N, T).is_valid


def test_build_proofs_picks_lowest_signers():
    store = store_of(votes(0, 0, 3, 1, 0) | votes(0, 1, 2))
    proofs = build_proofs(1, 0, store, {}, N, T)
    assert sorted(v.signer for v in proofs) == [0, 1]
    assert is_valid(1, 0, proofs, {}, N, T).is_valid


def test_build_proofs_round_zero_is_empty():
    assert build_proofs(0, 1, AuxStore(), {}, N, T) == frozenset()


def test_build_proofs_insufficient_store():
    store = store_of(votes(1, 0, 0, 1, 2))
    with pytest.raises(InsufficientStore):
        build_proofs(2, 1, store, {1: 0}, N, T)
    with pytest.raises(InsufficientStore):
        build_proofs(3, 1, store, {1: 0}, N, T)


def test_build_proofs_combined_covers_both_coin_outcomes():
    store = store_of(votes(0, 0, 0, 1) | votes(0, 1, 2, 3))
    proofs = build_proofs(2, C_VAL, store, {}, N, T, combined=True)
    assert proofs == frozenset(votes(0, 0, 0, 1) | votes(0, 1, 2, 3))
    for bit in (0, 1):
        assert is_valid(2, C_VAL, proofs, {1: bit}, N, T).is_valid


def test_build_proofs_combined_with_known_coin_is_plain():
    store = store_of(votes(0, 0, 0, 1) | votes(0, 1, 2, 3))
    proofs = build_proofs(2, C_VAL, store, {1: 1}, N, T, combined=True)
    assert proofs == frozenset(votes(0, 1, 2, 3))


def test_minimize_on_receive_keeps_minimal_subset():
    msg = AuxProofMsg(signed=vote(3, 1, 0), proofs=frozenset(votes(0, 0, 0, 1, 2)))
    kept = minimize_on_receive(msg, {}, N, T)
    assert kept == frozenset({vote(3, 1, 0)} | votes(0, 0, 0, 1))

    minimal = AuxProofMsg(signed=vote(3, 1, 0), proofs=frozenset(votes(0, 0, 0, 1)))
    assert minimize_on_receive(minimal, {}, N, T) == frozenset(
        {minimal.signed, *minimal.proofs}
    )


def test_minimize_on_receive_combined_keeps_one_set_per_value():
    proofs = votes(0, 0, 0, 1, 2) | votes(0, 1, 1, 2, 3)
    msg = AuxProofMsg(signed=vote(0, 2, C_VAL), proofs=frozenset(proofs))
    kept = minimize_on_receive(msg, {}, N, T, combined=True)
    assert kept == frozenset({msg.signed} | votes(0, 0, 0, 1) | votes(0, 1, 1, 2))


def test_minimize_proofs_insufficient():
    with pytest.raises(InsufficientStore):
        minimize_proofs(1, 0, votes(0, 0, 0), {}, N, T)


_cells = st.sets(
    st.tuples(
        st.integers(min_value=0, max_value=N - 1),
        st.integers(min_value=0, max_value=3),
        st.integers(min_value=0, max_value=1),
    ),
    max_size=24,
)


@settings(max_examples=200, deadline=None)
@given(
    cells=_cells,
    coins=st.lists(st.integers(0, 1), min_size=3, max_size=3),
    r=st.integers(min_value=1, max_value=4),
    est=st.integers(min_value=0, max_value=1),
)
def test_built_proofs_are_valid_and_minimal(cells, coins, r, est):
    """Removing any element from a built proof set breaks validity."""
    coin_map = {i + 1: bit for i, bit in enumerate(coins)}
    store = store_of(vote(s, rnd, v) for s, rnd, v in cells if rnd < r)
    try:
        proofs = build_proofs(r, est, store, coin_map, N, T)
    except InsufficientStore:
        assert not is_valid(
            r, est, [vote(s, rnd, v) for s, rnd, v in cells if rnd < r], coin_map, N, T
        ).is_valid
        return

    assert is_valid(r, est, proofs, coin_map, N, T).is_valid
    for element in proofs:
        assert not is_valid(r, est, proofs - {element}, coin_map, N, T).is_valid
