"""Tests for the distinct-signer tally and the aux_values store."""

from itertools import product

import pytest

from aux_consensus.crypto.keyring import Signature
from aux_consensus.protocol.messages import AuxMsg, CoinShare, SignedAux
from aux_consensus.protocol.tally import AuxStore, Tally

TAG = bytes(32)


def _vote(signer: int, round_: int, value: int) -> SignedAux:
    """Unsigned stand-in; the tally never checks signatures."""
    return SignedAux(
        aux=AuxMsg(instance=TAG, round=round_, value=value),
        signature=Signature(signer=signer, digest=bytes([signer]) * 32),
    )


def test_record_counts_distinct_signers():
    tally = Tally()
    for signer in (0, 1, 2):
        assert tally.record(_vote(signer, 1, 0))
    assert tally.cell(1, 0) == {0, 1, 2}
    assert not tally.record(_vote(1, 1, 0))
    assert tally.cell(1, 0) == {0, 1, 2}


def test_equivocator_sits_in_both_cells_once():
    tally = Tally()
    tally.record(_vote(3, 1, 0))
    tally.record(_vote(3, 1, 1))
    tally.record(_vote(3, 1, 1))
    assert tally.cell(1, 0) == {3}
    assert tally.cell(1, 1) == {3}
    assert tally.round_union(1) == {3}


def test_round_union_and_max_round():
    tally = Tally()
    assert tally.max_round() == -1
    tally.record(_vote(0, 2, 0))
    tally.record(_vote(1, 2, 1))
    tally.record(_vote(2, 3, 1))
    assert tally.round_union(2) == {0, 1}
    assert tally.max_round() == 3
    assert list(tally.cells()) == [(2, 0), (2, 1), (3, 1)]


def test_record_resolved_value():
    tally = Tally()
    tally.record(_vote(0, 2, 2), value=1)
    assert tally.cell(2, 1) == {0}
    assert tally.cell(2, 2) == frozenset()


def test_coin_signers(provider, instance):
    tally = Tally()
    share = CoinShare(instance=instance, round=1, signature=provider.sign(2, b"c"))
    assert tally.record(share)
    assert not tally.record(share)
    assert tally.coin_signers(1) == {2}


@pytest.mark.parametrize("n", [4, 5, 6, 7])
def test_no_round_holds_two_quorums(n):
    """
    Exhaustively assign each signer 0, 1, both or nothing with at most t
    equivocators; no assignment fills both value cells to n-t.
    """
    t = (n - 1) // 3
    quorum = n - t
    for assignment in product(("0", "1", "both", "none"), repeat=n):
        if assignment.count("both") > t:
            continue
        tally = Tally()
        for signer, choice in enumerate(assignment):
            if choice in ("0", "both"):
                tally.record(_vote(signer, 1, 0))
            if choice in ("1", "both"):
                tally.record(_vote(signer, 1, 1))
        assert not (
            len(tally.cell(1, 0)) >= quorum and len(tally.cell(1, 1)) >= quorum
        ), assignment


def test_store_keeps_one_vote_per_signer_and_cell():
    store = AuxStore()
    first = _vote(1, 0, 0)
    assert store.add(first, 0)
    assert not store.add(first, 0)
    assert first in store
    assert len(store) == 1

    store.add_all([(_vote(3, 0, 0), 0), (_vote(0, 0, 0), 0), (_vote(2, 0, 1), 1)])
    assert [v.signer for v in store.support(0, 0)] == [0, 1, 3]
    assert [v.signer for v in store.support(0, 1)] == [2]
    assert store.tally.cell(0, 0) == {0, 1, 3}


def test_store_version_tracks_changes():
    store = AuxStore()
    before = store.version
    store.add(_vote(0, 0, 1), 1)
    store.add(_vote(0, 0, 1), 1)
    assert store.version == before + 1
