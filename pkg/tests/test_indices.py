import pytest
from hypothesis import given

from kamlab.indices import (
    ModeSet,
    MultiIndex,
    SignedIndexVector,
    is_admissible_pair,
    mass,
    momentum,
    quad_moment,
)
from polys import sparse_vectors


def test_default_mode_set():
    ms = ModeSet()
    assert ms.tangential == (1, 2, 4, 8, 16)
    assert len(ms.normal) == 33 - 5
    assert set(ms.tangential).isdisjoint(ms.normal)
    assert set(ms.modes) == set(range(-16, 17))


def test_mode_set_rejects_bad_cutoff():
    with pytest.raises(ValueError):
        ModeSet(4, 40)
    with pytest.raises(ValueError):
        ModeSet(-1, 1)


@pytest.mark.parametrize(
    "ell, m, p, d",
    [
        ({}, 0, 0, 0),
        ({1: 2, 4: 1, 2: -3}, 0, 0, 6),
        ({3: 1, 5: 1, 4: -2}, 0, 0, 2),
        ({1: 1, 2: -1}, 0, -1, -3),
    ],
)
def test_functionals_on_hand_examples(ell, m, p, d):
    assert mass(ell) == m
    assert momentum(ell) == p
    assert quad_moment(ell) == d


def test_cancellation_gives_empty_vector():
    v = SignedIndexVector.unit(5) - SignedIndexVector.unit(5)
    assert not v and momentum(v) == 0


@pytest.mark.parametrize(
    "alpha, beta, ok",
    [
        ({1: 1, 3: 1}, {2: 2}, True),
        ({1: 1}, {2: 1}, False),
        ({4: 2, -3: 1}, {4: 2, -3: 1}, True),
    ],
)
def test_admissible_pairs(alpha, beta, ok):
    assert is_admissible_pair(alpha, beta) is ok


def test_multi_index_rejects_negative_entries():
    with pytest.raises(ValueError):
        MultiIndex({1: -1})


@given(sparse_vectors(), sparse_vectors())
def test_functionals_are_linear(a, b):
    for f in (mass, momentum, quad_moment):
        assert f(a + b) == f(a) + f(b)


@given(sparse_vectors())
def test_plus_minus_decomposition(ell):
    plus, minus = ell.plus, ell.minus
    assert set(plus.support).isdisjoint(minus.support)
    assert plus - minus == ell
    assert ell.norm1 == plus.total + minus.total


@given(sparse_vectors())
def test_structural_equality_and_hash(ell):
    copy = SignedIndexVector(list(reversed(ell.entries)))
    assert copy == ell and hash(copy) == hash(ell)
