import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from naive import NaiveGraph, naive_red_sigma
from persistent_phylo.graph import GraphStateError, bits, build_graph
from persistent_phylo.matrix import BinaryMatrix
from persistent_phylo.realization import (
    RealizationEvent, Reduction, SigmaFailure, apply_sequence, find_red_sigma, realize_character,
    replay, verify_reduction,
)


def _as_sets(g):
    sp = g.species_labels
    black = {g.character_labels[c]: {sp[s] for s in bits(g.black[c])} for c in range(g.m)}
    red = {g.character_labels[c]: {sp[s] for s in bits(g.red[c])} for c in range(g.m)}
    return black, red


def test_first_realization_on_worked(worked):
    g = build_graph(worked)
    ev = realize_character(g, g.character_index("A"))
    assert ev.realized == "A"
    assert ev.black_edges_removed == [("A", "s1"), ("A", "s2")]
    assert [s for _, s in ev.red_edges_added] == ["s3", "s4", "s5", "s6", "s7", "s8", "s9"]
    assert ev.species_isolated == ["s1"] and ev.characters_isolated == []


def test_second_realization_isolates_A(worked):
    g = build_graph(worked)
    realize_character(g, 0)
    ev = realize_character(g, 1)
    assert ev.characters_isolated == ["A"]
    # s3 keeps only its red A edge after B, so losing A isolates it
    assert ev.log == [("gain", "B"), ("species", "s2"), ("loss", "A"), ("species", "s3")]


def test_realizing_twice_is_a_state_error(worked):
    g = build_graph(worked)
    realize_character(g, 0)
    with pytest.raises(GraphStateError):
        realize_character(g, 0)


def test_event_dict_round_trip(worked):
    _, red = replay(worked, list("ABCFDE"))
    for ev in red.trace:
        assert RealizationEvent.from_dict(ev.to_dict()) == ev
    assert Reduction.from_dict(red.to_dict()) == red


def test_verify_worked_orders(worked):
    assert verify_reduction(worked, list("ABCFDE"))
    assert verify_reduction(worked, list("ABCDFE"))
    bad = verify_reduction(worked, list("BACFDE"))
    assert not bad and bad.failing_step is not None


def test_verify_rejects_non_permutations(worked):
    with pytest.raises(ValueError):
        verify_reduction(worked, list("ABC"))
    with pytest.raises(ValueError):
        verify_reduction(worked, list("ABCFDA"))


def test_replay_accepts_prefix(worked):
    g, res = replay(worked, ["A", "B"])
    assert isinstance(res, Reduction) and len(res.trace) == 2
    assert g.species_present & 0b11 == 0


def test_sigma_witness_known_case():
    # eight-cycle: realizing c4, c1, c2 creates a red Sigma-graph
    m = BinaryMatrix.from_rows([[0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0], [1, 0, 0, 0], [1, 1, 1, 1]])
    g = build_graph(m)
    res = apply_sequence(g, [3, 0, 1])
    assert isinstance(res, SigmaFailure)
    assert res.witness.holds_in(g)


def _random_matrix(rng, n, m, p=0.5):
    return BinaryMatrix.from_rows([[int(rng.random() < p) for _ in range(m)] for _ in range(n)])


@given(st.integers(0, 10**9), st.integers(2, 7), st.integers(1, 5))
@settings(max_examples=150, deadline=None)
def test_realization_matches_definition(seed, n, m):
    rng = random.Random(seed)
    mx = _random_matrix(rng, n, m)
    g = build_graph(mx)
    ng = NaiveGraph.from_matrix(BinaryMatrix.from_rows(
        [[g.black[c] >> s & 1 for c in range(g.m)] for s in range(g.n)],
        g.species_labels, g.character_labels))
    order = list(range(g.m))
    rng.shuffle(order)
    for c in order:
        realize_character(g, c)
        ng.realize(g.character_labels[c])
        black, red = _as_sets(g)
        assert black == ng.black and red == ng.red
        g.check_consistency()
        assert (find_red_sigma(g) is None) == (naive_red_sigma(ng) is None)


@given(st.integers(0, 10**9))
@settings(max_examples=100, deadline=None)
def test_witness_is_smallest_and_valid(seed):
    rng = random.Random(seed)
    g = build_graph(_random_matrix(rng, 6, 5))
    for c in rng.sample(range(g.m), g.m):
        realize_character(g, c)
        w = find_red_sigma(g)
        if w is None:
            continue
        assert w.holds_in(g)
        all_w = []
        for c1, c2 in itertools.permutations(g.active(), 2):
            for s1, s2, s3 in itertools.permutations(range(g.n), 3):
                cand = type(w)(s1, c1, s2, c2, s3)
                if cand.holds_in(g):
                    all_w.append(cand)
        assert w == min(all_w)
        break
