import json
import random

import pytest

from naive import naive_count_family, naive_reducible
from persistent_phylo.graph import build_graph, validate
from persistent_phylo.matrix import BinaryMatrix
from persistent_phylo.oracle import (
    InstanceFamily, agreement_check, brute_force_reduction, enumerate_instances, generate_reducible,
)
from persistent_phylo.realization import verify_reduction
from test_recognizer import EIGHT_CYCLE

# distinct-neighbourhood, maximal, connected instances up to row/column permutation
FAMILY_3x2 = 1
FAMILY_UP_TO_5x4 = 43


def test_worked_by_search(worked):
    res = brute_force_reduction(worked)
    assert res.verdict == "reducible"
    assert verify_reduction(worked, res.ordering)


def test_trivial_and_rejecting():
    assert brute_force_reduction(BinaryMatrix.from_rows([[1], [1]])).ordering == ["c1"]
    assert brute_force_reduction(EIGHT_CYCLE).verdict == "not_reducible"


def test_budget_exhaustion(worked):
    assert brute_force_reduction(EIGHT_CYCLE, budget=2).verdict == "budget_exceeded"


def test_frozen_family_counts():
    assert sum(1 for _ in enumerate_instances(InstanceFamily((3, 3), (2, 2)))) == FAMILY_3x2
    assert sum(1 for _ in enumerate_instances(InstanceFamily((2, 5), (2, 4)))) == FAMILY_UP_TO_5x4


@pytest.mark.parametrize("n, m", [(3, 2), (3, 3), (4, 2), (4, 3)])
def test_family_counts_match_naive_enumeration(n, m):
    got = sum(1 for _ in enumerate_instances(InstanceFamily((n, n), (m, m))))
    assert got == naive_count_family(n, m)


def test_two_by_one_filters():
    assert list(enumerate_instances(InstanceFamily((2, 2), (1, 1)))) == []
    loose = list(enumerate_instances(InstanceFamily((2, 2), (1, 1), connected=False)))
    assert [mx.cells for mx in loose] == [((0,), (1,))]


def test_exhaustive_guard():
    with pytest.raises(ValueError):
        InstanceFamily((1, 7), (1, 6))


def test_random_stream_is_deterministic():
    fam = InstanceFamily((3, 8), (3, 6), mode="random", seed=42, count=30)
    assert list(enumerate_instances(fam)) == list(enumerate_instances(fam))
    other = InstanceFamily((3, 8), (3, 6), mode="random", seed=43, count=30)
    assert list(enumerate_instances(fam)) != list(enumerate_instances(other))


def _small_random(count, seed):
    rng = random.Random(seed)
    for _ in range(count):
        n, m = rng.randint(2, 6), rng.randint(1, 5)
        yield BinaryMatrix.from_rows([[int(rng.random() < 0.5) for _ in range(m)] for _ in range(n)])


def test_pruning_and_memo_do_not_change_verdicts():
    for mx in _small_random(500, 7):
        full = brute_force_reduction(mx, prune=True, memo=True).verdict
        assert brute_force_reduction(mx, prune=False, memo=True).verdict == full
        assert brute_force_reduction(mx, prune=True, memo=False).verdict == full


def test_search_matches_permutation_enumeration():
    for mx in _small_random(150, 11):
        res = brute_force_reduction(mx)
        assert (res.verdict == "reducible") == (naive_reducible(mx) is not None)
        if res.ordering:
            assert verify_reduction(mx, res.ordering)


def test_agreement_report_shape():
    rep = agreement_check(InstanceFamily((2, 4), (2, 3)))
    lines = [json.loads(x) for x in rep.to_jsonl().splitlines()]
    assert lines[-1]["summary"] and lines[-1]["total"] == rep.total == len(lines) - 1
    assert set(lines[0]) == {"id", "n", "m", "recognizer", "oracle", "agree"}
    assert rep.disagreements == []


def test_empty_family():
    rep = agreement_check([])
    assert rep.total == 0 and rep.to_jsonl().strip() == json.dumps(rep.summary())


def test_budget_is_never_agreement():
    rep = agreement_check([EIGHT_CYCLE], budget=1)
    assert rep.inconclusive == 1 and rep.agree == 0 and rep.records[0].agree is None


def test_workers_give_identical_records():
    fam = InstanceFamily((2, 5), (2, 4))
    assert agreement_check(fam, workers=2).records == agreement_check(fam).records


def test_exhaustive_agreement_up_to_6x5():
    rep = agreement_check(InstanceFamily((2, 6), (2, 5)), keep_records=False)
    assert rep.total == rep.agree and not rep.disagreements


@pytest.mark.parametrize("n, m, seed", [(8, 4, 0), (10, 5, 1), (12, 6, 2)])
def test_generated_instances_are_reducible(n, m, seed):
    mx = generate_reducible(n, m, seed=seed)
    assert (mx.n, mx.m) == (n, m)
    rep = validate(build_graph(mx))
    assert rep.is_maximal and rep.is_connected and not rep.merged_duplicates
    assert brute_force_reduction(mx).verdict == "reducible"
    assert generate_reducible(n, m, seed=seed) == mx


def test_generator_size_bound():
    with pytest.raises(ValueError):
        generate_reducible(12, 5)


@pytest.mark.slow
def test_exhaustive_agreement_up_to_7x5():
    rep = agreement_check(InstanceFamily((2, 7), (2, 5)), keep_records=False)
    assert rep.total == rep.agree and not rep.disagreements
