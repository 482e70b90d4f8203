"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that the terminal summary prints; run
``pytest tests/test_acceptance.py -v`` to see them.
"""

import math
import random
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from naive import NaiveGraph, naive_is_chain, naive_is_p7_center, naive_start_species, row_sets
from persistent_phylo.graph import bits, build_graph, canonical_matrix
from persistent_phylo.oracle import (
    InstanceFamily, brute_force_reduction, enumerate_instances, generate_reducible,
)
from persistent_phylo.realization import realize_character, replay, verify_reduction
from persistent_phylo.recognizer import check_refutation, find_reduction, table_rows
from persistent_phylo.tree import build_tree, tree_violations

# tolerances
WORKED_EXAMPLE_SECONDS = 1.0
AGREEMENT_SECONDS = 600.0
RANDOM_INSTANCES = 10_000
DENSITIES = (0.3, 0.5, 0.7)
MAX_BUDGET_RATE = 0.01
SWAP_SAMPLES = 1000
BENCH_SIZES = (50, 100, 200, 400)
BENCH_RUN_SECONDS = 30.0
MAX_LOGLOG_SLOPE = 5.0

EXPECTED_ITERATIONS = [
    # S_7^m, C_I (as pi_I), C_U, C_C, c_m, pi_U, realized
    (["s1"], [], list("ABCDEF"), [], None, None, ["A"]),
    (None, ["B"], [], list("CDEF"), None, ["B"], ["B"]),
    (None, ["C"], [], list("DEF"), None, ["C"], ["C"]),
    (None, ["F", "E"], ["D"], [], "E", ["F", "D", "E"], ["F", "D", "E"]),
]


def record(number, title, ok, detail):
    line = f"criterion {number} ({title}): {'PASS' if ok else 'FAIL'}; {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


class Case:
    __slots__ = ("matrix", "outcome", "oracle", "suite")

    def __init__(self, matrix, suite, with_oracle=True, budget=10_000_000):
        self.matrix = matrix
        self.suite = suite
        self.outcome = find_reduction(matrix)
        self.oracle = brute_force_reduction(matrix, budget).verdict if with_oracle else None


@pytest.fixture(scope="module")
def agreement_suite():
    t0 = time.perf_counter()
    cases = [Case(mx, "exhaustive") for mx in enumerate_instances(InstanceFamily((2, 5), (2, 4)))]
    per_density = math.ceil(RANDOM_INSTANCES / len(DENSITIES))
    for i, d in enumerate(DENSITIES):
        fam = InstanceFamily((2, 9), (2, 7), mode="random", seed=1000 + i, density=d, count=per_density)
        cases += [Case(mx, f"random-{d}") for mx in enumerate_instances(fam)]
    return cases, time.perf_counter() - t0


@pytest.fixture(scope="module")
def generated_suite():
    rng = random.Random(2024)
    out = []
    for seed in range(60):
        n = 2 * rng.randint(4, 30)
        out.append(Case(generate_reducible(n, max(2, n // 2), seed=seed), "generated", with_oracle=False))
    return out


@pytest.fixture(scope="module")
def accepted(worked, agreement_suite, generated_suite):
    cases = [Case(worked, "worked")] + agreement_suite[0] + generated_suite
    return [c for c in cases if c.outcome.reducible]


def test_worked_example(worked):
    t0 = time.perf_counter()
    out = find_reduction(worked)
    rows = table_rows(out)
    got = [(r["S_7m"], r["C_I"], r["C_U"], r["C_C"], r["c_m"], r["pi_U"], r["realized"]) for r in rows]
    both = verify_reduction(worked, list("ABCFDE")) and verify_reduction(worked, list("ABCDFE"))
    elapsed = time.perf_counter() - t0
    ok = out.reducible and got == EXPECTED_ITERATIONS and bool(both) and elapsed < WORKED_EXAMPLE_SECONDS
    assert record(1, "worked example", ok,
                  f"verdict={out.verdict}, {len(rows)} iterations match={got == EXPECTED_ITERATIONS}, "
                  f"both orderings verify={bool(both)}, {elapsed:.3f}s")


def test_oracle_equivalence(agreement_suite):
    cases, elapsed = agreement_suite
    exhaustive = [c for c in cases if c.suite == "exhaustive"]
    rand = [c for c in cases if c.suite != "exhaustive"]
    budget_out = [c for c in cases if c.oracle == "budget_exceeded"]
    conclusive = [c for c in cases if c.oracle != "budget_exceeded"]
    disagree = [c for c in conclusive if c.outcome.verdict != c.oracle]
    densities = {c.suite for c in rand}
    ok = (not disagree and len(rand) >= RANDOM_INSTANCES and len(densities) == len(DENSITIES)
          and len(budget_out) < MAX_BUDGET_RATE * len(cases) and elapsed < AGREEMENT_SECONDS
          and all(c.matrix.n <= 9 and c.matrix.m <= 7 for c in rand))
    assert record(2, "oracle equivalence", ok,
                  f"{len(exhaustive)} exhaustive + {len(rand)} random, {len(disagree)} disagreements, "
                  f"{len(budget_out)} over budget, "
                  f"{sum(c.oracle == 'reducible' for c in cases)} reducible, {elapsed:.1f}s")


def test_certification(worked, agreement_suite, generated_suite):
    cases = [Case(worked, "worked", with_oracle=False)] + agreement_suite[0] + generated_suite
    acc = [c for c in cases if c.outcome.reducible]
    rej = [c for c in cases if not c.outcome.reducible]
    bad_acc = [c for c in acc if not verify_reduction(c.matrix, c.outcome.reduction.ordering)]
    bad_rej = [c for c in rej if c.outcome.refutation is None or not check_refutation(c.matrix, c.outcome.refutation)]
    ok = not bad_acc and not bad_rej
    assert record(3, "certification", ok,
                  f"{len(acc) - len(bad_acc)}/{len(acc)} reductions verify, "
                  f"{len(rej) - len(bad_rej)}/{len(rej)} refutations check")


def _components(g):
    return {(comp.species, comp.characters) for comp in g.components()}


def _invariant_violations(case):
    """Yield (name, detail) for every invariant this accepted run breaks."""
    mx, out = case.matrix, case.outcome
    g0 = build_graph(mx)
    canon = canonical_matrix(g0)
    order = out.reduction.ordering

    # partial reductions stay connected until the last realization
    g = g0.copy()
    for k, label in enumerate(order[:-1], start=1):
        realize_character(g, g.character_index(label))
        if len(g.components()) > 1:
            yield "single component", f"{k} components split"
            break

    for t in out.trace:
        p = t.partitions
        if p.C_C and p.C_U:
            yield "C_C/C_U exclusion", f"step {t.step}"
        if p.pi_I is not None or t.pi_U is not None:
            gk, _ = replay(mx, order[:t.k])
            ng = NaiveGraph.from_matrix(canonical_matrix(gk))
            sp, ch = gk.species_labels, gk.character_labels
            if p.pi_I is not None and not naive_is_chain(ng, [ch[c] for c in p.pi_I], {sp[s] for s in bits(p.S_B)}):
                yield "pi_I chain", f"step {t.step}"
            if t.pi_U is not None and not naive_is_chain(ng, [ch[c] for c in t.pi_U], {sp[s] for s in bits(p.S_B_m)}):
                yield "pi_U chain", f"step {t.step}"

    black = {c: set(canon.species_of(c)) for c in canon.character_labels}
    if naive_is_p7_center(black, order[0]):
        yield "first not a P7 centre", order[0]

    rows = row_sets(canon)
    starts = naive_start_species(canon)
    if not any(set(order[:len(rows[s])]) == rows[s] for s in starts):
        yield "first characters form a start species", str(order[:3])

    first = out.trace[0]
    if first.s7m is not None and len(first.s7m) > 1:
        for t in out.trace[1:]:
            if len(t.partitions.C_U) > 1:
                yield "|C_U| bound", f"step {t.step}"


def _swap_points(case):
    """Indices k (0-based) whose realization keeps the component vertex sets unchanged."""
    mx, order = case.matrix, case.outcome.reduction.ordering
    g = build_graph(mx)
    points = []
    for k, label in enumerate(order[:-1]):
        before = _components(g)
        isolated_before = g.species_present
        ev = realize_character(g, g.character_index(label))
        after = _components(g)
        same = ({s for s, _ in before} == {s for s, _ in after}
                and {frozenset(c) for _, c in before} == {frozenset(c) for _, c in after}
                and g.species_present == isolated_before and not ev.splits_or_isolates)
        if same:
            points.append(k)
    return points


def test_invariants(accepted):
    rng = random.Random(7)
    violations = []
    for case in accepted:
        for name, detail in _invariant_violations(case):
            violations.append((name, detail, case.matrix.to_csv()))
    pool = [(c, k) for c in accepted for k in _swap_points(c)]
    sample = [pool[rng.randrange(len(pool))] for _ in range(SWAP_SAMPLES)] if pool else []
    swap_fail = 0
    for case, k in sample:
        order = list(case.outcome.reduction.ordering)
        order[k], order[k + 1] = order[k + 1], order[k]
        if not verify_reduction(case.matrix, order):
            swap_fail += 1
    ok = not violations and not swap_fail and len(sample) == SWAP_SAMPLES
    names = sorted({v[0] for v in violations})
    multi = sum(1 for c in accepted if c.outcome.trace[0].s7m and len(c.outcome.trace[0].s7m) > 1)
    assert record(4, "invariant suite", ok,
                  f"{len(accepted)} accepted runs ({multi} with several start species), "
                  f"{len(violations)} violations {names}, "
                  f"swap closure {len(sample) - swap_fail}/{len(sample)} from {len(pool)} swap points")


def test_tree_validity(worked, agreement_suite):
    cases = [Case(worked, "worked", with_oracle=False)] + agreement_suite[0]
    acc = [c for c in cases if c.outcome.reducible]
    bad = []
    for c in acc:
        problems = tree_violations(build_tree(c.matrix, c.outcome.reduction), c.matrix)
        if problems:
            bad.append((c.matrix.to_csv(), problems))
    assert record(5, "tree validity", not bad and len(acc) > 0,
                  f"{len(acc) - len(bad)}/{len(acc)} trees valid with exact row reconstruction "
                  f"and a single gain path")


def test_performance():
    sizes, times = [], []
    for n in BENCH_SIZES:
        mx = generate_reducible(n, n // 2, seed=n)
        t0 = time.perf_counter()
        out = find_reduction(mx)
        times.append(time.perf_counter() - t0)
        sizes.append(mx.n * mx.m)
        assert out.reducible
    slope = float(np.polyfit(np.log(sizes), np.log(times), 1)[0])
    ok = max(times) < BENCH_RUN_SECONDS and slope <= MAX_LOGLOG_SLOPE
    ladder = ", ".join(f"{n}x{n // 2}: {t:.2f}s" for n, t in zip(BENCH_SIZES, times))
    assert record(6, "performance", ok, f"{ladder}; log-log slope {slope:.2f}")
