"""Exhaustive reducibility search and recognizer agreement harness."""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .graph import RedBlackGraph, build_graph, validate
from .matrix import BinaryMatrix
from .realization import has_red_sigma, realize_character
from .recognizer import NotMaximalError, find_reduction

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 10_000_000
EXHAUSTIVE_CELL_LIMIT = 36


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class OracleResult:
    verdict: str  # "reducible" | "not_reducible" | "budget_exceeded"
    ordering: Optional[List[str]] = None
    nodes: int = 0


def brute_force_reduction(matrix: BinaryMatrix, budget: int = DEFAULT_BUDGET,
                          prune: bool = True, memo: bool = True) -> OracleResult:
    """Depth-first search over realization orders.

    ``prune`` drops any prefix whose graph holds a red Sigma-graph (such a
    graph can never become edgeless); ``memo`` remembers states already
    shown to be dead ends. Both switches exist so the shortcuts can be
    cross-checked against the plain search.
    """
    graph = build_graph(matrix)
    dead = set()
    nodes = 0

    def search(g: RedBlackGraph) -> Optional[List[int]]:
        nonlocal nodes
        pending = g.inactive()
        if not pending:
            return [] if g.is_edgeless() else None
        for c in pending:
            nodes += 1
            if nodes > budget:
                raise BudgetExceeded
            h = g.copy()
            realize_character(h, c)
            if prune and has_red_sigma(h, involving=c):
                continue
            key = h.state_key() if memo else None
            if memo and key in dead:
                continue
            rest = search(h)
            if rest is not None:
                return [c] + rest
            if memo:
                dead.add(key)
        return None

    try:
        found = search(graph)
    except BudgetExceeded:
        return OracleResult("budget_exceeded", nodes=nodes)
    if found is None:
        return OracleResult("not_reducible", nodes=nodes)
    return OracleResult("reducible", [graph.character_labels[c] for c in found], nodes)


# ---- instance families ---------------------------------------------------------


@dataclass
class InstanceFamily:
    n_range: Tuple[int, int]
    m_range: Tuple[int, int]
    mode: str = "exhaustive"  # or "random"
    seed: int = 0
    connected: bool = True
    maximal: bool = True
    distinct_neighborhoods: bool = True
    density: float = 0.5
    count: int = 1000  # random mode: number of accepted instances to yield
    max_draws: int = 10_000_000

    def __post_init__(self):
        if self.mode not in ("exhaustive", "random"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "exhaustive" and self.n_range[1] * self.m_range[1] > EXHAUSTIVE_CELL_LIMIT:
            raise ValueError(
                f"exhaustive enumeration limited to n*m <= {EXHAUSTIVE_CELL_LIMIT}, "
                f"got {self.n_range[1]}*{self.m_range[1]}"
            )


def passes_filters(rows: Sequence[Sequence[int]], family: InstanceFamily) -> bool:
    n = len(rows)
    m = len(rows[0]) if n else 0
    cols = [frozenset(i for i in range(n) if rows[i][j]) for j in range(m)]
    if family.distinct_neighborhoods:
        if len(set(map(tuple, rows))) != n or len(set(cols)) != m:
            return False
    if family.maximal:
        for a in cols:
            for b in cols:
                if a < b:
                    return False
    if family.connected:
        if n == 0 or m == 0:
            return False
        if any(not any(r) for r in rows) or any(not c for c in cols):
            return False
        seen_s = {0}
        frontier = {0}
        seen_c = set()
        while frontier:
            new_c = {j for j in range(m) if j not in seen_c and cols[j] & frontier}
            seen_c |= new_c
            new_s = set().union(*(cols[j] for j in new_c)) - seen_s if new_c else set()
            seen_s |= new_s
            frontier = new_s
        if len(seen_s) != n:
            return False
    return True


def _canonical(rows: Tuple[Tuple[int, ...], ...], perms) -> Tuple[Tuple[int, ...], ...]:
    return min(tuple(sorted(tuple(r[p] for p in perm) for r in rows)) for perm in perms)


def enumerate_instances(family: InstanceFamily) -> Iterator[BinaryMatrix]:
    if family.mode == "exhaustive":
        yield from _exhaustive(family)
    else:
        yield from _random(family)


def _exhaustive(family: InstanceFamily) -> Iterator[BinaryMatrix]:
    for m in range(family.m_range[0], family.m_range[1] + 1):
        all_rows = list(itertools.product((0, 1), repeat=m))
        perms = list(itertools.permutations(range(m)))
        for n in range(family.n_range[0], family.n_range[1] + 1):
            choose = itertools.combinations if family.distinct_neighborhoods else itertools.combinations_with_replacement
            seen = set()
            for rows in choose(all_rows, n):
                if not passes_filters(rows, family):
                    continue
                key = _canonical(rows, perms)
                if key in seen:
                    continue
                seen.add(key)
                yield BinaryMatrix.from_rows(list(key))


def _random(family: InstanceFamily) -> Iterator[BinaryMatrix]:
    rng = np.random.default_rng(family.seed)
    produced = 0
    draws = 0
    while produced < family.count and draws < family.max_draws:
        draws += 1
        n = int(rng.integers(family.n_range[0], family.n_range[1] + 1))
        m = int(rng.integers(family.m_range[0], family.m_range[1] + 1))
        cells = (rng.random((n, m)) < family.density).astype(int)
        rows = [tuple(int(v) for v in r) for r in cells]
        if passes_filters(rows, family):
            produced += 1
            yield BinaryMatrix.from_rows(rows)


# ---- agreement -------------------------------------------------------------------------


@dataclass
class AgreementRecord:
    id: int
    n: int
    m: int
    recognizer: str
    oracle: str
    agree: Optional[bool]  # None when the oracle ran out of budget

    def to_dict(self) -> dict:
        return {"id": self.id, "n": self.n, "m": self.m, "recognizer": self.recognizer,
                "oracle": self.oracle, "agree": self.agree}


@dataclass
class AgreementReport:
    total: int = 0
    agree: int = 0
    inconclusive: int = 0
    disagreements: List[BinaryMatrix] = field(default_factory=list)
    records: List[AgreementRecord] = field(default_factory=list)

    def summary(self) -> dict:
        return {"summary": True, "total": self.total, "agree": self.agree,
                "inconclusive": self.inconclusive, "disagreements": len(self.disagreements)}

    def to_jsonl(self) -> str:
        lines = [json.dumps(r.to_dict()) for r in self.records]
        lines.append(json.dumps(self.summary()))
        return "\n".join(lines) + "\n"


def classify(matrix: BinaryMatrix) -> str:
    try:
        return find_reduction(matrix).verdict
    except NotMaximalError:
        return "not_maximal"


def _judge(args) -> Tuple[str, str]:
    matrix, budget = args
    return classify(matrix), brute_force_reduction(matrix, budget).verdict


def agreement_check(instances, budget: int = DEFAULT_BUDGET, keep_records: bool = True,
                    workers: int = 1) -> AgreementReport:
    """Run recognizer and oracle on every instance (an InstanceFamily or an iterable of matrices).

    Records come back in instance order whatever the worker count.
    """
    if isinstance(instances, InstanceFamily):
        instances = enumerate_instances(instances)
    report = AgreementReport()
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        matrices = list(instances)
        with ProcessPoolExecutor(workers) as pool:
            verdicts = list(pool.map(_judge, [(mx, budget) for mx in matrices], chunksize=32))
        pairs = zip(matrices, verdicts)
    else:
        pairs = ((mx, _judge((mx, budget))) for mx in instances)
    for i, (matrix, (rec, orc)) in enumerate(pairs):
        report.total += 1
        if orc == "budget_exceeded":
            report.inconclusive += 1
            agree = None
            log.warning("oracle budget exceeded on instance %d", i)
        else:
            agree = rec == orc
            if agree:
                report.agree += 1
            else:
                report.disagreements.append(matrix)
        if keep_records:
            report.records.append(AgreementRecord(i, matrix.n, matrix.m, rec, orc, agree))
    return report


def is_connected_maximal(matrix: BinaryMatrix) -> bool:
    report = validate(build_graph(matrix))
    return report.is_maximal and report.is_connected


# ---- reducible instance generator -----------------------------------------------


def _random_dollo_states(rng: np.random.Generator, m: int, nodes: int, p_loss: float) -> np.ndarray:
    """Node states of a random Dollo-1 tree as a (nodes, m) 0/1 array.

    Gains form one path (interleaved with losses); a random tree of
    further losses hangs below its tip. Each character is lost at most once.
    """
    states = [np.zeros(m, dtype=bool)]
    lost = np.zeros(m, dtype=bool)
    order = rng.permutation(m)
    gained = 0
    while gained < m:
        st = states[-1]
        cand = np.flatnonzero(st & ~lost)
        new = st.copy()
        if cand.size and rng.random() < p_loss:
            c = cand[rng.integers(cand.size)]
            lost[c] = True
            new[c] = False
        else:
            new[order[gained]] = True
            gained += 1
        states.append(new)
    frontier = [len(states) - 1]
    while len(states) < nodes and frontier:
        i = int(rng.integers(len(frontier)))
        node = frontier[i]
        cand = np.flatnonzero(states[node] & ~lost)
        if not cand.size:
            frontier.pop(i)
            continue
        c = cand[rng.integers(cand.size)]
        lost[c] = True
        new = states[node].copy()
        new[c] = False
        states.append(new)
        frontier.append(len(states) - 1)
    return np.array(states)


def _dedupe_rows(a: np.ndarray) -> np.ndarray:
    a = a[a.any(axis=1)]
    return np.unique(a, axis=0) if a.size else a


def _strictly_contained(a: np.ndarray) -> np.ndarray:
    """Mask of columns whose species set is strictly inside another column's."""
    ai = a.astype(np.int32)
    inter = ai.T @ ai
    size = ai.sum(axis=0)
    sub = (inter == size[:, None]) & (size[:, None] < size[None, :])
    return sub.any(axis=1)


def _largest_component(a: np.ndarray) -> np.ndarray:
    n, m = a.shape
    seen_s = np.zeros(n, dtype=bool)
    best = None
    for start in range(n):
        if seen_s[start]:
            continue
        comp_s = np.zeros(n, dtype=bool)
        comp_s[start] = True
        comp_c = np.zeros(m, dtype=bool)
        while True:
            new_c = a[comp_s].any(axis=0) & ~comp_c
            if not new_c.any():
                break
            comp_c |= new_c
            comp_s |= a[:, new_c].any(axis=1)
        seen_s |= comp_s
        if best is None or comp_s.sum() > best[0].sum():
            best = (comp_s, comp_c)
    return a[best[0]][:, best[1]]


def _normalize(a: np.ndarray) -> np.ndarray:
    """Restrict to a maximal, connected, duplicate-free sub-instance."""
    while True:
        before = a.shape
        a = _dedupe_rows(a)
        if a.size == 0:
            return a
        a = a[:, a.any(axis=0)]
        _, first = np.unique(a, axis=1, return_index=True)
        a = a[:, np.sort(first)]
        a = a[:, ~_strictly_contained(a)]
        a = _largest_component(a)
        if a.shape == before:
            return a


def _ok(a: np.ndarray) -> bool:
    return _normalize(a).shape == a.shape


def generate_reducible(n: int, m: int, seed: int = 0, p_loss: float = 0.3,
                       max_attempts: int = 200) -> BinaryMatrix:
    """Random maximal connected n x m matrix that admits a Dollo-1 tree.

    Rows are node states of a random Dollo-1 tree, so every sub-matrix is
    reducible too; the draw is trimmed to a maximal connected core and then
    pruned to exactly the requested size.

    Each character contributes at most one gain and one loss, so such a
    tree has at most 2m + 1 distinct states: n above that is impossible and
    n close to it is rarely hit.
    """
    if n > 2 * m + 1:
        raise ValueError(f"no duplicate-free Dollo-1 instance has {n} species over {m} characters")
    rng = np.random.default_rng(seed)
    m0 = max(m, 2)
    for _ in range(max_attempts):
        a = _normalize(_random_dollo_states(rng, m0, 4 * m0 + 2 * n, p_loss))
        if a.shape[1] < m or a.shape[0] < n:
            m0 = int(m0 * 1.25) + 1
            continue
        a = _trim(rng, a, n, m)
        if a is not None:
            labels_s = [f"s{i + 1}" for i in range(n)]
            labels_c = [f"c{j + 1}" for j in range(m)]
            return BinaryMatrix.from_rows(a.astype(int).tolist(), labels_s, labels_c)
    raise RuntimeError(f"could not generate a reducible {n}x{m} instance")


def _trim(rng: np.random.Generator, a: np.ndarray, n: int, m: int) -> Optional[np.ndarray]:
    """Drop rows/columns (renormalizing each time) until exactly n x m."""
    stalls = 0
    while a.shape != (n, m):
        over_rows, over_cols = a.shape[0] - n, a.shape[1] - m
        if over_rows < 0 or over_cols < 0:
            return None
        axis = 0 if over_rows * m > over_cols * n else 1
        i = int(rng.integers(a.shape[axis]))
        b = _normalize(np.delete(a, i, axis=axis))
        if b.shape[0] >= n and b.shape[1] >= m:
            a = b
            stalls = 0
        else:
            stalls += 1
            if stalls > 2 * sum(a.shape):
                return None
    return a
