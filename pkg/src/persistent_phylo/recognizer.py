"""Polynomial-time reduction search for maximal species/character graphs.

Each iteration looks at the component that still has inactive characters,
partitions it, and realizes a character that is known to keep the graph
reducible:

* no active character: branch over the minimum-degree start species that
  avoid induced-P7 centres and realize all of its characters;
* C_I non-empty: realize the first element of the pi_U containment chain;
* C_I and C_U empty: realize every character of C_C;
* C_I empty, C_U non-empty: choose as in the first case, but inside the
  black subgraph induced by S_B and C_U.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .graph import (
    CharState, Component, RedBlackGraph, ValidationReport, bits, build_graph, validate,
)
from .matrix import BinaryMatrix
from .partitions import NoChain, Partitions, candidate_start_species, compute_partitions, order_pi_U
from .realization import (
    Reduction, RedSigmaWitness, apply_sequence, find_red_sigma, realize_character, verify_reduction,
)


class NotMaximalError(ValueError):
    def __init__(self, report: ValidationReport):
        super().__init__(report.describe())
        self.report = report


class InternalInconsistency(AssertionError):
    """A proven property failed at runtime; the implementation is at fault."""


CASE_START = "start"        # no active characters
CASE_CHAIN = "chain"        # C_I non-empty
CASE_CONTAINED = "contained"  # C_I = C_U = empty
CASE_RESTART = "restart"    # C_I empty, C_U non-empty


@dataclass
class TraceStep:
    step: int
    k: int
    case: str
    partitions: Partitions
    s7m: Optional[List[int]] = None
    pi_U: Optional[Tuple[int, ...]] = None
    realized: List[int] = field(default_factory=list)

    def to_dict(self, graph: RedBlackGraph) -> dict:
        sp, ch = graph.species_labels, graph.character_labels
        d = {"step": self.step, "k": self.k, "case": self.case}
        d.update(self.partitions.labelled(graph))
        d["pi_U"] = [ch[c] for c in self.pi_U] if self.pi_U is not None else None
        d["S_7m"] = [sp[s] for s in self.s7m] if self.s7m is not None else None
        d["realized"] = [ch[c] for c in self.realized]
        return d


@dataclass
class Refutation:
    """Evidence that the search failed, replayable from the input matrix.

    ``prefix`` is the ordering realized before the evidence was observed.
    """

    kind: str  # "red_sigma" | "empty_s7m" | "no_chain"
    prefix: List[str]
    witness: Optional[Tuple[str, ...]] = None
    pair: Optional[Tuple[str, str]] = None
    restriction: Optional[str] = None  # "S_B" or "S_B_m" for no_chain
    scope_species: Optional[List[str]] = None
    scope_characters: Optional[List[str]] = None

    @property
    def step(self) -> int:
        return len(self.prefix)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "step": self.step, "prefix": list(self.prefix)}
        if self.witness is not None:
            d["witness"] = dict(zip(("s1", "c1", "s2", "c2", "s3"), self.witness))
        if self.pair is not None:
            d["pair"] = list(self.pair)
            d["restriction"] = self.restriction
        if self.scope_species is not None:
            d["scope"] = {"species": self.scope_species, "characters": self.scope_characters}
        return d

    def describe(self) -> str:
        if self.kind == "red_sigma":
            return f"red Sigma-graph {' '.join(self.witness)} after realizing {','.join(self.prefix)}"
        if self.kind == "no_chain":
            a, b = self.pair
            return f"{a} and {b} are incomparable on {self.restriction} after {','.join(self.prefix) or 'nothing'}"
        return f"no start species available after {','.join(self.prefix) or 'nothing'}"


@dataclass
class BranchAttempt:
    species: str
    succeeded: bool
    refutation: Optional[Refutation] = None


@dataclass
class RecognitionOutcome:
    verdict: str  # "reducible" | "not_reducible"
    graph: RedBlackGraph  # canonical input graph (labels, merges)
    reduction: Optional[Reduction] = None
    refutation: Optional[Refutation] = None
    trace: List[TraceStep] = field(default_factory=list)
    branch_log: List[BranchAttempt] = field(default_factory=list)
    initial_candidates: int = 0

    @property
    def reducible(self) -> bool:
        return self.verdict == "reducible"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "reduction": self.reduction.to_dict() if self.reduction else None,
            "refutation": self.refutation.to_dict() if self.refutation else None,
            "trace": [t.to_dict(self.graph) for t in self.trace],
            "branch_log": [b.species for b in self.branch_log],
        }


# ---- search -----------------------------------------------------------------


@dataclass
class _Run:
    graph: RedBlackGraph
    realized: List[int]
    trace: List[TraceStep]


class _Failed(Exception):
    def __init__(self, refutation: Refutation, trace: List[TraceStep]):
        self.refutation = refutation
        self.trace = trace


class _Search:
    def __init__(self, source: RedBlackGraph):
        self.source = source
        self.branch_log: List[BranchAttempt] = []
        self.initial_candidates: Optional[int] = None

    def labels(self, chars: Sequence[int]) -> List[str]:
        return [self.source.character_labels[c] for c in chars]

    def realize(self, run: _Run, c: int) -> None:
        realize_character(run.graph, c)
        run.realized.append(c)
        w = find_red_sigma(run.graph, involving=c)
        if w is not None:
            raise _Failed(
                Refutation("red_sigma", self.labels(run.realized), witness=w.labels(run.graph)),
                run.trace,
            )

    def solve(self, run: _Run) -> _Run:
        g = run.graph
        while True:
            comp = self._next_component(g)
            if comp is None:
                if not g.is_edgeless():
                    # unreachable: a red-only component without a Sigma-graph has a red-universal character
                    raise InternalInconsistency("edges remain but no inactive character and no red Sigma-graph")
                return run
            parts = compute_partitions(g, comp)
            step = TraceStep(len(run.trace), len(run.realized), "", parts)
            run.trace.append(step)

            if not parts.C_R:
                step.case = CASE_START
                sub = g.induced(comp.characters, comp.species)
                return self.branch(run, step, sub, comp.species, comp.characters)
            if parts.C_I:
                step.case = CASE_CHAIN
                if parts.c_m is None:
                    a, b = parts.chain_error
                    raise _Failed(self._no_chain(run, a, b, "S_B"), run.trace)
                chain = order_pi_U(g, parts)
                if isinstance(chain, NoChain):
                    raise _Failed(self._no_chain(run, chain.first, chain.second, "S_B_m"), run.trace)
                step.pi_U = chain.sequence
                step.realized = [chain.sequence[0]]
                self.realize(run, chain.sequence[0])
            elif parts.C_U:
                step.case = CASE_RESTART
                sub = g.induced(parts.C_U, parts.S_B)
                return self.branch(run, step, sub, parts.S_B, parts.C_U)
            else:
                step.case = CASE_CONTAINED
                step.realized = list(parts.C_C)
                for c in parts.C_C:
                    self.realize(run, c)

    def branch(self, run: _Run, step: TraceStep, sub: RedBlackGraph, species: int,
               chars: Sequence[int]) -> _Run:
        cands = candidate_start_species(sub)
        step.s7m = cands
        if self.initial_candidates is None:
            self.initial_candidates = len(cands)
        if not cands:
            raise _Failed(
                Refutation(
                    "empty_s7m", self.labels(run.realized),
                    scope_species=[self.source.species_labels[s] for s in bits(species)],
                    scope_characters=self.labels(sorted(chars)),
                ),
                run.trace,
            )
        tried = set()
        first_failure: Optional[_Failed] = None
        for s0 in cands:
            start = tuple(c for c in sorted(chars) if sub.black[c] >> s0 & 1)
            if start in tried:
                continue
            tried.add(start)
            attempt = BranchAttempt(self.source.species_labels[s0], False)
            self.branch_log.append(attempt)
            trace = [TraceStep(t.step, t.k, t.case, t.partitions, t.s7m, t.pi_U, list(t.realized))
                     for t in run.trace]
            trace[-1].realized = list(start)
            child = _Run(run.graph.copy(), list(run.realized), trace)
            try:
                for c in start:
                    self.realize(child, c)
                result = self.solve(child)
            except _Failed as failed:
                attempt.refutation = failed.refutation
                if first_failure is None:
                    first_failure = failed
                continue
            attempt.succeeded = True
            return result
        raise first_failure

    def _next_component(self, g: RedBlackGraph) -> Optional[Component]:
        for comp in g.components():
            if any(g.char_state[c] == CharState.INACTIVE for c in comp.characters):
                return comp
        return None

    def _no_chain(self, run: _Run, a: int, b: int, restriction: str) -> Refutation:
        return Refutation("no_chain", self.labels(run.realized), pair=(
            self.source.character_labels[a], self.source.character_labels[b]), restriction=restriction)


def find_reduction(matrix: BinaryMatrix) -> RecognitionOutcome:
    """Decide whether ``matrix`` admits a Dollo-1 phylogeny.

    Raises NotMaximalError for inputs with a character whose species set is
    strictly contained in another's.
    """
    graph = build_graph(matrix)
    report = validate(graph)
    if not report.is_maximal:
        raise NotMaximalError(report)

    search = _Search(graph)
    # characters with no species at all are realized (and lost) last
    edgeless_chars = [c for c in range(graph.m) if not graph.black[c]]
    run = _Run(graph.copy(), [], [])
    try:
        run = search.solve(run)
        for c in edgeless_chars:
            search.realize(run, c)
    except _Failed as failed:
        return RecognitionOutcome(
            "not_reducible", graph, refutation=failed.refutation, trace=failed.trace,
            branch_log=search.branch_log, initial_candidates=search.initial_candidates or 0,
        )

    order = [graph.character_labels[c] for c in run.realized]
    fresh = graph.copy()
    reduction = apply_sequence(fresh, run.realized)
    if not isinstance(reduction, Reduction) or not fresh.is_edgeless() or not verify_reduction(matrix, order):
        raise InternalInconsistency(f"recognizer produced an invalid reduction {order}")
    outcome = RecognitionOutcome(
        "reducible", graph, reduction=reduction, trace=run.trace,
        branch_log=search.branch_log, initial_candidates=search.initial_candidates or 0,
    )
    _check_single_start_bound(outcome)
    return outcome


def _check_single_start_bound(outcome: RecognitionOutcome) -> None:
    # a start with several candidates forces |C_U| <= 1 in every later partial reduction
    bounded = False
    for t in outcome.trace:
        if t.case == CASE_START:
            bounded = t.s7m is not None and len(t.s7m) > 1
            continue
        if bounded and len(t.partitions.C_U) > 1:
            raise InternalInconsistency(
                f"|C_U| = {len(t.partitions.C_U)} at iteration {t.step} after a multi-candidate start"
            )


def check_refutation(matrix: BinaryMatrix, refutation: Refutation) -> bool:
    """Replay ``refutation.prefix`` and confirm the evidence it names."""
    graph = build_graph(matrix)
    indices = [graph.character_index(graph.character_merged.get(c, c)) for c in refutation.prefix]
    if refutation.kind == "red_sigma":
        if len(set(indices)) != len(indices):
            return False
        for c in indices:
            realize_character(graph, c)
        sp, ch = graph.species_labels, graph.character_labels
        s1, c1, s2, c2, s3 = refutation.witness
        try:
            w = RedSigmaWitness(sp.index(s1), ch.index(c1), sp.index(s2), ch.index(c2), sp.index(s3))
        except ValueError:
            return False
        return w.holds_in(graph)

    result = apply_sequence(graph, indices)
    if not isinstance(result, Reduction):
        return False
    if refutation.kind == "empty_s7m":
        species = 0
        for label in refutation.scope_species:
            species |= 1 << graph.species_index(label)
        chars = [graph.character_index(c) for c in refutation.scope_characters]
        if any(graph.char_state[c] != CharState.INACTIVE for c in chars):
            return False
        return candidate_start_species(graph.induced(chars, species)) == []
    if refutation.kind == "no_chain":
        a, b = (graph.character_index(c) for c in refutation.pair)
        comp = next((k for k in graph.components() if a in k.characters), None)
        if comp is None or b not in comp.characters:
            return False
        parts = compute_partitions(graph, comp)
        restriction = parts.S_B if refutation.restriction == "S_B" else parts.S_B_m
        if refutation.restriction == "S_B_m" and parts.c_m is None:
            return False
        na, nb = graph.black[a] & restriction, graph.black[b] & restriction
        return bool(na & ~nb) and bool(nb & ~na)
    return False


# ---- reporting -----------------------------------------------------------------


def _fmt_set(items: Optional[Sequence[str]], braces: str = "{}") -> str:
    if not items:
        return "-"
    return braces[0] + ",".join(items) + braces[1]


def table_rows(outcome: RecognitionOutcome) -> List[dict]:
    """Trace snapshots grouped into iterations for display.

    A snapshot whose realizations are simply the next elements of the pi_U
    chain computed just before it is folded into that earlier row, so a
    chain realized over several recomputations shows up as one iteration.
    c_m is only reported when C_I holds two or more characters.
    """
    g = outcome.graph
    rows: List[dict] = []
    pending: List[str] = []  # rest of the open chain
    for t in outcome.trace:
        d = t.to_dict(g)
        if rows and pending and d["realized"] and d["realized"] == pending[:len(d["realized"])]:
            pending = pending[len(d["realized"]):]
            rows[-1]["realized"] += d["realized"]
            continue
        pi_I = t.partitions.pi_I
        rows.append({
            "iteration": len(rows), "k": t.k, "S_7m": d["S_7m"],
            "C_I": [g.character_labels[c] for c in pi_I] if pi_I else d["C_I"],
            "C_U": d["C_U"], "C_C": d["C_C"],
            "c_m": d["c_m"] if len(d["C_I"]) >= 2 else None,
            "pi_U": d["pi_U"], "realized": list(d["realized"]),
        })
        pending = list(d["pi_U"][len(d["realized"]):]) if d["pi_U"] else []
    return rows


def explain(outcome: RecognitionOutcome) -> str:
    """Human-readable iteration table, verdict and branch log."""
    g = outcome.graph
    if g.m == 0:
        return "nothing to do: the matrix has no characters\n"
    header = ["Iteration", "Partial reduction", "S_7^m", "C_I", "C_U", "C_C", "c_m", "pi_U", "Realization"]
    rows = [header]
    for r in table_rows(outcome):
        rows.append([
            str(r["iteration"]), f"G_RB^{r['k']}", _fmt_set(r["S_7m"]), _fmt_set(r["C_I"]), _fmt_set(r["C_U"]),
            _fmt_set(r["C_C"]), r["c_m"] or "-", _fmt_set(r["pi_U"], "<>"), ",".join(r["realized"]) or "-",
        ])
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    lines.append("")
    if outcome.reducible:
        lines.append("verdict: reducible")
        lines.append("reduction: <" + ",".join(outcome.reduction.ordering) + ">")
    else:
        lines.append("verdict: not reducible")
        lines.append("refutation: " + outcome.refutation.describe())
    if outcome.branch_log:
        tried = ", ".join(f"{b.species}{'' if b.succeeded else ' (failed)'}" for b in outcome.branch_log)
        lines.append("start species tried: " + tried)
    return "\n".join(lines) + "\n"
