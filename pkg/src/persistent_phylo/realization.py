"""Character realization, red Sigma-graph detection and reduction replay."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

from .graph import CharState, Component, GraphStateError, RedBlackGraph, bits, build_graph
from .matrix import BinaryMatrix

# observer(kind, index, component) with kind in {"gain", "loss", "species"};
# component is the pre-change component for gains/losses and None for species
Observer = Callable[[str, int, Optional[Component]], None]


@dataclass
class RealizationEvent:
    realized: str
    red_edges_added: List[Tuple[str, str]] = field(default_factory=list)
    black_edges_removed: List[Tuple[str, str]] = field(default_factory=list)
    characters_isolated: List[str] = field(default_factory=list)
    species_isolated: List[str] = field(default_factory=list)
    # interleaved ("gain" | "loss" | "species", label) in occurrence order
    log: List[Tuple[str, str]] = field(default_factory=list, compare=False, repr=False)

    @property
    def splits_or_isolates(self) -> bool:
        return bool(self.characters_isolated or self.species_isolated)

    def to_dict(self) -> dict:
        return {
            "realized": self.realized,
            "red_added": [list(e) for e in self.red_edges_added],
            "black_removed": [list(e) for e in self.black_edges_removed],
            "chars_isolated": list(self.characters_isolated),
            "species_isolated": list(self.species_isolated),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RealizationEvent":
        return cls(
            realized=d["realized"],
            red_edges_added=[tuple(e) for e in d["red_added"]],
            black_edges_removed=[tuple(e) for e in d["black_removed"]],
            characters_isolated=list(d["chars_isolated"]),
            species_isolated=list(d["species_isolated"]),
        )


@dataclass(frozen=True, order=True)
class RedSigmaWitness:
    """Red path s1 - c1 - s2 - c2 - s3 with (c2, s1) and (c1, s3) absent."""

    s1: int
    c1: int
    s2: int
    c2: int
    s3: int

    def labels(self, graph: RedBlackGraph) -> Tuple[str, str, str, str, str]:
        sp, ch = graph.species_labels, graph.character_labels
        return (sp[self.s1], ch[self.c1], sp[self.s2], ch[self.c2], sp[self.s3])

    def holds_in(self, graph: RedBlackGraph) -> bool:
        r1, r2 = graph.red[self.c1], graph.red[self.c2]
        has = lambda mask, s: bool(mask >> s & 1)  # noqa: E731
        distinct = len({self.s1, self.s2, self.s3}) == 3 and self.c1 != self.c2
        return (
            distinct
            and has(r1, self.s1) and has(r1, self.s2) and has(r2, self.s2) and has(r2, self.s3)
            and not has(graph.neighbors(self.c2), self.s1)
            and not has(graph.neighbors(self.c1), self.s3)
        )

    def to_dict(self, graph: RedBlackGraph) -> dict:
        return dict(zip(("s1", "c1", "s2", "c2", "s3"), self.labels(graph)))


@dataclass
class Reduction:
    ordering: List[str]
    trace: List[RealizationEvent]

    def to_dict(self) -> dict:
        return {"order": list(self.ordering), "steps": [e.to_dict() for e in self.trace]}

    @classmethod
    def from_dict(cls, d: dict) -> "Reduction":
        return cls(list(d["order"]), [RealizationEvent.from_dict(e) for e in d["steps"]])


@dataclass
class SigmaFailure:
    """``apply_sequence`` stopped: realizing ``order[step]`` produced ``witness``."""

    step: int
    witness: RedSigmaWitness
    prefix: Reduction

    def __bool__(self) -> bool:
        return False


def _isolate_uncovered(graph: RedBlackGraph, candidates: int, event: RealizationEvent,
                       observer: Optional[Observer]) -> None:
    lost = candidates & ~graph.covered_species() & graph.species_present
    for s in bits(lost):
        graph.species_present &= ~(1 << s)
        label = graph.species_labels[s]
        event.species_isolated.append(label)
        event.log.append(("species", label))
        if observer:
            observer("species", s, None)


def realize_character(graph: RedBlackGraph, c: int, observer: Optional[Observer] = None) -> RealizationEvent:
    """Realize inactive character ``c`` in place and return what happened.

    Red edges go to every present species of c's component that c does not
    have, c's black edges are dropped, then red-universal characters are
    isolated in ascending-index sweeps until none is left.
    """
    state = graph.char_state[c]
    if state != CharState.INACTIVE:
        raise GraphStateError(
            f"character {graph.character_labels[c]} is {state.name.lower()}, expected inactive"
        )
    label = graph.character_labels[c]
    comp = graph.component_of_character(c)
    have = graph.black[c]
    add = comp.species & ~have
    event = RealizationEvent(realized=label)
    event.log.append(("gain", label))
    if observer:
        observer("gain", c, comp)

    graph.red[c] = add
    graph.black[c] = 0
    graph.char_state[c] = CharState.ACTIVE
    sp = graph.species_labels
    event.red_edges_added = [(label, sp[s]) for s in bits(add)]
    event.black_edges_removed = [(label, sp[s]) for s in bits(have)]
    _isolate_uncovered(graph, have, event, observer)
    _sweep_red_universal(graph, event, observer)
    return event


def _sweep_red_universal(graph: RedBlackGraph, event: RealizationEvent,
                         observer: Optional[Observer]) -> None:
    changed = True
    while changed:
        changed = False
        comp_of = None
        for a in graph.active():
            if comp_of is None:
                comp_of = _component_index(graph)
            comp = comp_of.get(a)
            species = comp.species if comp is not None else 0
            if graph.red[a] != species:
                continue
            if observer:
                observer("loss", a, comp if comp is not None else Component(0, (a,)))
            removed = graph.red[a]
            graph.red[a] = 0
            graph.char_state[a] = CharState.ISOLATED
            label = graph.character_labels[a]
            event.characters_isolated.append(label)
            event.log.append(("loss", label))
            _isolate_uncovered(graph, removed, event, observer)
            comp_of = None
            changed = True


def _component_index(graph: RedBlackGraph) -> dict:
    out = {}
    for comp in graph.components():
        for c in comp.characters:
            out[c] = comp
    return out


def find_red_sigma(graph: RedBlackGraph, involving: Optional[int] = None) -> Optional[RedSigmaWitness]:
    """Lexicographically smallest red Sigma-graph witness, or None.

    With ``involving`` set, only pairs containing that character are
    examined; this is exhaustive whenever the graph had no witness before
    that character's realization, since edge removals never create one.
    """
    active = graph.active()
    if involving is not None:
        if graph.char_state[involving] != CharState.ACTIVE:
            return None
        pairs = [(involving, d) for d in active if d != involving]
        pairs += [(d, involving) for d in active if d != involving]
    else:
        pairs = [(a, b) for a in active for b in active if a != b]
    best = None
    red = graph.red
    for c1, c2 in pairs:
        r1, r2 = red[c1], red[c2]
        mid = r1 & r2
        if not mid:
            continue
        left = r1 & ~r2
        right = r2 & ~r1
        if not left or not right:
            continue
        w = RedSigmaWitness(_low(left), c1, _low(mid), c2, _low(right))
        if best is None or w < best:
            best = w
    return best


def has_red_sigma(graph: RedBlackGraph, involving: Optional[int] = None) -> bool:
    red = graph.red
    if involving is not None:
        if graph.char_state[involving] != CharState.ACTIVE:
            return False
        r1 = red[involving]
        others = [red[d] for d in graph.active() if d != involving]
        return any(r1 & r2 and r1 & ~r2 and r2 & ~r1 for r2 in others)
    reds = [red[a] for a in graph.active()]
    for i, r1 in enumerate(reds):
        for r2 in reds[i + 1:]:
            if r1 & r2 and r1 & ~r2 and r2 & ~r1:
                return True
    return False


def _low(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def apply_sequence(graph: RedBlackGraph, order: Sequence[int],
                   observer: Optional[Observer] = None) -> Union[Reduction, SigmaFailure]:
    """Realize ``order`` (character indices) in place, stopping at the first red Sigma-graph."""
    if len(set(order)) != len(order):
        raise ValueError("order repeats a character")
    trace: List[RealizationEvent] = []
    labels: List[str] = []
    for step, c in enumerate(order):
        event = realize_character(graph, c, observer)
        trace.append(event)
        labels.append(graph.character_labels[c])
        witness = find_red_sigma(graph, involving=c)
        if witness is not None:
            return SigmaFailure(step, witness, Reduction(labels, trace))
    return Reduction(labels, trace)


@dataclass
class Verification:
    ok: bool
    diagnostics: str
    failing_step: Optional[int] = None
    witness: Optional[Tuple[str, ...]] = None

    def __bool__(self) -> bool:
        return self.ok


def canonical_order(graph: RedBlackGraph, matrix: BinaryMatrix, order: Sequence[str],
                    prefix: bool = False) -> List[int]:
    """Map a label ordering onto character indices of ``graph``.

    Accepts a permutation of the canonical characters or of every input
    character; merged duplicates are realized with their canonical
    representative at its first occurrence. With ``prefix`` any repeat-free
    sequence of known labels is accepted.
    """
    order = list(order)
    if len(set(order)) != len(order):
        raise ValueError("ordering repeats a character")
    known = set(matrix.character_labels)
    unknown = [c for c in order if c not in known]
    if unknown:
        raise ValueError(f"unknown character(s): {', '.join(unknown)}")
    out: List[int] = []
    for label in order:
        idx = graph.character_index(graph.character_merged.get(label, label))
        if idx not in out:
            out.append(idx)
    if prefix:
        return out
    canonical_perm = set(order) == set(graph.character_labels) and len(order) == graph.m
    full_perm = len(order) == matrix.m
    if not (canonical_perm or full_perm):
        raise ValueError("ordering is not a permutation of the characters")
    return out


def verify_reduction(matrix: BinaryMatrix, order: Sequence[str]) -> Verification:
    graph = build_graph(matrix)
    indices = canonical_order(graph, matrix, order)
    result = apply_sequence(graph, indices)
    if isinstance(result, SigmaFailure):
        labels = result.witness.labels(graph)
        return Verification(
            False,
            f"step {result.step + 1} ({graph.character_labels[indices[result.step]]}) "
            f"creates red Sigma-graph {' '.join(labels)}",
            result.step,
            labels,
        )
    if not graph.is_edgeless():
        return Verification(False, f"{graph.edge_count()} edges remain after the last realization")
    return Verification(True, "reduction verified")


def replay(matrix: BinaryMatrix, order: Sequence[str]) -> Tuple[RedBlackGraph, Union[Reduction, SigmaFailure]]:
    graph = build_graph(matrix)
    """Realize ``order`` (possibly a prefix) on a fresh graph of ``matrix``."""
    result = apply_sequence(graph, canonical_order(graph, matrix, order, prefix=True))
    return graph, result
