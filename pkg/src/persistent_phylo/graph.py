"""Red-black bipartite graphs over species and characters.

Vertices are dense integer indices in input order. Each character keeps two
species bitmasks (black and red neighbours); Python ints serve as bitsets.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from .matrix import BinaryMatrix


class CharState(enum.IntEnum):
    INACTIVE = 0
    ACTIVE = 1
    ISOLATED = 2


class GraphStateError(RuntimeError):
    """An operation was applied to a vertex in the wrong lifecycle state."""


def bits(mask: int):
    """Yield set bit positions of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def popcount(mask: int) -> int:
    return bin(mask).count("1")


@dataclass
class Component:
    species: int  # bitmask
    characters: Tuple[int, ...]

    def smallest(self) -> Tuple[int, int]:
        # used for deterministic ordering: smallest species index first, then characters
        s = (self.species & -self.species).bit_length() - 1 if self.species else 1 << 30
        c = self.characters[0] if self.characters else 1 << 30
        return (s, c)


@dataclass
class RedBlackGraph:
    species_labels: List[str]
    character_labels: List[str]
    black: List[int]
    red: List[int]
    char_state: List[CharState]
    species_present: int
    # dropped duplicate label -> canonical label, one map per vertex class
    species_merged: Dict[str, str] = field(default_factory=dict)
    character_merged: Dict[str, str] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.species_labels)

    @property
    def m(self) -> int:
        return len(self.character_labels)

    def copy(self) -> "RedBlackGraph":
        return RedBlackGraph(
            list(self.species_labels),
            list(self.character_labels),
            list(self.black),
            list(self.red),
            list(self.char_state),
            self.species_present,
            dict(self.species_merged),
            dict(self.character_merged),
        )

    # ---- lookups -------------------------------------------------------

    def species_index(self, label: str) -> int:
        return self.species_labels.index(label)

    def character_index(self, label: str) -> int:
        return self.character_labels.index(label)

    def neighbors(self, c: int) -> int:
        return self.black[c] | self.red[c]

    def characters_of(self, s: int) -> List[int]:
        bit = 1 << s
        return [c for c in range(self.m) if (self.black[c] | self.red[c]) & bit]

    def species_degree(self, s: int) -> int:
        return len(self.characters_of(s))

    def covered_species(self) -> int:
        """Species with at least one incident edge."""
        acc = 0
        for b, r in zip(self.black, self.red):
            acc |= b | r
        return acc

    def inactive(self) -> List[int]:
        return [c for c, st in enumerate(self.char_state) if st == CharState.INACTIVE]

    def active(self) -> List[int]:
        return [c for c, st in enumerate(self.char_state) if st == CharState.ACTIVE]

    def is_edgeless(self) -> bool:
        return not any(self.black) and not any(self.red)

    def edge_count(self) -> int:
        return sum(popcount(b) + popcount(r) for b, r in zip(self.black, self.red))

    def state_key(self) -> tuple:
        return (tuple(self.black), tuple(self.red), tuple(self.char_state), self.species_present)

    # ---- connectivity --------------------------------------------------

    def components(self, species_scope: int | None = None, char_scope=None) -> List[Component]:
        """Connected components over vertices with at least one incident edge.

        Both edge colours count. Components are ordered by their smallest
        species index (characters break ties for species-free components,
        which cannot occur since every edge has a species endpoint).
        Optional scopes restrict the graph to an induced subgraph.
        """
        chars = [
            c for c in range(self.m)
            if (char_scope is None or c in char_scope) and self._adj(c, species_scope)
        ]
        unassigned = set(chars)
        comps: List[Component] = []
        while unassigned:
            seed = min(unassigned)
            unassigned.discard(seed)
            comp_chars = [seed]
            frontier = self._adj(seed, species_scope)
            species = frontier
            while frontier:
                new_species = 0
                for c in list(unassigned):
                    a = self._adj(c, species_scope)
                    if a & frontier:
                        unassigned.discard(c)
                        comp_chars.append(c)
                        new_species |= a
                frontier = new_species & ~species
                species |= new_species
            comps.append(Component(species, tuple(sorted(comp_chars))))
        comps.sort(key=Component.smallest)
        return comps

    def _adj(self, c: int, species_scope: int | None) -> int:
        a = self.black[c] | self.red[c]
        return a if species_scope is None else a & species_scope

    def component_of_character(self, c: int) -> Component:
        start = self.neighbors(c)
        if not start:
            return Component(0, (c,))
        species = start
        chars = {c}
        frontier = start
        while frontier:
            new_species = 0
            for d in range(self.m):
                if d in chars:
                    continue
                a = self.black[d] | self.red[d]
                if a & frontier:
                    chars.add(d)
                    new_species |= a
            frontier = new_species & ~species
            species |= new_species
        return Component(species, tuple(sorted(chars)))

    def induced(self, characters, species_mask: int) -> "RedBlackGraph":
        """Copy restricted to ``characters`` and ``species_mask``.

        Index space is preserved; everything outside the restriction is
        dropped (species marked isolated, characters isolated).
        """
        keep = set(characters)
        g = self.copy()
        for c in range(g.m):
            if c in keep:
                g.black[c] &= species_mask
                g.red[c] &= species_mask
            else:
                g.black[c] = 0
                g.red[c] = 0
                g.char_state[c] = CharState.ISOLATED
        g.species_present &= species_mask
        return g

    # ---- invariants ----------------------------------------------------

    def check_consistency(self) -> None:
        """Raise AssertionError if edge colours disagree with vertex states."""
        for c in range(self.m):
            st = self.char_state[c]
            if st == CharState.INACTIVE:
                assert self.red[c] == 0, f"inactive {self.character_labels[c]} has red edges"
            elif st == CharState.ACTIVE:
                assert self.black[c] == 0, f"active {self.character_labels[c]} has black edges"
            else:
                assert self.black[c] == 0 and self.red[c] == 0, (
                    f"isolated {self.character_labels[c]} has edges"
                )
            assert (self.black[c] | self.red[c]) & ~self.species_present == 0, (
                f"{self.character_labels[c]} touches an isolated species"
            )
            assert self.black[c] & self.red[c] == 0


def build_graph(matrix: BinaryMatrix) -> RedBlackGraph:
    """All-black graph of ``matrix`` with duplicate neighbourhoods merged.

    Species rows that are identical collapse onto the first occurrence, then
    characters with identical (merged) columns do likewise. The ``*_merged``
    maps record every dropped label against the label it was merged into.
    """
    species_merged: Dict[str, str] = {}
    character_merged: Dict[str, str] = {}
    species: List[str] = []
    rows: List[Tuple[int, ...]] = []
    first_row: Dict[Tuple[int, ...], str] = {}
    for label, row in zip(matrix.species_labels, matrix.cells):
        if row in first_row:
            species_merged[label] = first_row[row]
            continue
        first_row[row] = label
        species.append(label)
        rows.append(row)

    characters: List[str] = []
    columns: List[int] = []
    first_col: Dict[int, str] = {}
    for j, label in enumerate(matrix.character_labels):
        mask = 0
        for i, row in enumerate(rows):
            if row[j]:
                mask |= 1 << i
        if mask in first_col:
            character_merged[label] = first_col[mask]
            continue
        first_col[mask] = label
        characters.append(label)
        columns.append(mask)

    return RedBlackGraph(
        species_labels=species,
        character_labels=characters,
        black=columns,
        red=[0] * len(columns),
        char_state=[CharState.INACTIVE] * len(columns),
        species_present=(1 << len(species)) - 1,
        species_merged=species_merged,
        character_merged=character_merged,
    )


def canonical_matrix(graph: RedBlackGraph) -> BinaryMatrix:
    """Matrix of the black edges of ``graph`` (its canonical input form)."""
    cells = [
        tuple(1 if graph.black[c] >> s & 1 else 0 for c in range(graph.m))
        for s in range(graph.n)
    ]
    return BinaryMatrix(tuple(graph.species_labels), tuple(graph.character_labels), tuple(cells))


def connected_components(graph: RedBlackGraph) -> List[Tuple[List[str], List[str]]]:
    """Components as (species labels, character labels), smallest member first."""
    return [
        (
            [graph.species_labels[s] for s in bits(comp.species)],
            [graph.character_labels[c] for c in comp.characters],
        )
        for comp in graph.components()
    ]


@dataclass
class ValidationReport:
    is_connected: bool
    is_maximal: bool
    violations: List[Tuple[str, str]]
    merged_duplicates: List[List[str]]

    def describe(self) -> str:
        parts = []
        if not self.is_maximal:
            pairs = "; ".join(f"species of {a} strictly contained in species of {b}" for a, b in self.violations)
            parts.append(f"not maximal: {pairs}")
        if not self.is_connected:
            parts.append("not connected")
        return "; ".join(parts) if parts else "ok"


def validate(graph: RedBlackGraph) -> ValidationReport:
    if graph.active():
        raise GraphStateError("validate expects an all-black graph")
    violations = []
    for a in range(graph.m):
        na = graph.black[a]
        for b in range(graph.m):
            nb = graph.black[b]
            if a != b and na & ~nb == 0 and na != nb:
                violations.append((graph.character_labels[a], graph.character_labels[b]))
    groups: List[List[str]] = []
    for merged in (graph.species_merged, graph.character_merged):
        by_kept: Dict[str, List[str]] = {}
        for dropped, kept in merged.items():
            by_kept.setdefault(kept, [kept]).append(dropped)
        groups.extend(by_kept.values())
    return ValidationReport(
        is_connected=len(graph.components()) <= 1,
        is_maximal=not violations,
        violations=violations,
        merged_duplicates=groups,
    )


def expand_species(graph: RedBlackGraph, label: str) -> List[str]:
    """``label`` followed by every input species label merged into it."""
    return [label] + [d for d, k in graph.species_merged.items() if k == label]


def expand_character(graph: RedBlackGraph, label: str) -> List[str]:
    return [label] + [d for d, k in graph.character_merged.items() if k == label]
