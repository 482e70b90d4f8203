"""S-/C-partitions, containment chains and start-species candidates."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .graph import CharState, Component, RedBlackGraph, bits, popcount


@dataclass
class Partitions:
    S_B: int  # species bitmasks
    S_R: int
    C_R: Tuple[int, ...]
    C_C: Tuple[int, ...]
    C_I: Tuple[int, ...]
    C_U: Tuple[int, ...]
    c_m: Optional[int] = None
    S_B_m: int = 0
    C_B_m: Tuple[int, ...] = ()
    pi_I: Optional[Tuple[int, ...]] = None
    chain_error: Optional[Tuple[int, int]] = field(default=None)

    def labelled(self, graph: RedBlackGraph) -> dict:
        sp, ch = graph.species_labels, graph.character_labels
        return {
            "S_B": [sp[s] for s in bits(self.S_B)],
            "S_R": [sp[s] for s in bits(self.S_R)],
            "C_R": [ch[c] for c in self.C_R],
            "C_C": [ch[c] for c in self.C_C],
            "C_I": [ch[c] for c in self.C_I],
            "C_U": [ch[c] for c in self.C_U],
            "c_m": ch[self.c_m] if self.c_m is not None else None,
        }


@dataclass
class ContainmentOrder:
    sequence: Tuple[int, ...]
    restriction_set: int

    def holds(self, graph: RedBlackGraph) -> bool:
        restricted = [graph.black[c] & self.restriction_set for c in self.sequence]
        return all(b & ~a == 0 for a, b in zip(restricted, restricted[1:]))


@dataclass
class NoChain:
    """Two characters whose restricted neighbourhoods are incomparable."""

    first: int
    second: int
    restriction_set: int

    def __bool__(self) -> bool:
        return False


ChainResult = Union[ContainmentOrder, NoChain]


def compute_partitions(graph: RedBlackGraph, scope: Optional[Component] = None) -> Partitions:
    """Partition species and inactive characters of ``graph`` (or one component).

    With no red edges at all, every inactive character that has a neighbour
    counts as universal over the empty set and lands in C_U.
    """
    if scope is None:
        species = graph.covered_species()
        chars: Iterable[int] = range(graph.m)
    else:
        species = scope.species
        chars = scope.characters
    chars = [c for c in chars if graph.char_state[c] != CharState.ISOLATED]

    S_R = 0
    C_R = []
    for c in chars:
        if graph.char_state[c] == CharState.ACTIVE:
            C_R.append(c)
            S_R |= graph.red[c]
    S_R &= species
    S_B = species & ~S_R

    C_C, C_I, C_U = [], [], []
    for c in chars:
        if graph.char_state[c] != CharState.INACTIVE:
            continue
        nb = graph.black[c]
        if nb & ~S_R == 0:
            C_C.append(c)
        elif S_R & ~nb == 0:
            C_U.append(c)
        else:
            C_I.append(c)

    parts = Partitions(S_B, S_R, tuple(C_R), tuple(C_C), tuple(C_I), tuple(C_U))
    if C_I:
        chain = order_pi_I(graph, parts)
        if isinstance(chain, NoChain):
            parts.chain_error = (chain.first, chain.second)
        else:
            parts.pi_I = chain.sequence
            parts.c_m = chain.sequence[-1]
            parts.S_B_m = S_B & ~graph.black[parts.c_m]
            parts.C_B_m = tuple(sorted(
                set(C_I) | {u for u in C_U if graph.black[u] & parts.S_B_m}
            ))
    return parts


def _chain(graph: RedBlackGraph, chars: Sequence[int], restriction: int, tiebreak=None) -> ChainResult:
    def key(c):
        k = [-popcount(graph.black[c] & restriction)]
        if tiebreak is not None:
            k.append(tiebreak(c))
        k.append(c)
        return tuple(k)

    seq = sorted(chars, key=key)
    for a, b in zip(seq, seq[1:]):
        if graph.black[b] & restriction & ~graph.black[a]:
            return NoChain(a, b, restriction)
    return ContainmentOrder(tuple(seq), restriction)


def order_pi_I(graph: RedBlackGraph, parts: Partitions) -> ChainResult:
    """C_I ordered by shrinking neighbourhood inside S_B."""
    if not parts.C_I:
        raise ValueError("C_I is empty")
    return _chain(graph, parts.C_I, parts.S_B)


def order_pi_U(graph: RedBlackGraph, parts: Partitions) -> ChainResult:
    """C_B^m ordered by shrinking neighbourhood inside S_B^m.

    Equal restricted neighbourhoods are ordered by their neighbourhood inside
    S_B (larger first), then by index; this keeps the pi_I order intact when
    it is extended.
    """
    if parts.c_m is None:
        raise ValueError("c_m is undefined (C_I empty or not a chain)")
    return _chain(
        graph, parts.C_B_m, parts.S_B_m,
        tiebreak=lambda c: -popcount(graph.black[c] & parts.S_B),
    )


# ---- induced P7 centres ----------------------------------------------------


def _black_matrix(graph: RedBlackGraph) -> np.ndarray:
    out = np.zeros((graph.n, graph.m), dtype=np.float32)
    for c in range(graph.m):
        for s in bits(graph.black[c]):
            out[s, c] = 1.0
    return out


def p7_centers(graph: RedBlackGraph, only: Optional[Iterable[int]] = None) -> frozenset:
    """Characters c2 centring an induced path s1 c1 s2 c2 s3 c3 s4.

    For a fixed c2 with neighbourhood v, the path exists iff some c1, c3
    have a common neighbour with c2 the other lacks (both directions) and a
    private neighbour outside N(c2) that the other lacks (both directions).
    Each count is a matrix product over species.
    """
    if graph.active():
        raise ValueError("p7_centers expects a graph without active characters")
    B = _black_matrix(graph)
    NB = 1.0 - B
    candidates = range(graph.m) if only is None else sorted(set(only))
    centers = set()
    for c2 in candidates:
        if popcount(graph.black[c2]) < 2:
            continue
        v = B[:, c2:c2 + 1]
        shared = (B * v).T @ NB          # [c1, c3]: |N(c1) & N(c2) - N(c3)|
        private = (B * (1.0 - v)).T @ NB  # [c1, c3]: |N(c1) - N(c2) - N(c3)|
        hit = (shared > 0) & (shared.T > 0) & (private > 0) & (private.T > 0)
        if hit.any():
            centers.add(c2)
    return frozenset(centers)


def candidate_start_species(graph: RedBlackGraph) -> List[int]:
    """Minimum-degree species (degree >= 1) avoiding every P7 centre."""
    if graph.active():
        raise ValueError("candidate_start_species expects a graph without active characters")
    degree = {}
    for c in range(graph.m):
        for s in bits(graph.black[c]):
            degree[s] = degree.get(s, 0) + 1
    if not degree:
        return []
    low = min(degree.values())
    minimal = sorted(s for s, d in degree.items() if d == low)
    their_chars = {c for s in minimal for c in graph.characters_of(s)}
    centers = p7_centers(graph, only=their_chars)
    return [s for s in minimal if not centers.intersection(graph.characters_of(s))]
