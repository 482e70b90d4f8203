"""Dollo-1 phylogenies built by replaying a reduction.

Every gain or loss becomes one edge leading to a fresh node. The tree keeps
one cursor per vertex of the red-black graph; all vertices of a connected
component share a cursor, so when a component splits its parts continue
from the same node and the tree branches there. A species labels the node
its cursor points to at the moment it becomes isolated.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .graph import Component, bits, build_graph, expand_character, expand_species, validate
from .matrix import BinaryMatrix
from .realization import Reduction, SigmaFailure, apply_sequence, canonical_order, verify_reduction


class TreeBuildError(ValueError):
    pass


@dataclass
class TreeNode:
    id: int
    species: Optional[str] = None


@dataclass
class TreeEdge:
    parent: int
    child: int
    events: List[str] = field(default_factory=list)


@dataclass
class PhyloTree:
    nodes: List[TreeNode]
    edges: List[TreeEdge]
    root: int = 0

    def add_node(self, parent: Optional[int] = None, events: Optional[List[str]] = None) -> int:
        node = TreeNode(len(self.nodes))
        self.nodes.append(node)
        if parent is not None:
            self.edges.append(TreeEdge(parent, node.id, list(events or [])))
        return node.id

    def parent_edge(self) -> Dict[int, TreeEdge]:
        return {e.child: e for e in self.edges}

    def children(self) -> Dict[int, List[int]]:
        out: Dict[int, List[int]] = {n.id: [] for n in self.nodes}
        for e in self.edges:
            out[e.parent].append(e.child)
        return out

    def root_path(self, node: int) -> List[TreeEdge]:
        """Edges from the root down to ``node``."""
        up = self.parent_edge()
        path = []
        while node in up:
            path.append(up[node])
            node = up[node].parent
        return path[::-1]

    def species_node(self) -> Dict[str, int]:
        return {n.species: n.id for n in self.nodes if n.species is not None}

    def characters_at(self, node: int) -> set:
        present = set()
        for e in self.root_path(node):
            for ev in e.events:
                name, sign = ev[:-1], ev[-1]
                if sign == "+":
                    present.add(name)
                else:
                    present.discard(name)
        return present

    def branching_nodes(self) -> List[int]:
        return [n for n, kids in self.children().items() if len(kids) > 1]


def build_tree(matrix: BinaryMatrix, reduction: Reduction | List[str]) -> PhyloTree:
    ordering = reduction.ordering if isinstance(reduction, Reduction) else list(reduction)
    check = verify_reduction(matrix, ordering)
    if not check:
        raise TreeBuildError(f"not a reduction: {check.diagnostics}")

    graph = build_graph(matrix)
    tree = PhyloTree([], [])
    root = tree.add_node()
    cursor: Dict[Tuple[str, int], int] = {}
    for s in range(graph.n):
        cursor[("s", s)] = root
    for c in range(graph.m):
        cursor[("c", c)] = root

    def label(node: int, species_label: str) -> None:
        for name in expand_species(graph, species_label):
            if tree.nodes[node].species is None:
                tree.nodes[node].species = name
            else:
                # same character set as the node: a leaf hanging off it
                leaf = tree.add_node(node)
                tree.nodes[leaf].species = name

    def observer(kind: str, index: int, comp: Optional[Component]) -> None:
        if kind == "species":
            label(cursor[("s", index)], graph.species_labels[index])
            return
        if not comp.species:
            return  # nothing below would ever see this event
        sign = "+" if kind == "gain" else "-"
        events = [f"{name}{sign}" for name in expand_character(graph, graph.character_labels[index])]
        node = tree.add_node(cursor[("c", index)], events)
        for s in bits(comp.species):
            cursor[("s", s)] = node
        for c in comp.characters:
            cursor[("c", c)] = node
        cursor[("c", index)] = node

    # species without characters sit at the root
    for s in range(graph.n):
        if not graph.characters_of(s):
            label(root, graph.species_labels[s])
            graph.species_present &= ~(1 << s)

    result = apply_sequence(graph, canonical_order(graph, matrix, ordering), observer)
    if isinstance(result, SigmaFailure):  # pragma: no cover - ruled out by verify_reduction
        raise TreeBuildError("replay hit a red Sigma-graph")
    return tree


# ---- validity ------------------------------------------------------------------


def tree_violations(tree: PhyloTree, matrix: BinaryMatrix) -> List[str]:
    """Every way ``tree`` fails to be a Dollo-1 phylogeny of ``matrix``."""
    problems: List[str] = []
    up = tree.parent_edge()
    gain_edge: Dict[str, int] = {}
    loss_edge: Dict[str, int] = {}
    for e in tree.edges:
        for ev in e.events:
            name, sign = ev[:-1], ev[-1]
            seen = gain_edge if sign == "+" else loss_edge
            if name in seen:
                problems.append(f"{ev} occurs twice")
            seen[name] = e.child
            if name not in matrix.character_labels:
                problems.append(f"unknown character {name}")

    def ancestors(node: int) -> List[int]:
        out = []
        while node in up:
            out.append(node)
            node = up[node].parent
        return out

    for name, node in loss_edge.items():
        if name not in gain_edge or gain_edge[name] not in ancestors(node)[1:]:
            problems.append(f"{name}- is not below {name}+")

    labelled = [n.species for n in tree.nodes if n.species is not None]
    for sp in matrix.species_labels:
        count = labelled.count(sp)
        if count != 1:
            problems.append(f"species {sp} labels {count} nodes")
    where = tree.species_node()
    for i, sp in enumerate(matrix.species_labels):
        if sp in where:
            expected = {c for c, v in zip(matrix.character_labels, matrix.cells[i]) if v}
            got = tree.characters_at(where[sp])
            if got != expected:
                problems.append(f"species {sp}: tree gives {sorted(got)}, matrix {sorted(expected)}")

    # a connected input starts with a path carrying every gain
    connected = validate(build_graph(matrix)).is_connected if matrix.m else True
    gains = sorted(gain_edge.values(), key=lambda n: len(ancestors(n))) if connected else []
    for a, b in zip(gains, gains[1:]):
        if a not in ancestors(b):
            problems.append("gains do not lie on a single root path")
            break
    return problems


# ---- export --------------------------------------------------------------------------


def export_json(tree: PhyloTree) -> str:
    return json.dumps({
        "root": tree.root,
        "nodes": [{"id": n.id, "species": n.species} for n in tree.nodes],
        "edges": [{"parent": e.parent, "child": e.child, "events": list(e.events)} for e in tree.edges],
    }, indent=2)


def parse_tree_json(text: str) -> PhyloTree:
    d = json.loads(text)
    return PhyloTree(
        nodes=[TreeNode(n["id"], n["species"]) for n in d["nodes"]],
        edges=[TreeEdge(e["parent"], e["child"], list(e["events"])) for e in d["edges"]],
        root=d["root"],
    )


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(tree: PhyloTree) -> str:
    lines = ["digraph phylogeny {", "  node [shape=circle];"]
    for n in tree.nodes:
        lines.append(f"  n{n.id} [label={_dot_quote(n.species or '')}];")
    for e in tree.edges:
        lines.append(f"  n{e.parent} -> n{e.child} [label={_dot_quote(','.join(e.events))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
