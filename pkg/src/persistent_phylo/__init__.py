"""Recognition of persistent perfect phylogenies (Dollo-1) on maximal binary matrices."""

from .graph import CharState, RedBlackGraph, ValidationReport, build_graph, validate
from .matrix import BinaryMatrix, MatrixParseError, parse_matrix, read_matrix
from .oracle import InstanceFamily, agreement_check, brute_force_reduction, enumerate_instances, generate_reducible
from .partitions import Partitions, candidate_start_species, compute_partitions, order_pi_I, order_pi_U, p7_centers
from .realization import (
    Reduction, RedSigmaWitness, apply_sequence, find_red_sigma, realize_character, replay, verify_reduction,
)
from .recognizer import NotMaximalError, RecognitionOutcome, check_refutation, explain, find_reduction
from .tree import PhyloTree, build_tree, export_dot, export_json, parse_tree_json, tree_violations

__all__ = [
    "BinaryMatrix", "CharState", "InstanceFamily", "MatrixParseError", "NotMaximalError", "Partitions",
    "PhyloTree", "RecognitionOutcome", "RedBlackGraph", "RedSigmaWitness", "Reduction", "ValidationReport",
    "agreement_check", "apply_sequence", "brute_force_reduction", "build_graph", "build_tree",
    "candidate_start_species", "check_refutation", "compute_partitions", "enumerate_instances", "explain",
    "export_dot", "export_json", "find_red_sigma", "find_reduction", "generate_reducible", "order_pi_I",
    "order_pi_U", "p7_centers", "parse_matrix", "parse_tree_json", "read_matrix", "realize_character",
    "replay", "tree_violations", "validate", "verify_reduction",
]


def worked_example_matrix() -> BinaryMatrix:
    """The nine-species, six-character worked example shipped with the package."""
    from importlib.resources import files

    return parse_matrix(files(__package__).joinpath("data/worked_example.csv").read_text())
