"""Binary species-by-character matrices and their CSV form.

The file format is deliberately strict: first row is an empty cell followed by
character labels, every other row is a species label followed by 0/1 cells.
No quoting, LF or CRLF line endings.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple


class MatrixParseError(ValueError):
    """Raised when a matrix file does not follow the CSV grammar."""

    def __init__(self, message: str, line: int, column: int | None = None):
        where = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class BinaryMatrix:
    species_labels: Tuple[str, ...]
    character_labels: Tuple[str, ...]
    cells: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "species_labels", tuple(self.species_labels))
        object.__setattr__(self, "character_labels", tuple(self.character_labels))
        object.__setattr__(self, "cells", tuple(tuple(int(v) for v in row) for row in self.cells))
        if len(self.cells) != len(self.species_labels):
            raise ValueError("one row of cells is required per species label")
        m = len(self.character_labels)
        for i, row in enumerate(self.cells):
            if len(row) != m:
                raise ValueError(f"row {i} has {len(row)} cells, expected {m}")
            if any(v not in (0, 1) for v in row):
                raise ValueError(f"row {i} contains a value other than 0/1")
        for axis, labels in (("species", self.species_labels), ("character", self.character_labels)):
            if len(set(labels)) != len(labels):
                raise ValueError(f"duplicate {axis} label")

    @property
    def n(self) -> int:
        return len(self.species_labels)

    @property
    def m(self) -> int:
        return len(self.character_labels)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], species_labels=None, character_labels=None) -> "BinaryMatrix":
        """Build a matrix with default labels ``s1..sn`` and ``c1..cm``."""
        n = len(rows)
        m = len(rows[0]) if rows else 0
        if species_labels is None:
            species_labels = [f"s{i + 1}" for i in range(n)]
        if character_labels is None:
            character_labels = [f"c{j + 1}" for j in range(m)]
        return cls(tuple(species_labels), tuple(character_labels), tuple(tuple(r) for r in rows))

    def characters_of(self, species: str) -> frozenset:
        row = self.cells[self.species_labels.index(species)]
        return frozenset(c for c, v in zip(self.character_labels, row) if v)

    def species_of(self, character: str) -> frozenset:
        j = self.character_labels.index(character)
        return frozenset(s for s, row in zip(self.species_labels, self.cells) if row[j])

    def to_csv(self) -> str:
        lines = ["," + ",".join(self.character_labels)]
        for label, row in zip(self.species_labels, self.cells):
            lines.append(",".join([label, *map(str, row)]))
        return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> BinaryMatrix:
    lines = text.split("\n")
    # a trailing newline leaves one empty element; blank lines elsewhere are errors
    if lines and lines[-1] == "":
        lines.pop()
    lines = [ln[:-1] if ln.endswith("\r") else ln for ln in lines]
    if not lines:
        raise MatrixParseError("empty input, expected a header row", 1)

    header = lines[0].split(",")
    if header[0] != "":
        raise MatrixParseError("header must start with an empty cell", 1, 1)
    characters = header[1:]
    seen = set()
    for j, label in enumerate(characters, start=2):
        _check_label(label, 1, j)
        if label in seen:
            raise MatrixParseError(f"duplicate character label {label!r}", 1, j)
        seen.add(label)
    if len(header) == 1:
        characters = []

    species: List[str] = []
    cells: List[Tuple[int, ...]] = []
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        label = fields[0]
        _check_label(label, lineno, 1)
        if label in seen:
            raise MatrixParseError(f"duplicate species label {label!r}", lineno, 1)
        seen.add(label)
        values = fields[1:]
        if len(values) != len(characters):
            raise MatrixParseError(
                f"expected {len(characters)} cells, found {len(values)}", lineno
            )
        row = []
        for j, v in enumerate(values, start=2):
            if v not in ("0", "1"):
                raise MatrixParseError(f"cell value {v!r} is not 0 or 1", lineno, j)
            row.append(int(v))
        species.append(label)
        cells.append(tuple(row))
    return BinaryMatrix(tuple(species), tuple(characters), tuple(cells))


def _check_label(label: str, line: int, column: int) -> None:
    if label == "" or label != label.strip():
        raise MatrixParseError(f"invalid label {label!r}", line, column)
    if '"' in label:
        raise MatrixParseError("quoting is not supported", line, column)


def read_matrix(path) -> BinaryMatrix:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_matrix(fh.read())


def rows_to_matrix(rows: Iterable[Iterable[int]]) -> BinaryMatrix:
    return BinaryMatrix.from_rows([tuple(r) for r in rows])
