"""Expert prior table and its translation into cut-rate weights and Beta cut priors."""
from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np

UNKNOWN = "UNKNOWN"

_NAME_RE = re.compile(r"^[A-Za-z0-9_+\-]+$")


class TableParseError(ValueError):
    pass


@dataclass(frozen=True)
class Hyperparameters:
    gamma0: float = 100.0   # weight when a column holds both +1 and -1
    gamma1: float = 1.0     # weight when only one informative label is present
    phi0: float = 5.0
    phi1: float = 2.0
    budget: float = 1.0

    def __post_init__(self):
        for name in ("gamma0", "gamma1", "phi0", "phi1", "budget"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.gamma1 < self.gamma0:
            raise ValueError("need gamma1 < gamma0")
        if not self.phi1 < self.phi0:
            raise ValueError("need phi1 < phi0")


@dataclass(frozen=True, eq=False)
class PriorTable:
    """C cell types by D markers, entries in {-1, 0, +1}.

    Immutable; ``entries`` is a read-only int8 array.
    """

    types: tuple[str, ...]
    markers: tuple[str, ...]
    entries: np.ndarray

    def __post_init__(self):
        types = tuple(self.types)
        markers = tuple(self.markers)
        entries = np.array(self.entries, dtype=np.int8).reshape(len(types), len(markers))
        if not markers:
            raise ValueError("table needs at least one marker")
        for kind, names in (("type", types), ("marker", markers)):
            if len(set(names)) != len(names):
                raise ValueError(f"duplicate {kind} names")
            for name in names:
                if not name:
                    raise ValueError(f"empty {kind} name")
        if UNKNOWN in types:
            raise ValueError(f"{UNKNOWN!r} is reserved and cannot name a cell type")
        if not np.isin(entries, (-1, 0, 1)).all():
            raise ValueError("entries must be -1, 0 or +1")
        entries.setflags(write=False)
        object.__setattr__(self, "types", types)
        object.__setattr__(self, "markers", markers)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "_filtered", {})

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, PriorTable):
            return NotImplemented
        return (self.types == other.types and self.markers == other.markers
                and np.array_equal(self.entries, other.entries))

    def __hash__(self):
        return hash((self.types, self.markers, self.entries.tobytes()))

    def __len__(self):
        return len(self.types)

    @property
    def n_types(self) -> int:
        return len(self.types)

    @property
    def n_markers(self) -> int:
        return len(self.markers)

    def marker_index(self, marker: str | int) -> int:
        if isinstance(marker, (int, np.integer)):
            if not 0 <= marker < self.n_markers:
                raise IndexError(f"marker index {marker} out of range")
            return int(marker)
        return self.markers.index(marker)

    def row(self, name: str) -> np.ndarray:
        return self.entries[self.types.index(name)]

    def subset(self, mask) -> "PriorTable":
        mask = np.asarray(mask, dtype=bool)
        return PriorTable(tuple(t for t, keep in zip(self.types, mask) if keep),
                          self.markers, self.entries[mask])

    def select(self, names: Iterable[str]) -> "PriorTable":
        """Rows named in ``names``, kept in table order."""
        names = set(names)
        missing = names - set(self.types)
        if missing:
            raise KeyError(f"unknown cell types {sorted(missing)}")
        return self.subset([t in names for t in self.types])

    def filter_rows(self, dim: str | int, side: str) -> "PriorTable":
        """Rows still possible on one side of a cut in ``dim``.

        Left keeps entries -1 and 0, right keeps +1 and 0. Results are
        memoized, so repeated filters return the same object.
        """
        d = self.marker_index(dim)
        key = (d, side)
        if key not in self._filtered:
            col = self.entries[:, d]
            if side == "left":
                self._filtered[key] = self.subset(col <= 0)
            elif side == "right":
                self._filtered[key] = self.subset(col >= 0)
            else:
                raise ValueError(f"side must be 'left' or 'right', got {side!r}")
        return self._filtered[key]

    @cached_property
    def label_sets(self) -> tuple[frozenset, ...]:
        return tuple(frozenset(int(v) for v in np.unique(self.entries[:, d]))
                     for d in range(self.n_markers))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["type", *self.markers])
        for name, row in zip(self.types, self.entries):
            writer.writerow([name, *(f"{int(v):+d}" if v else "0" for v in row)])
        return buf.getvalue()


def label_set(table: PriorTable, dim: str | int) -> frozenset:
    return table.label_sets[table.marker_index(dim)]


def _informative(labels) -> tuple[bool, bool]:
    labels = set(labels)
    if not labels or not labels <= {-1, 0, 1}:
        raise ValueError(f"label set must be a nonempty subset of {{-1, 0, +1}}, got {labels}")
    return -1 in labels, 1 in labels


def dimension_weight(labels, hyper: Hyperparameters) -> float:
    low, high = _informative(labels)
    if low and high:
        return hyper.gamma0
    if low or high:
        return hyper.gamma1
    return 1.0


def cut_beta_params(labels, hyper: Hyperparameters) -> tuple[float, float]:
    """Beta shape parameters for the relative cut position.

    Skewed towards the side holding the uninformative (0) rows, so the
    informative type ends up in the smaller partition.
    """
    low, high = _informative(labels)
    if low and high:
        return hyper.phi0, hyper.phi0
    if low:
        return hyper.phi1, hyper.phi0
    if high:
        return hyper.phi0, hyper.phi1
    return 1.0, 1.0


def column_priors(table: PriorTable, hyper: Hyperparameters) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-dimension (weights, alpha, beta) arrays for a nonempty table."""
    if table.n_types == 0:
        raise ValueError("column priors are undefined for an empty table")
    weights = np.array([dimension_weight(s, hyper) for s in table.label_sets])
    ab = np.array([cut_beta_params(s, hyper) for s in table.label_sets])
    return weights, ab[:, 0], ab[:, 1]


def _parse_entry(text: str, lineno: int, col: str) -> int:
    value = text.strip()
    if value in ("1", "+1"):
        return 1
    if value in ("0", "+0", "-0"):
        return 0
    if value == "-1":
        return -1
    raise TableParseError(f"line {lineno}, column {col!r}: entry {text!r} is not -1, 0 or +1")


def parse_table(text: str | io.TextIOBase) -> PriorTable:
    """Read a prior table from CSV text: header of marker names, one row per type."""
    if not isinstance(text, str):
        text = text.read()
    rows = [r for r in csv.reader(io.StringIO(text))]
    rows = [(i + 1, r) for i, r in enumerate(rows) if any(c.strip() for c in r)]
    if not rows:
        raise TableParseError("empty table")
    _, header = rows[0]
    markers = [h.strip() for h in header[1:]]
    if not markers:
        raise TableParseError("line 1: header lists no markers")
    for m in markers:
        if not _NAME_RE.match(m):
            raise TableParseError(f"line 1: invalid marker name {m!r}")
    if len(set(markers)) != len(markers):
        raise TableParseError("line 1: duplicate marker names")
    body = rows[1:]
    if not body:
        raise TableParseError("table has a header but no cell-type rows")
    types, entries = [], []
    for lineno, row in body:
        if len(row) != len(markers) + 1:
            raise TableParseError(f"line {lineno}: expected {len(markers) + 1} fields, got {len(row)}")
        name = row[0].strip()
        if not _NAME_RE.match(name):
            raise TableParseError(f"line {lineno}: invalid type name {name!r}")
        if name in types:
            raise TableParseError(f"line {lineno}: duplicate type name {name!r}")
        if name == UNKNOWN:
            raise TableParseError(f"line {lineno}: type name {UNKNOWN!r} is reserved")
        types.append(name)
        entries.append([_parse_entry(v, lineno, m) for v, m in zip(row[1:], markers)])
    return PriorTable(tuple(types), tuple(markers), np.array(entries, dtype=np.int8))


# Basophil and T-cell signatures over CD4, CD8 and CD3.
EXAMPLE_TABLE_CSV = """\
type,CD4,CD8,CD3
Basophils,0,-1,-1
CD4_T_cells,+1,-1,+1
CD8_T_cells,-1,+1,+1
"""


def example_table() -> PriorTable:
    return parse_table(EXAMPLE_TABLE_CSV)
