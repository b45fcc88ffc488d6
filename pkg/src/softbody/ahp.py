"""Analytic Hierarchy Process utility for cost-value requirement ranking.

A pairwise comparison matrix is column-normalized and the priority vector is
the row mean of the normalized matrix (the variant whose output the shipped
requirement tables pin down; no eigenvector iteration). Cost-value points
pair two priority vectors into percentage coordinates ranked by value/cost.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import err

RECIPROCITY_TOLERANCE = 0.05  # rounded reciprocals like 0.3333 vs 3 must pass


@dataclass
class ComparisonMatrix:
    labels: list[str]
    entries: np.ndarray
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.float64)
        n = len(self.labels)
        if n < 2:
            raise err("INVALID_MATRIX", "comparison needs at least two requirements")
        if len(set(self.labels)) != n:
            raise err("INVALID_MATRIX", "labels must be unique")
        if self.entries.shape != (n, n):
            raise err("INVALID_MATRIX", f"expected a {n}x{n} matrix, got {self.entries.shape}")
        if np.any(self.entries <= 0):
            raise err("NONPOSITIVE_ENTRY", "all pairwise entries must be positive")
        if np.max(np.abs(np.diag(self.entries) - 1.0)) > 1e-9:
            raise err("INVALID_MATRIX", "diagonal entries must equal 1")
        worst = np.max(np.abs(self.entries * self.entries.T - 1.0))
        if worst > RECIPROCITY_TOLERANCE:
            self.warnings.append(
                f"reciprocity violated by up to {worst:.3g}; results may not be meaningful"
            )

    @property
    def n(self) -> int:
        return len(self.labels)


@dataclass
class PriorityVector:
    labels: list[str]
    values: np.ndarray

    def as_dict(self) -> dict[str, float]:
        return {label: float(v) for label, v in zip(self.labels, self.values)}


def normalize(matrix: ComparisonMatrix) -> np.ndarray:
    """Divide every entry by its column sum; output columns each sum to 1."""
    if np.any(matrix.entries <= 0):
        raise err("NONPOSITIVE_ENTRY", "all pairwise entries must be positive")
    return matrix.entries / matrix.entries.sum(axis=0)


def priority_vector(matrix: ComparisonMatrix) -> PriorityVector:
    """Relative contribution per requirement: row means of the normalized matrix."""
    values = normalize(matrix).mean(axis=1)
    return PriorityVector(labels=list(matrix.labels), values=values)


def cost_value_points(value: PriorityVector, cost: PriorityVector) -> list[tuple[str, float, float]]:
    """(label, cost %, value %) per requirement, ordered by descending
    value/cost ratio with label as the tie-break."""
    if set(value.labels) != set(cost.labels):
        raise err("LABEL_MISMATCH", "value and cost vectors rank different requirement sets")
    cost_by_label = cost.as_dict()
    points = [
        (label, 100.0 * cost_by_label[label], 100.0 * float(v))
        for label, v in zip(value.labels, value.values)
    ]
    points.sort(key=lambda p: (-(p[2] / p[1]), p[0]))
    return points


# -- CSV interchange -----------------------------------------------------------


def _parse_cell(cell: str) -> float:
    cell = cell.strip()
    if "/" in cell:
        num, _, den = cell.partition("/")
        return float(num) / float(den)
    return float(cell)


def read_matrix_csv(source) -> ComparisonMatrix:
    """Matrix CSV: header row of labels (leading cell ignored), then one row
    per label: label, entries... Entries may be decimals or fractions '1/3'."""
    if hasattr(source, "read"):
        rows = list(csv.reader(source))
    else:
        try:
            with open(source, "r", encoding="utf-8", newline="") as handle:
                rows = list(csv.reader(handle))
        except OSError as exc:
            raise err("IO_FAILURE", str(exc)) from exc
    rows = [row for row in rows if row and any(cell.strip() for cell in row)]
    if len(rows) < 3:
        raise err("INVALID_MATRIX", "matrix CSV needs a header and at least two rows")
    header = [cell.strip() for cell in rows[0][1:]]
    labels = []
    entries = []
    for row in rows[1:]:
        labels.append(row[0].strip())
        if len(row) - 1 != len(header):
            raise err("INVALID_MATRIX", f"row {row[0]!r} has {len(row) - 1} entries, expected {len(header)}")
        try:
            entries.append([_parse_cell(cell) for cell in row[1:]])
        except (ValueError, ZeroDivisionError) as exc:
            raise err("INVALID_MATRIX", f"bad numeric cell in row {row[0]!r}: {exc}") from exc
    if header != labels:
        raise err("INVALID_MATRIX", "header labels must match row labels in order")
    return ComparisonMatrix(labels=labels, entries=np.array(entries))


def write_points_csv(points: list[tuple[str, float, float]], sink) -> None:
    close_after = False
    if hasattr(sink, "write"):
        handle = sink
    else:
        try:
            handle = open(sink, "w", encoding="utf-8", newline="")
        except OSError as exc:
            raise err("IO_FAILURE", str(exc)) from exc
        close_after = True
    try:
        writer = csv.writer(handle)
        writer.writerow(["label", "cost_percent", "value_percent"])
        for label, cost_pct, value_pct in points:
            writer.writerow([label, f"{cost_pct:.6f}", f"{value_pct:.6f}"])
    finally:
        if close_after:
            handle.close()
