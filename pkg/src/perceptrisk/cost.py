"""Misperception cost matrices, ordered cost vectors, and the discrete cost
distribution a Dirichlet belief model induces on each candidate label."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .belief import LabelSet
from .errors import ValidationError

# cost unit tag used in every report: thousands of currency units
UNIT = "k"


@dataclass(frozen=True)
class CostMatrix:
    """``costs[j, i]`` is the cost of perceiving true label ``j`` as label ``i``."""

    costs: np.ndarray
    labels: LabelSet
    corner: str = field(default="Sign", compare=False)

    def __post_init__(self):
        if not isinstance(self.labels, LabelSet):
            object.__setattr__(self, "labels", LabelSet(self.labels))
        costs = np.array(self.costs, dtype=float)
        m = len(self.labels)
        if costs.shape != (m, m):
            raise ValidationError(f"cost matrix shape {costs.shape} does not match {m} labels")
        if not np.all(np.isfinite(costs)):
            raise ValidationError("cost matrix has non-finite entries")
        if np.any(costs < 0):
            j, i = np.argwhere(costs < 0)[0]
            raise ValidationError(
                f"negative cost at ({self.labels[j]}, {self.labels[i]}): {costs[j, i]}"
            )
        if np.any(np.diag(costs) != 0.0):
            j = int(np.flatnonzero(np.diag(costs) != 0.0)[0])
            raise ValidationError(f"diagonal cost for {self.labels[j]} must be exactly 0")
        costs.setflags(write=False)
        object.__setattr__(self, "costs", costs)

    @property
    def m(self) -> int:
        return self.costs.shape[0]

    @property
    def max_cost(self) -> float:
        return float(self.costs.max())

    def scaled(self, s: float) -> CostMatrix:
        return CostMatrix(self.costs * s, self.labels, self.corner)


@dataclass(frozen=True)
class OrderedCostVector:
    perceived_label: int
    values: tuple[float, ...]
    groups: tuple[tuple[int, ...], ...]

    @property
    def size(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class CostDistribution:
    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        if values.shape != probs.shape or values.ndim != 1 or values.size == 0:
            raise ValidationError("values and probs must be equal-length non-empty vectors")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValidationError("probabilities must be finite and nonnegative")
        if abs(probs.sum() - 1.0) > 1e-6:
            raise ValidationError(f"probabilities sum to {probs.sum()!r}, not 1")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)

    def mean(self) -> float:
        return float(self.values @ self.probs)


def ordered_cost_vector(cm: CostMatrix, i: int) -> OrderedCostVector:
    """Unique costs of column ``i`` in descending order with their true-label groups.

    Costs are grouped by exact equality: 117.0 and 117.0001 are separate atoms.
    """
    if not 0 <= i < cm.m:
        raise ValidationError(f"label index {i} out of range for {cm.m} labels")
    column = cm.costs[:, i]
    values = sorted(set(column.tolist()), reverse=True)
    groups = tuple(tuple(int(j) for j in np.flatnonzero(column == v)) for v in values)
    return OrderedCostVector(i, tuple(values), groups)


def cost_distribution(ocv: OrderedCostVector, cell_probs) -> CostDistribution:
    """Probability of each ordered cost value: the summed cell probabilities
    of the true labels in its group."""
    cell_probs = np.asarray(cell_probs, dtype=float)
    m = sum(len(g) for g in ocv.groups)
    if cell_probs.shape != (m,):
        raise ValidationError(f"expected {m} cell probabilities, got shape {cell_probs.shape}")
    probs = np.array([cell_probs[list(g)].sum() for g in ocv.groups])
    return CostDistribution(np.asarray(ocv.values), probs)


# ----------------------------------------------------------------------------
# CSV I/O
# ----------------------------------------------------------------------------


def format_cost(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def parse_cost_csv(text: str, source: str = "<cost csv>") -> CostMatrix:
    """Parse a square cost table whose first row and column carry labels."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValidationError(f"{source}: empty cost table")
    header = [c.strip() for c in rows[0]]
    col_labels = header[1:]
    body = rows[1:]
    if len(body) != len(col_labels):
        raise ValidationError(
            f"{source}: {len(body)} data rows but {len(col_labels)} label columns"
        )
    costs = []
    for lineno, row in enumerate(body, start=2):
        row = [c.strip() for c in row]
        if len(row) != len(header):
            raise ValidationError(f"{source}:{lineno}: expected {len(header)} fields, got {len(row)}")
        if row[0] != col_labels[lineno - 2]:
            raise ValidationError(
                f"{source}:{lineno}: row label {row[0]!r} does not match column "
                f"order (expected {col_labels[lineno - 2]!r})"
            )
        try:
            costs.append([float(c) for c in row[1:]])
        except ValueError as exc:
            raise ValidationError(f"{source}:{lineno}: {exc}") from None
    try:
        return CostMatrix(np.array(costs), LabelSet(col_labels), header[0] or "Sign")
    except ValidationError as exc:
        raise ValidationError(f"{source}: {exc}") from None


def load_cost_csv(path: str | Path, labels: Sequence[str] | None = None) -> CostMatrix:
    path = Path(path)
    cm = parse_cost_csv(path.read_text(), str(path))
    if labels is not None and tuple(labels) != cm.labels.labels:
        raise ValidationError(
            f"{path}: cost labels {list(cm.labels)} do not match configured labels {list(labels)}"
        )
    return cm


def dump_cost_csv(cm: CostMatrix) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([cm.corner, *cm.labels])
    for j, lb in enumerate(cm.labels):
        writer.writerow([lb, *(format_cost(v) for v in cm.costs[j])])
    return out.getvalue()
