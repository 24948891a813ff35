"""Beliefs on the probability simplex, label alphabets, and argmax (Voronoi)
classification."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError

CLAMP_FLOOR = 1e-10
SUM_TOLERANCE = 1e-3
UNIT_SUM_ATOL = 1e-9


@dataclass(frozen=True)
class LabelSet:
    """Ordered, duplicate-free label identifiers (index <-> label is a bijection)."""

    labels: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __init__(self, labels: Sequence[str]):
        labels = tuple(str(lb) for lb in labels)
        if len(labels) < 2:
            raise ValidationError(f"need at least 2 labels, got {len(labels)}")
        if len(set(labels)) != len(labels):
            dupes = sorted({lb for lb in labels if labels.count(lb) > 1})
            raise ValidationError(f"duplicate labels: {dupes}")
        if any(not lb for lb in labels):
            raise ValidationError("labels must be non-empty strings")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", {lb: i for i, lb in enumerate(labels)})

    @property
    def m(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __getitem__(self, i: int) -> str:
        return self.labels[i]

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise ValidationError(f"unknown label {label!r}") from None


@dataclass(frozen=True)
class Belief:
    """A validated point on the simplex; ``clamped`` records whether any raw
    component was lifted to the floor (or cut to 1) during validation."""

    components: np.ndarray
    clamped: bool = False

    def __post_init__(self):
        comp = np.asarray(self.components, dtype=float)
        comp.setflags(write=False)
        object.__setattr__(self, "components", comp)

    @property
    def m(self) -> int:
        return self.components.shape[0]

    def __len__(self) -> int:
        return self.m

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.components, dtype=dtype)


def _renormalize(clipped: np.ndarray) -> np.ndarray:
    # floored entries stay exactly at the floor; the excess comes off the rest
    # in proportion, and rounding-level drift is left alone so that
    # validation is idempotent
    excess = clipped.sum(axis=-1, keepdims=True) - 1.0
    needs = np.abs(excess) > 1e-12
    if not needs.any():
        return clipped
    free = clipped > CLAMP_FLOOR
    free_mass = np.where(free, clipped, 0.0).sum(axis=-1, keepdims=True)
    adjust = np.where(free & needs, clipped * (excess / free_mass), 0.0)
    return clipped - adjust


def _check_raw(raw: np.ndarray, m: int | None, where: str = "") -> None:
    if m is not None and raw.shape[-1] != m:
        raise ValidationError(f"{where}expected {m} components, got {raw.shape[-1]}")
    if not np.all(np.isfinite(raw)):
        raise ValidationError(f"{where}non-finite belief component")


def validate_belief(raw: Sequence[float], m: int | None = None) -> Belief:
    """Clamp ``raw`` into ``[1e-10, 1]`` and renormalize.

    Raises :class:`ValidationError` on a dimension mismatch, a non-finite
    entry, or a raw sum more than 1e-3 away from 1.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 1:
        raise ValidationError(f"belief must be one-dimensional, got shape {raw.shape}")
    _check_raw(raw, m)
    total = raw.sum()
    if abs(total - 1.0) > SUM_TOLERANCE:
        raise ValidationError(f"belief sums to {total:.6g}; deviation exceeds {SUM_TOLERANCE}")
    clipped = np.clip(raw, CLAMP_FLOOR, 1.0)
    clamped = bool(np.any(clipped != raw))
    return Belief(_renormalize(clipped), clamped)


def validate_beliefs(raw, m: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise :func:`validate_belief` for a ``(q, m)`` array.

    Returns the cleaned array and a boolean per-row clamp mask.  Error
    messages carry the offending row index.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2:
        raise ValidationError(f"belief batch must be two-dimensional, got shape {raw.shape}")
    _check_raw(raw, m)
    bad = np.flatnonzero(np.abs(raw.sum(axis=1) - 1.0) > SUM_TOLERANCE)
    if bad.size:
        r = int(bad[0])
        raise ValidationError(f"row {r}: belief sums to {raw[r].sum():.6g}")
    clipped = np.clip(raw, CLAMP_FLOOR, 1.0)
    clamped = np.any(clipped != raw, axis=1)
    return _renormalize(clipped), clamped


def voronoi_cell(b) -> tuple[int, bool]:
    """Index of the strictly largest component and a tie flag.

    Exact ties resolve to the lowest tied index with ``tie=True``.

    >>> voronoi_cell(validate_belief([0.2, 0.7, 0.1]))
    (1, False)
    """
    comp = np.asarray(b, dtype=float)
    i = int(np.argmax(comp))
    tie = bool(np.count_nonzero(comp == comp[i]) > 1)
    return i, tie
