"""Predictions, labels and datasets, plus CSV ingestion and emission.

Labels are 1-based everywhere (files and API), so a dataset with ``m``
classes carries labels in ``1..m``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence, TextIO

import numpy as np

from .errors import BadLabel, DimensionMismatch, EmptyInput, NotOnSimplex, ParseError

SIMPLEX_TOL = 1e-6
NEGATIVE_TOL = 1e-12


class PredictionRecord(NamedTuple):
    prediction: np.ndarray
    label: int


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _normalize_rows(P: np.ndarray, tol: float) -> np.ndarray:
    # reject, then clamp tiny negatives and renormalize
    bad_neg = np.flatnonzero((P < -NEGATIVE_TOL).any(axis=1))
    if bad_neg.size:
        i = int(bad_neg[0])
        raise NotOnSimplex(f"row {i + 1}: negative entry {P[i].min()!r}")
    sums = P.sum(axis=1)
    bad_sum = np.flatnonzero(~(np.abs(sums - 1.0) <= tol))
    if bad_sum.size:
        i = int(bad_sum[0])
        raise NotOnSimplex(f"row {i + 1}: entries sum to {sums[i]!r}")
    P = np.clip(P, 0.0, None)
    return P / P.sum(axis=1, keepdims=True)


def simplex_vector(values: Sequence[float], tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate ``values`` as a point on the probability simplex and renormalize it."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise DimensionMismatch(f"simplex vector needs at least 2 entries, got shape {v.shape}")
    return _normalize_rows(v[None, :], tol)[0]


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Immutable set of ``(prediction, label)`` pairs in ingestion order.

    ``predictions`` is an ``(n, m)`` float array, ``labels`` an ``(n,)`` int
    array with values in ``1..class_count``. Prefer :func:`validate_dataset`
    or :meth:`from_arrays` for untrusted input; direct construction only
    checks shapes and label range.
    """

    predictions: np.ndarray
    labels: np.ndarray
    class_count: int

    def __post_init__(self):
        m = int(self.class_count)
        if m < 2:
            raise DimensionMismatch(f"class_count must be at least 2, got {m}")
        P = np.array(self.predictions, dtype=float, copy=True)
        if P.size == 0:
            P = P.reshape(0, m)
        y = np.array(self.labels, dtype=np.int64, copy=True).reshape(-1)
        if P.ndim != 2 or P.shape[1] != m:
            raise DimensionMismatch(f"predictions must have shape (n, {m}), got {P.shape}")
        if y.shape[0] != P.shape[0]:
            raise DimensionMismatch(f"{P.shape[0]} predictions but {y.shape[0]} labels")
        bad = np.flatnonzero((y < 1) | (y > m))
        if bad.size:
            i = int(bad[0])
            raise BadLabel(f"row {i + 1}: label {int(y[i])} not in 1..{m}")
        R = -P.copy()
        R[np.arange(P.shape[0]), y - 1] += 1.0
        object.__setattr__(self, "class_count", m)
        object.__setattr__(self, "predictions", _readonly(P))
        object.__setattr__(self, "labels", _readonly(y))
        object.__setattr__(self, "_residuals", _readonly(R))

    @classmethod
    def from_arrays(cls, predictions, labels, class_count: int | None = None, tol: float = SIMPLEX_TOL) -> "LabeledDataset":
        """Validate array input: simplex tolerance, dimension and label checks."""
        P = np.asarray(predictions, dtype=float)
        if P.ndim != 2:
            raise DimensionMismatch(f"predictions must be 2-D, got shape {P.shape}")
        m = P.shape[1] if class_count is None else int(class_count)
        if P.shape[1] != m:
            raise DimensionMismatch(f"predictions have {P.shape[1]} columns, expected {m}")
        if P.shape[0]:
            P = _normalize_rows(P, tol)
        return cls(P, labels, m)

    @property
    def residuals(self) -> np.ndarray:
        """``(n, m)`` array of ``e_y - p``."""
        return self._residuals

    def __len__(self) -> int:
        return self.predictions.shape[0]

    def __getitem__(self, i: int) -> PredictionRecord:
        return PredictionRecord(self.predictions[i], int(self.labels[i]))

    def __iter__(self) -> Iterator[PredictionRecord]:
        for i in range(len(self)):
            yield self[i]

    def take(self, indices) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.predictions[idx], self.labels[idx], self.class_count)

    def __repr__(self) -> str:
        return f"LabeledDataset(n={len(self)}, m={self.class_count})"


def validate_dataset(rows: Iterable[tuple[Sequence[float], int]], m: int, tol: float = SIMPLEX_TOL) -> LabeledDataset:
    """Build a dataset from ``(vector, label)`` rows.

    Raises DimensionMismatch, NotOnSimplex or BadLabel for the first
    offending row. Rows are neither reordered nor dropped.
    """
    rows = list(rows)
    if not rows:
        raise EmptyInput("validate_dataset needs at least one row")
    P = np.empty((len(rows), m))
    labels = np.empty(len(rows), dtype=np.int64)
    for i, (vec, label) in enumerate(rows):
        v = np.asarray(vec, dtype=float)
        if v.shape != (m,):
            raise DimensionMismatch(f"row {i + 1}: expected {m} probabilities, got {v.size}")
        P[i] = v
        if int(label) != label:
            raise BadLabel(f"row {i + 1}: label {label!r} is not an integer")
        labels[i] = int(label)
    return LabeledDataset.from_arrays(P, labels, m, tol)


def residual(rec: PredictionRecord) -> np.ndarray:
    """``e_label - prediction`` for one record."""
    r = -np.asarray(rec.prediction, dtype=float)
    r[rec.label - 1] += 1.0
    return r


def _header(m: int) -> list[str]:
    return [f"p{c}" for c in range(1, m + 1)] + ["y"]


def load_dataset_csv(stream: TextIO | str, tol: float = SIMPLEX_TOL) -> LabeledDataset:
    """Read a ``p1,...,pm,y`` CSV from a text stream (or a string)."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty CSV: missing header") from None
    header = [h.strip() for h in header]
    m = len(header) - 1
    if m < 2 or header != _header(m):
        raise ParseError(f"bad header {','.join(header)!r}; expected p1,...,pm,y with m >= 2")
    P, labels = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != m + 1:
            raise ParseError(f"line {lineno}: expected {m + 1} fields, got {len(row)}")
        try:
            P.append([float(cell) for cell in row[:m]])
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric probability") from None
        try:
            labels.append(int(row[m]))
        except ValueError:
            raise ParseError(f"line {lineno}: label {row[m]!r} is not an integer") from None
    if not P:
        return LabeledDataset(np.empty((0, m)), np.empty(0, dtype=np.int64), m)
    return LabeledDataset.from_arrays(np.array(P), np.array(labels), m, tol)


def write_dataset_csv(ds: LabeledDataset, stream: TextIO) -> None:
    """Write ``ds`` as CSV with shortest round-trip float formatting."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(_header(ds.class_count))
    for p, y in zip(ds.predictions.tolist(), ds.labels.tolist()):
        writer.writerow([repr(v) for v in p] + [y])
