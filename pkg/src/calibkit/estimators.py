"""Estimators of the squared kernel calibration error (SKCE) and of the ECE.

All SKCE estimators are built from the pairwise terms

    h_ij = (e_{y_i} - p_i)^T k(p_i, p_j) (e_{y_j} - p_j)

- ``skce_biased``:   n^-2 * sum over all (i, j)
- ``skce_unbiased``: mean over unordered pairs i < j
- ``skce_linear``:   mean over the disjoint consecutive pairs (1,2), (3,4), ...
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import _fast
from .core import LabeledDataset, PredictionRecord, residual
from .errors import BadParameter, EmptyDataset, TooFewSamples
from .kernels import MatrixKernel, ScalarKernel, quadform

BIASED = "SKCE_b"
UNBIASED = "SKCE_uq"
LINEAR = "SKCE_ul"


@dataclass(frozen=True)
class SkceEstimate:
    value: float
    estimator: str
    n: int
    kernel: str


@dataclass(frozen=True)
class UniformBinning:
    """Split every class probability into ``bins_per_class`` equal-width bins."""

    bins_per_class: int = 10

    def __post_init__(self):
        if int(self.bins_per_class) != self.bins_per_class or self.bins_per_class < 1:
            raise BadParameter(f"bins_per_class must be a positive integer, got {self.bins_per_class}")

    def describe(self) -> str:
        return f"uniform:{self.bins_per_class}"


@dataclass(frozen=True)
class MedianSplitBinning:
    """Recursively split bins at the median of their highest-variance class."""

    min_per_bin: int = 5

    def __post_init__(self):
        if int(self.min_per_bin) != self.min_per_bin or self.min_per_bin < 1:
            raise BadParameter(f"min_per_bin must be a positive integer, got {self.min_per_bin}")

    def describe(self) -> str:
        return f"median:{self.min_per_bin}"


Binning = Union[UniformBinning, MedianSplitBinning]


@dataclass(frozen=True)
class EceEstimate:
    value: float
    binning: Binning
    occupied_bins: int


def parse_binning(text: str) -> Binning:
    """Parse ``uniform:<bins>`` or ``median:<min_per_bin>``."""
    scheme, _, arg = text.strip().partition(":")
    try:
        if scheme == "uniform":
            return UniformBinning(int(arg) if arg else 10)
        if scheme == "median":
            return MedianSplitBinning(int(arg) if arg else 5)
    except ValueError:
        raise BadParameter(f"bad binning parameter in {text!r}") from None
    raise BadParameter(f"unknown binning {text!r}; expected uniform:<bins> or median:<min>")


# --------------------------------------------------------------------------
# SKCE
# --------------------------------------------------------------------------


def h_term(kernel: MatrixKernel, a: PredictionRecord, b: PredictionRecord) -> float:
    return quadform(kernel, residual(a), a.prediction, b.prediction, residual(b))


def _term_inputs(kernel: MatrixKernel, ds: LabeledDataset):
    kernel.check_dim(ds.class_count)
    R = ds.residuals
    for term in kernel.terms:
        V = R if term.matrix is None else np.ascontiguousarray(R @ term.matrix)
        if term.weight != 1.0:
            V = term.weight * V
        metric, family, nu = term.scalar.codes
        yield ds.predictions, R, V, metric, family, nu


def pair_sums(kernel: MatrixKernel, ds: LabeledDataset) -> tuple[float, float]:
    """Return ``(sum_{i<j} h_ij, sum_i h_ii)``."""
    off = 0.0
    diag = 0.0
    for P, R, V, metric, family, nu in _term_inputs(kernel, ds):
        off += float(np.sum(_fast.pair_row_sums(P, R, V, metric, family, nu)))
        diag += float(np.einsum("ij,ij->", R, V))
    return off, diag


def h_matrix(kernel: MatrixKernel, ds: LabeledDataset) -> np.ndarray:
    """Full symmetric ``(n, n)`` matrix of h-terms."""
    n = len(ds)
    H = np.zeros((n, n))
    for P, R, V, metric, family, nu in _term_inputs(kernel, ds):
        H += _fast.h_matrix(P, R, V, metric, family, nu)
    return H


def linear_terms(kernel: MatrixKernel, ds: LabeledDataset) -> np.ndarray:
    """``h_{2i-1,2i}`` for the ``floor(n/2)`` consecutive pairs."""
    out = np.zeros(len(ds) // 2)
    for P, R, V, metric, family, nu in _term_inputs(kernel, ds):
        out += _fast.linear_terms(P, R, V, metric, family, nu)
    return out


def skce_biased(kernel: MatrixKernel, ds: LabeledDataset) -> SkceEstimate:
    n = len(ds)
    if n < 1:
        raise EmptyDataset("SKCE_b needs at least one record")
    off, diag = pair_sums(kernel, ds)
    value = (2.0 * off + diag) / (n * n)
    return SkceEstimate(max(value, 0.0), BIASED, n, kernel.describe())


def skce_unbiased(kernel: MatrixKernel, ds: LabeledDataset) -> SkceEstimate:
    n = len(ds)
    if n < 2:
        raise TooFewSamples(f"SKCE_uq needs at least 2 records, got {n}")
    off, _ = pair_sums(kernel, ds)
    return SkceEstimate(off / math.comb(n, 2), UNBIASED, n, kernel.describe())


def skce_linear(kernel: MatrixKernel, ds: LabeledDataset) -> SkceEstimate:
    n = len(ds)
    if n < 2:
        raise TooFewSamples(f"SKCE_ul needs at least 2 records, got {n}")
    terms = linear_terms(kernel, ds)
    return SkceEstimate(float(np.sum(terms)) / terms.size, LINEAR, n, kernel.describe())


SKCE_ESTIMATORS = {BIASED: skce_biased, UNBIASED: skce_unbiased, LINEAR: skce_linear}


# --------------------------------------------------------------------------
# ECE
# --------------------------------------------------------------------------


def _uniform_ids(P: np.ndarray, bins: int) -> tuple[np.ndarray, int]:
    keys = np.minimum(np.floor(P * bins).astype(np.int64), bins - 1)
    _, ids = np.unique(keys, axis=0, return_inverse=True)
    ids = ids.reshape(-1)
    return ids, int(ids.max()) + 1 if ids.size else 0


def _median_split_groups(P: np.ndarray, min_per_bin: int) -> list[np.ndarray]:
    groups = []
    stack = [np.arange(P.shape[0])]
    while stack:
        idx = stack.pop()
        vals = P[idx]
        c = int(np.argmax(vals.var(axis=0)))
        col = vals[:, c]
        below = col < np.median(col)
        left, right = idx[below], idx[~below]
        if left.size < min_per_bin or right.size < min_per_bin:
            groups.append(idx)
        else:
            # right pushed first so the left half is emitted first
            stack.append(right)
            stack.append(left)
    return groups


def bin_ids(P: np.ndarray, binning: Binning) -> tuple[np.ndarray, int]:
    """Bin index of every row of ``P`` and the number of occupied bins."""
    if isinstance(binning, UniformBinning):
        return _uniform_ids(P, binning.bins_per_class)
    if isinstance(binning, MedianSplitBinning):
        ids = np.empty(P.shape[0], dtype=np.int64)
        groups = _median_split_groups(P, binning.min_per_bin) if P.shape[0] else []
        for b, members in enumerate(groups):
            ids[members] = b
        return ids, len(groups)
    raise BadParameter(f"unknown binning {binning!r}")


def partition(ds: LabeledDataset, binning: Binning) -> list[np.ndarray]:
    """Partition record indices (0-based) into bins.

    Uniform bins are keyed by the tuple of per-class bin indices and listed in
    lexicographic key order; only occupied keys exist. Median-split bins are
    listed in depth-first, left-before-right order.
    """
    ids, nbins = bin_ids(ds.predictions, binning)
    order = np.argsort(ids, kind="stable")
    bounds = np.searchsorted(ids[order], np.arange(nbins + 1))
    return [order[bounds[b]:bounds[b + 1]] for b in range(nbins)]


def ece_from_ids(P: np.ndarray, labels: np.ndarray, ids: np.ndarray, nbins: int) -> float:
    # sum_b (n_b / n) * TV(mean_b, freq_b) == sum_b ||S_b - L_b||_1 / (2n)
    n, m = P.shape
    cols = np.arange(m)
    S = np.bincount((ids[:, None] * m + cols).ravel(), weights=P.ravel(), minlength=nbins * m)
    L = np.bincount(ids * m + (labels - 1), minlength=nbins * m)
    return min(1.0, 0.5 * float(np.abs(S - L).sum()) / n)


def ece_histogram(ds: LabeledDataset, binning: Binning = UniformBinning()) -> EceEstimate:
    """Histogram-regression ECE with respect to the total variation distance."""
    if len(ds) == 0:
        raise EmptyDataset("ECE of an empty dataset is undefined")
    ids, nbins = bin_ids(ds.predictions, binning)
    return EceEstimate(ece_from_ids(ds.predictions, ds.labels, ids, nbins), binning, nbins)


# --------------------------------------------------------------------------
# MMCE through the max-confidence lens
# --------------------------------------------------------------------------


def max_lens(ds: LabeledDataset) -> LabeledDataset:
    """Binary dataset of ``(max_c p_c, 1 - max_c p_c)`` with label 1 iff the argmax is correct.

    Ties in the argmax go to the lowest class index.
    """
    P = ds.predictions
    top = P.argmax(axis=1) if len(ds) else np.empty(0, dtype=np.int64)
    gmax = P.max(axis=1) if len(ds) else np.empty(0)
    labels = np.where(top + 1 == ds.labels, 1, 2)
    return LabeledDataset(np.column_stack([gmax, 1.0 - gmax]), labels, 2)


def mmce_squared(scalar: ScalarKernel, ds: LabeledDataset) -> float:
    """Unbiased squared MMCE, as SKCE_uq with kernel ``scalar / 2 * I_2`` on :func:`max_lens`."""
    if len(ds) < 2:
        raise TooFewSamples(f"MMCE needs at least 2 records, got {len(ds)}")
    kernel = MatrixKernel.identity(scalar, weight=0.5)
    return skce_unbiased(kernel, max_lens(ds)).value
