"""Statistical tests of the null hypothesis that a model is calibrated.

Method tags follow the short names used in the experiments:

====== ============================== =========================================
tag    method                         p-value
====== ============================== =========================================
D_b    DistFreeBiased                 upper bound, SKCE_b
D_uq   DistFreeUnbiased               upper bound, SKCE_uq
D_ul   DistFreeLinear                 upper bound, SKCE_ul
A_l    AsymptoticLinear               normal approximation, SKCE_ul
A_uq   AsymptoticQuadraticBootstrap   bootstrap of n * SKCE_uq
C      ConsistencyResampling          resampling of the histogram ECE
====== ============================== =========================================
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import rng as _rng
from .core import LabeledDataset
from .errors import BadParameter, DegenerateVarianceWarning, EmptyDataset, TooFewSamples
from .estimators import (
    Binning,
    UniformBinning,
    bin_ids,
    ece_from_ids,
    ece_histogram,
    h_matrix,
    linear_terms,
    skce_biased,
    skce_linear,
    skce_unbiased,
)
from .kernels import MatrixKernel, uniform_bound
from .numerics import normal_cdf, sample_std
from .synth import categorical_from_uniform

METHODS = {
    "D_b": "DistFreeBiased",
    "D_uq": "DistFreeUnbiased",
    "D_ul": "DistFreeLinear",
    "A_l": "AsymptoticLinear",
    "A_uq": "AsymptoticQuadraticBootstrap",
    "C": "ConsistencyResampling",
}

DEFAULT_BOOT = 1000


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # not a pytest test class

    method: str
    statistic: float
    pvalue: float
    params: dict[str, Any] = field(default_factory=dict)

    def reject(self, alpha: float) -> bool:
        return self.pvalue <= alpha


def _check_bound_args(n, B):
    if int(n) != n or n < 1:
        raise BadParameter(f"n must be a positive integer, got {n}")
    if not B > 0:
        raise BadParameter(f"B must be positive, got {B}")


def pvalue_bound_biased(t: float, n: int, B: float) -> float:
    """Distribution-free upper bound of ``P[SKCE_b >= t]`` under calibration."""
    _check_bound_args(n, B)
    if t < 0:
        raise BadParameter(f"SKCE_b estimates are non-negative, got {t}")
    x = max(0.0, math.sqrt(n * t / B) - 1.0)
    return math.exp(-0.5 * x * x)


def pvalue_bound_unbiased(t: float, n: int, B: float) -> float:
    """Distribution-free upper bound of ``P[T >= t]`` for ``T`` = SKCE_uq or SKCE_ul."""
    _check_bound_args(n, B)
    if n < 2:
        raise BadParameter(f"n must be at least 2, got {n}")
    if t <= 0:
        return 1.0
    return math.exp(-(n // 2) * t * t / (2.0 * B * B))


def distfree_threshold(method: str, alpha: float, n: int, B: float) -> float:
    """Rejection threshold of the distribution-free test at level ``alpha``.

    ``method`` is ``"biased"``, ``"unbiased"`` or ``"linear"``. For the biased
    test the threshold applies to the kernel calibration error, i.e. to the
    square root of SKCE_b; for the other two it applies to the estimate itself.
    """
    if not 0 < alpha <= 1:
        raise BadParameter(f"alpha must lie in (0, 1], got {alpha}")
    _check_bound_args(n, B)
    root = math.sqrt(-2.0 * math.log(alpha))
    if method == "biased":
        return math.sqrt(B / n) * (1.0 + root)
    if method in ("unbiased", "linear"):
        return B / math.sqrt(n // 2) * root
    raise BadParameter(f"unknown method {method!r}")


def test_distfree(kernel: MatrixKernel, ds: LabeledDataset, estimator: str = "SKCE_uq", p=2, q=2) -> TestResult:
    n = len(ds)
    bound = uniform_bound(kernel, p, q, m=ds.class_count)
    params = {"n": n, "p": bound.p, "q": bound.q, "B_pq": bound.B_pq, "kernel": kernel.describe()}
    if estimator == "SKCE_b":
        t = skce_biased(kernel, ds).value
        return TestResult("DistFreeBiased", t, pvalue_bound_biased(t, n, bound.B_pq), params)
    if estimator == "SKCE_uq":
        t = skce_unbiased(kernel, ds).value
        return TestResult("DistFreeUnbiased", t, pvalue_bound_unbiased(t, n, bound.B_pq), params)
    if estimator == "SKCE_ul":
        t = skce_linear(kernel, ds).value
        return TestResult("DistFreeLinear", t, pvalue_bound_unbiased(t, n, bound.B_pq), params)
    raise BadParameter(f"unknown estimator {estimator!r}")


def test_linear_asymptotic(kernel: MatrixKernel, ds: LabeledDataset) -> TestResult:
    """Normal approximation for SKCE_ul: ``p = 1 - Phi(sqrt(n//2) * t / sigma)``."""
    n = len(ds)
    if n < 4:
        raise TooFewSamples(f"the asymptotic linear test needs at least 4 records, got {n}")
    terms = linear_terms(kernel, ds)
    t = float(np.sum(terms)) / terms.size
    sigma = sample_std(terms)
    params = {"n": n, "sigma": sigma, "kernel": kernel.describe()}
    if sigma == 0.0:
        warnings.warn("linear estimator terms have zero variance", DegenerateVarianceWarning, stacklevel=2)
        params["degenerate_variance"] = True
        return TestResult("AsymptoticLinear", t, 1.0 if t <= 0 else 0.0, params)
    z = math.sqrt(n // 2) * t / sigma
    return TestResult("AsymptoticLinear", t, normal_cdf(-z), params)


def _check_boot(n_boot):
    if int(n_boot) != n_boot or n_boot < 1:
        raise BadParameter(f"n_boot must be a positive integer, got {n_boot}")
    return int(n_boot)


def bootstrap_counts(n: int, n_boot: int, seed: _rng.SeedLike, tag: int) -> np.ndarray:
    """``(n_boot, n)`` multiplicities of resampling with replacement; round ``b`` uses stream ``(seed, tag, b)``."""
    W = np.empty((n_boot, n), dtype=np.float64)
    for b in range(n_boot):
        idx = _rng.stream(seed, tag, b).integers(0, n, size=n)
        W[b] = np.bincount(idx, minlength=n)
    return W


def quadratic_bootstrap_statistics(H: np.ndarray, n_boot: int, seed: _rng.SeedLike = 0) -> np.ndarray:
    """Bootstrap draws of the degenerate U-statistic for an h-matrix ``H``.

    Each draw is ``2/n * sum_{i<j} C[I_i, I_j]`` with ``C`` the doubly
    centered ``H``, computed from resampling multiplicities ``w`` as
    ``(w^T C w - sum_k w_k C_kk) / n``.
    """
    n = H.shape[0]
    row = H.mean(axis=1)
    C = H - row[:, None] - row[None, :] + row.mean()
    W = bootstrap_counts(n, n_boot, seed, _rng.BOOTSTRAP)
    return (np.einsum("bi,bi->b", W @ C, W) - W @ np.diag(C)) / n


def test_quadratic_bootstrap(kernel: MatrixKernel, ds: LabeledDataset, n_boot: int = DEFAULT_BOOT, seed: _rng.SeedLike = 0) -> TestResult:
    """Bootstrap approximation of the null distribution of ``n * SKCE_uq``."""
    n = len(ds)
    if n < 2:
        raise TooFewSamples(f"the bootstrap test needs at least 2 records, got {n}")
    n_boot = _check_boot(n_boot)
    H = h_matrix(kernel, ds)
    stat = n * float(np.triu(H, k=1).sum()) / math.comb(n, 2)
    T = quadratic_bootstrap_statistics(H, n_boot, seed)
    pvalue = (1 + int(np.count_nonzero(T >= stat))) / (n_boot + 1)
    params = {"n": n, "n_boot": n_boot, "seed": _rng.as_seed_tuple(seed), "kernel": kernel.describe()}
    return TestResult("AsymptoticQuadraticBootstrap", stat, pvalue, params)


def consistency_resampling_statistics(ds: LabeledDataset, binning: Binning, n_boot: int, seed: _rng.SeedLike = 0) -> np.ndarray:
    """ECE of ``n_boot`` datasets resampled under the calibration hypothesis.

    Each round draws ``n`` predictions with replacement and redraws every
    label from its own prediction.
    """
    n = len(ds)
    P = ds.predictions
    draws = []
    for b in range(n_boot):
        gen = _rng.stream(seed, _rng.RESAMPLING, b)
        idx = gen.integers(0, n, size=n)
        u = gen.random(n)
        draws.append((idx, categorical_from_uniform(P[idx], u)))
    if isinstance(binning, UniformBinning):
        # bins depend only on the prediction, so resampled rows keep their bin
        ids, nbins = bin_ids(P, binning)
        idx = np.concatenate([d[0] for d in draws])
        labels = np.concatenate([d[1] for d in draws])
        rounds = np.repeat(np.arange(n_boot), n)
        flat_ids = rounds * nbins + ids[idx]
        m = ds.class_count
        S = np.bincount((flat_ids[:, None] * m + np.arange(m)).ravel(), weights=P[idx].ravel(), minlength=n_boot * nbins * m)
        L = np.bincount(flat_ids * m + (labels - 1), minlength=n_boot * nbins * m)
        per_round = np.abs(S - L).reshape(n_boot, nbins * m).sum(axis=1)
        return np.minimum(1.0, 0.5 * per_round / n)
    out = np.empty(n_boot)
    for b, (idx, labels) in enumerate(draws):
        ids, nbins = bin_ids(P[idx], binning)
        out[b] = ece_from_ids(P[idx], labels, ids, nbins)
    return out


def test_consistency_resampling(ds: LabeledDataset, binning: Binning = UniformBinning(), n_boot: int = DEFAULT_BOOT, seed: _rng.SeedLike = 0) -> TestResult:
    if len(ds) == 0:
        raise EmptyDataset("consistency resampling needs at least one record")
    n_boot = _check_boot(n_boot)
    stat = ece_histogram(ds, binning).value
    ece_b = consistency_resampling_statistics(ds, binning, n_boot, seed)
    pvalue = (1 + int(np.count_nonzero(ece_b >= stat))) / (n_boot + 1)
    params = {"n": len(ds), "n_boot": n_boot, "seed": _rng.as_seed_tuple(seed), "binning": binning.describe()}
    return TestResult("ConsistencyResampling", stat, pvalue, params)


def run_method(tag: str, ds: LabeledDataset, kernel: MatrixKernel | None = None, binning: Binning = UniformBinning(),
               n_boot: int = DEFAULT_BOOT, seed: _rng.SeedLike = 0, p=2, q=2) -> TestResult:
    """Dispatch on a short method tag (``D_b``, ``D_uq``, ``D_ul``, ``A_l``, ``A_uq``, ``C``)."""
    if tag not in METHODS:
        raise BadParameter(f"unknown method {tag!r}; expected one of {sorted(METHODS)}")
    if tag == "C":
        return test_consistency_resampling(ds, binning, n_boot, seed)
    if kernel is None:
        raise BadParameter(f"method {tag} needs a kernel")
    if tag == "A_uq":
        return test_quadratic_bootstrap(kernel, ds, n_boot, seed)
    if tag == "A_l":
        return test_linear_asymptotic(kernel, ds)
    estimator = {"D_b": "SKCE_b", "D_uq": "SKCE_uq", "D_ul": "SKCE_ul"}[tag]
    return test_distfree(kernel, ds, estimator, p, q)


for _fn in (test_distfree, test_linear_asymptotic, test_quadratic_bootstrap, test_consistency_resampling):
    _fn.__test__ = False
