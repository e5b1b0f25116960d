"""Replicated synthetic experiments: estimate distributions and test errors.

Replicate ``r`` of model ``M<k>`` draws its dataset from the stream seeded by
``(seed, k, r)`` and uses the same tuple as seed for bootstrap tests, so the
output does not depend on the number of worker processes.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Sequence

import numpy as np

from . import calibration_tests as ct
from .errors import BadParameter
from .estimators import SKCE_ESTIMATORS, UNBIASED, Binning, UniformBinning, ece_histogram
from .kernels import parse_kernel
from .synth import PRESETS, preset, sample_dataset, theoretical_ece_tv

ESTIMATORS = ("ECE", "SKCE_b", "SKCE_uq", "SKCE_ul")
METHODS = ("A_l", "A_uq", "C", "D_b", "D_uq", "D_ul")
DEFAULT_ALPHAS = tuple(k / 100 for k in range(1, 26))


@dataclass(frozen=True)
class ExperimentConfig:
    models: tuple[str, ...] = PRESETS
    replications: int = 500
    n: int = 250
    m: int = 10
    dirichlet_a: float = 0.1
    estimators: tuple[str, ...] = ESTIMATORS
    methods: tuple[str, ...] = METHODS
    kernel: str = "exp(nu=median)"
    binning: Binning = field(default_factory=UniformBinning)
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    n_boot: int = ct.DEFAULT_BOOT
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise BadParameter("replications must be at least 1")
        if self.n < 2:
            raise BadParameter("n must be at least 2")
        if self.workers < 1:
            raise BadParameter("workers must be at least 1")
        for name in self.models:
            if name.upper() not in PRESETS:
                raise BadParameter(f"unknown model {name!r}; expected one of {PRESETS}")
        for name in self.estimators:
            if name not in ESTIMATORS:
                raise BadParameter(f"unknown estimator {name!r}; expected one of {ESTIMATORS}")
        for name in self.methods:
            if name not in METHODS:
                raise BadParameter(f"unknown method {name!r}; expected one of {METHODS}")
        if any(not 0 < a < 1 for a in self.alphas) or list(self.alphas) != sorted(self.alphas):
            raise BadParameter("significance levels must lie in (0, 1) and be sorted ascending")
        parse_kernel(self.kernel)

    def model_config(self, name: str):
        return preset(name, self.m, self.dirichlet_a)


def _model_id(name: str) -> int:
    return PRESETS.index(name.upper()) + 1


def _replicate_dataset(cfg: ExperimentConfig, model: str, rep: int):
    gcfg = cfg.model_config(model)
    seed = (cfg.seed, _model_id(model), rep)
    return gcfg, seed, sample_dataset(gcfg, cfg.n, seed)


def _errors_replicate(cfg: ExperimentConfig, model: str, rep: int) -> dict[str, float]:
    gcfg, _, ds = _replicate_dataset(cfg, model, rep)
    out = {}
    wanted = set(cfg.estimators)
    if wanted & set(SKCE_ESTIMATORS):
        wanted.add(UNBIASED)  # needed for the empirical ground truth
        kernel = parse_kernel(cfg.kernel).resolve(ds, gcfg.alpha)
        for name, fn in SKCE_ESTIMATORS.items():
            if name in wanted:
                out[name] = fn(kernel, ds).value
    if "ECE" in wanted:
        out["ECE"] = ece_histogram(ds, cfg.binning).value
    return out


def _pvalues_replicate(cfg: ExperimentConfig, model: str, rep: int) -> dict[str, float]:
    gcfg, seed, ds = _replicate_dataset(cfg, model, rep)
    kernel = None
    if any(m != "C" for m in cfg.methods):
        kernel = parse_kernel(cfg.kernel).resolve(ds, gcfg.alpha)
    return {
        tag: ct.run_method(tag, ds, kernel, cfg.binning, cfg.n_boot, seed).pvalue
        for tag in cfg.methods
    }


def _run(fn, cfg: ExperimentConfig) -> dict[str, list[dict[str, float]]]:
    results = {}
    for model in cfg.models:
        reps = range(cfg.replications)
        task = partial(fn, cfg, model)
        if cfg.workers == 1:
            results[model] = [task(r) for r in reps]
        else:
            chunk = max(1, cfg.replications // (4 * cfg.workers))
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                results[model] = list(pool.map(task, reps, chunksize=chunk))
    return results


def _fmt(x: float) -> str:
    return repr(float(x))


def run_errors(cfg: ExperimentConfig) -> tuple[list[list], list[list]]:
    """Rows of ``errors.csv`` and ``errors_summary.csv`` (without headers)."""
    results = _run(_errors_replicate, cfg)
    rows, summary = [], []
    for model in sorted(results, key=str.upper):
        reps = results[model]
        gcfg = cfg.model_config(model)
        skce_truth = float(np.mean([r[UNBIASED] for r in reps])) if UNBIASED in reps[0] else math.nan
        for est in sorted(cfg.estimators):
            values = np.array([r[est] for r in reps])
            rows.extend([model.upper(), est, i, _fmt(v)] for i, v in enumerate(values))
            se = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else math.nan
            truth = theoretical_ece_tv(gcfg) if est == "ECE" else skce_truth
            summary.append([model.upper(), est, _fmt(values.mean()), _fmt(se), _fmt(truth)])
    return rows, summary


def test_errors(pvalues: Sequence[float], alphas: Sequence[float], calibrated: bool) -> list[float]:
    """Empirical test error per level: rejection rate if calibrated, else acceptance rate."""
    p = np.asarray(pvalues, dtype=float)
    if calibrated:
        return [float(np.mean(p <= a)) for a in alphas]
    return [float(np.mean(p > a)) for a in alphas]


test_errors.__test__ = False


def run_pvalues(cfg: ExperimentConfig) -> tuple[list[list], list[list]]:
    """Rows of ``pvalues.csv`` and ``testerrors.csv`` (without headers)."""
    results = _run(_pvalues_replicate, cfg)
    rows, errs = [], []
    for model in sorted(results, key=str.upper):
        reps = results[model]
        calibrated = cfg.model_config(model).calibrated
        for method in sorted(cfg.methods):
            pv = [r[method] for r in reps]
            rows.extend([model.upper(), method, i, _fmt(v)] for i, v in enumerate(pv))
            for a, e in zip(cfg.alphas, test_errors(pv, cfg.alphas, calibrated)):
                errs.append([model.upper(), method, _fmt(a), _fmt(e)])
    return rows, errs


ERRORS_HEADER = ["model", "estimator", "replicate", "estimate"]
SUMMARY_HEADER = ["model", "estimator", "mean", "se", "true_value"]
PVALUES_HEADER = ["model", "method", "replicate", "pvalue"]
TESTERRORS_HEADER = ["model", "method", "alpha", "test_error"]


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
