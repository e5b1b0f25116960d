"""Dirichlet-Categorical generative models with known calibration error.

Predictions are drawn as ``g ~ Dir(alpha)``. With probability ``pi`` the label
comes from ``Categorical(beta)``, otherwise from ``Categorical(g)``. The model
is calibrated exactly when ``pi == 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng as _rng
from .core import LabeledDataset
from .errors import BadParameter
from .numerics import reg_inc_beta

PRESETS = ("M1", "M2", "M3")


@dataclass(frozen=True)
class GenerativeConfig:
    alpha: tuple[float, ...]
    pi: float = 0.0
    beta: tuple[float, ...] | None = None

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.alpha)
        if len(alpha) < 2:
            raise BadParameter("alpha needs at least 2 entries")
        if not all(a > 0 and math.isfinite(a) for a in alpha):
            raise BadParameter(f"alpha entries must be positive, got {alpha}")
        if not 0.0 <= self.pi <= 1.0:
            raise BadParameter(f"pi must lie in [0, 1], got {self.pi}")
        m = len(alpha)
        beta = tuple(float(b) for b in self.beta) if self.beta is not None else tuple([1.0 / m] * m)
        if len(beta) != m:
            raise BadParameter(f"beta has {len(beta)} entries, alpha has {m}")
        if min(beta) < 0 or abs(math.fsum(beta) - 1.0) > 1e-12:
            raise BadParameter(f"beta must be a probability vector, got {beta}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "pi", float(self.pi))

    @property
    def m(self) -> int:
        return len(self.alpha)

    @property
    def calibrated(self) -> bool:
        return self.pi == 0.0


def preset(name: str, m: int = 10, a: float = 0.1) -> GenerativeConfig:
    """M1 (calibrated), M2 (half the labels are class 1), M3 (uniform labels)."""
    if m < 2:
        raise BadParameter(f"m must be at least 2, got {m}")
    alpha = (a,) * m
    key = name.upper()
    if key == "M1":
        return GenerativeConfig(alpha, 0.0)
    if key == "M2":
        return GenerativeConfig(alpha, 0.5, (1.0,) + (0.0,) * (m - 1))
    if key == "M3":
        return GenerativeConfig(alpha, 1.0, (1.0 / m,) * m)
    raise BadParameter(f"unknown preset {name!r}; expected one of {PRESETS}")


def _log_gamma_variates(alpha: np.ndarray, size: int, gen: np.random.Generator) -> np.ndarray:
    # shapes below 1 are boosted: G(a) = G(a + 1) * U^(1/a), kept in log space
    small = alpha < 1.0
    shape = np.where(small, alpha + 1.0, alpha)
    logs = np.log(gen.standard_gamma(shape, size=(size, alpha.size)))
    if small.any():
        u = 1.0 - gen.random((size, alpha.size))  # (0, 1]
        logs = logs + np.where(small, np.log(u) / alpha, 0.0)
    return logs


def sample_dirichlet_batch(alpha: Sequence[float], n: int, gen: np.random.Generator) -> np.ndarray:
    """``(n, m)`` array of independent ``Dir(alpha)`` draws."""
    a = np.asarray(alpha, dtype=float)
    if a.ndim != 1 or a.size < 2 or not np.all(a > 0):
        raise BadParameter("alpha must be a vector of at least 2 positive entries")
    logs = _log_gamma_variates(a, n, gen)
    x = np.exp(logs - logs.max(axis=1, keepdims=True))
    return x / x.sum(axis=1, keepdims=True)


def sample_dirichlet(alpha: Sequence[float], gen: np.random.Generator) -> np.ndarray:
    return sample_dirichlet_batch(alpha, 1, gen)[0]


def categorical_from_uniform(P: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF labels (1-based) for rows of ``P`` and uniforms ``u`` in [0, 1)."""
    cs = np.cumsum(P, axis=1)
    cs /= cs[:, -1:]
    return (cs <= u[:, None]).sum(axis=1) + 1


def sample_categorical(p: Sequence[float], gen: np.random.Generator) -> int:
    P = np.asarray(p, dtype=float)[None, :]
    return int(categorical_from_uniform(P, np.array([gen.random()]))[0])


def sample_dataset(cfg: GenerativeConfig, n: int, seed: _rng.SeedLike = 0) -> LabeledDataset:
    """Draw ``n`` labeled predictions; bit-identical for a fixed seed."""
    if int(n) != n or n < 0:
        raise BadParameter(f"n must be a non-negative integer, got {n}")
    n = int(n)
    m = cfg.m
    if n == 0:
        return LabeledDataset(np.empty((0, m)), np.empty(0, dtype=np.int64), m)
    gen = _rng.stream(seed, _rng.DATA)
    P = sample_dirichlet_batch(cfg.alpha, n, gen)
    from_beta = gen.random(n) < cfg.pi
    u = gen.random(n)
    label_dist = np.where(from_beta[:, None], np.asarray(cfg.beta)[None, :], P)
    labels = categorical_from_uniform(label_dist, u)
    return LabeledDataset(P, labels, m)


def theoretical_ece_tv(cfg: GenerativeConfig) -> float:
    """Exact ECE of the model with respect to the total variation distance."""
    if cfg.pi == 0.0:
        return 0.0
    a0 = math.fsum(cfg.alpha)
    terms = []
    for ai, bi in zip(cfg.alpha, cfg.beta):
        rest = a0 - ai
        if not rest > 0:
            raise BadParameter("alpha_0 - alpha_i must be positive")
        terms.append(bi * reg_inc_beta(bi, ai, rest) - ai / a0 * reg_inc_beta(bi, ai + 1.0, rest))
    return cfg.pi * math.fsum(terms)
