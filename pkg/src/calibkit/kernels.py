"""Scalar and matrix-valued kernels on the probability simplex.

A matrix-valued kernel is a finite sum ``k(s, t) = sum_i w_i * phi_i(s, t) * A_i``
of scalar kernels ``phi_i`` times symmetric PSD matrices ``A_i`` (the identity
when no matrix is given). Scalar kernels are exponential,
``exp(-d(s, t) / nu)``, or Gaussian, ``exp(-d(s, t)**2 / nu**2)``, over the
total variation or Euclidean distance. Both satisfy ``sup |phi| = phi(s, s) = 1``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _fast
from .core import LabeledDataset
from .errors import (
    BadParameter,
    DegenerateBandwidth,
    DimensionMismatch,
    TooFewSamples,
    UnsupportedKernel,
)
from .numerics import log_beta

FAMILIES = {"exponential": _fast.FAMILY_EXPONENTIAL, "gaussian": _fast.FAMILY_GAUSSIAN}
DISTANCES = {"tv": _fast.METRIC_TV, "euclidean": _fast.METRIC_EUCLIDEAN}

PSD_TOL = -1e-10


@dataclass(frozen=True)
class ScalarKernel:
    family: str = "exponential"
    bandwidth: float = 1.0
    distance: str = "tv"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise BadParameter(f"unknown kernel family {self.family!r}; expected one of {sorted(FAMILIES)}")
        if self.distance not in DISTANCES:
            raise BadParameter(f"unknown distance {self.distance!r}; expected one of {sorted(DISTANCES)}")
        if not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise BadParameter(f"bandwidth must be positive and finite, got {self.bandwidth}")

    @property
    def codes(self) -> tuple[int, int, float]:
        return DISTANCES[self.distance], FAMILIES[self.family], float(self.bandwidth)

    def describe(self) -> str:
        name = "exp" if self.family == "exponential" else "gauss"
        return f"{name}(nu={self.bandwidth!r},dist={self.distance})"


@dataclass(frozen=True, eq=False)
class KernelTerm:
    """One summand ``weight * phi(s, t) * A``; ``matrix=None`` means the identity."""

    scalar: ScalarKernel
    matrix: Optional[np.ndarray] = None
    weight: float = 1.0

    def __post_init__(self):
        if not (self.weight >= 0 and math.isfinite(self.weight)):
            raise BadParameter(f"term weight must be finite and non-negative, got {self.weight}")
        if self.matrix is not None:
            A = np.array(self.matrix, dtype=float)
            if A.ndim != 2 or A.shape[0] != A.shape[1]:
                raise DimensionMismatch(f"term matrix must be square, got shape {A.shape}")
            if not np.allclose(A, A.T, rtol=0.0, atol=1e-12):
                raise BadParameter("term matrix must be symmetric")
            if np.linalg.eigvalsh(A).min() < PSD_TOL:
                raise BadParameter("term matrix must be positive semi-definite")
            A.setflags(write=False)
            object.__setattr__(self, "matrix", A)

    @property
    def is_identity(self) -> bool:
        return self.matrix is None

    def describe(self) -> str:
        w = "" if self.weight == 1.0 else f"{self.weight!r}*"
        mat = "identity" if self.matrix is None else f"matrix{self.matrix.shape[0]}x{self.matrix.shape[1]}"
        return f"{w}{self.scalar.describe()}*{mat}"


@dataclass(frozen=True, eq=False)
class MatrixKernel:
    terms: tuple[KernelTerm, ...]
    dim: Optional[int] = field(default=None)

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise BadParameter("a matrix kernel needs at least one term")
        dims = {t.matrix.shape[0] for t in terms if t.matrix is not None}
        if self.dim is not None:
            dims.add(int(self.dim))
        if len(dims) > 1:
            raise DimensionMismatch(f"kernel terms disagree on dimension: {sorted(dims)}")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "dim", dims.pop() if dims else None)

    @classmethod
    def identity(cls, scalar: ScalarKernel, weight: float = 1.0, dim: Optional[int] = None) -> "MatrixKernel":
        """``weight * scalar * I``, the construction used throughout the experiments."""
        return cls((KernelTerm(scalar, None, weight),), dim)

    def check_dim(self, m: int) -> None:
        if self.dim is not None and self.dim != m:
            raise DimensionMismatch(f"kernel has dimension {self.dim}, data has {m} classes")

    def matrix(self, s, t) -> np.ndarray:
        """Materialize ``k(s, t)`` as an ``(m, m)`` array."""
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        m = s.shape[0]
        self.check_dim(m)
        out = np.zeros((m, m))
        for term in self.terms:
            A = np.eye(m) if term.matrix is None else term.matrix
            out += term.weight * eval_scalar(term.scalar, s, t) * A
        return out

    def describe(self) -> str:
        return "+".join(t.describe() for t in self.terms)


@dataclass(frozen=True)
class KernelBound:
    p: float
    q: float
    K_pq: float
    B_pq: float


def _check_pair(s, t):
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if s.shape != t.shape or s.ndim != 1:
        raise DimensionMismatch(f"vectors have shapes {s.shape} and {t.shape}")
    return s, t


def tv_distance(s, t) -> float:
    """Total variation distance, half the L1 distance."""
    s, t = _check_pair(s, t)
    return 0.5 * float(np.abs(s - t).sum())


def euclidean_distance(s, t) -> float:
    s, t = _check_pair(s, t)
    return float(np.sqrt(((s - t) ** 2).sum()))


def distance(name: str, s, t) -> float:
    if name == "tv":
        return tv_distance(s, t)
    if name == "euclidean":
        return euclidean_distance(s, t)
    raise BadParameter(f"unknown distance {name!r}")


def eval_scalar(spec: ScalarKernel, s, t) -> float:
    d = distance(spec.distance, s, t)
    if spec.family == "exponential":
        return math.exp(-d / spec.bandwidth)
    x = d / spec.bandwidth
    return math.exp(-x * x)


def quadform(spec: MatrixKernel, u, s, t, v) -> float:
    """``u^T k(s, t) v`` without forming ``k(s, t)`` for identity terms."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    s, t = _check_pair(s, t)
    if u.shape != s.shape or v.shape != s.shape:
        raise DimensionMismatch("u, v, s and t must share one dimension")
    spec.check_dim(s.shape[0])
    total = 0.0
    for term in spec.terms:
        inner = float(u @ v) if term.matrix is None else float(u @ term.matrix @ v)
        total += term.weight * eval_scalar(term.scalar, s, t) * inner
    return total


def pairwise_distances(ds: LabeledDataset, distance: str = "tv") -> np.ndarray:
    """Condensed vector of distances between predictions ``i < j``."""
    if distance not in DISTANCES:
        raise BadParameter(f"unknown distance {distance!r}")
    return _fast.condensed_distances(ds.predictions, DISTANCES[distance])


def median_heuristic(ds: LabeledDataset, distance: str = "tv") -> float:
    """Median of all pairwise prediction distances."""
    n = len(ds)
    if n < 2:
        raise TooFewSamples(f"median heuristic needs at least 2 predictions, got {n}")
    nu = float(np.median(pairwise_distances(ds, distance)))
    if nu <= 0.0:
        raise DegenerateBandwidth(
            "median pairwise distance is 0; use an explicit bandwidth or the mean TV distance (nu=meantv)"
        )
    return nu


def mean_tv_bandwidth(alpha: Sequence[float]) -> float:
    """Expected TV distance between two independent ``Dir(alpha)`` draws."""
    a = np.asarray(alpha, dtype=float)
    if a.ndim != 1 or a.size < 2:
        raise BadParameter("alpha needs at least 2 entries")
    if not np.all(a > 0) or not np.all(np.isfinite(a)):
        raise BadParameter("alpha entries must be positive and finite")
    a0 = float(a.sum())
    head = math.log(2.0) + log_beta(a0, a0) - math.log(a0)
    total = 0.0
    for ai in a.tolist():
        rest = a0 - ai
        if not rest > 0:
            raise BadParameter("alpha_0 - alpha_i must be positive")
        total += math.exp(head - log_beta(ai, ai) - log_beta(rest, rest))
    return total


def _norm_index(p) -> float:
    if isinstance(p, str):
        p = p.strip().lower()
        if p in {"inf", "infinity", "∞"}:
            return math.inf
        p = float(p)
    p = float(p)
    if p not in (1.0, 2.0, math.inf):
        raise BadParameter(f"norm index must be 1, 2 or inf, got {p}")
    return p


def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


def _dual(p: float) -> float:
    if p == 1.0:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _operator_norm(A: np.ndarray, p: float, q: float) -> Optional[float]:
    # ||A||_{p;q} = sup ||Ax||_q / ||x||_p, where a closed form exists
    if p == q == 2.0:
        return float(np.abs(np.linalg.eigvalsh(A)).max())
    if p == 1.0:
        return float(np.linalg.norm(A, ord=q, axis=0).max())
    if math.isinf(q):
        return float(np.linalg.norm(A, ord=_dual(p), axis=1).max())
    return None


def uniform_bound(spec: MatrixKernel, p=2, q=2, m: Optional[int] = None, operator_norm: Optional[float] = None) -> KernelBound:
    """Uniform bound ``K_pq = sup ||k(s, t)||_{p;q}`` and ``B_pq = 2^(1+1/p-1/q) K_pq``.

    Sums of weighted scalar-times-identity terms are handled in closed form
    (``m`` is required when ``p > q``). A single term with a general matrix
    is handled when its operator norm has a closed form, or when
    ``operator_norm`` is supplied.
    """
    p = _norm_index(p)
    q = _norm_index(q)
    factor = 2.0 ** (1.0 + _inv(p) - _inv(q))
    if all(t.is_identity for t in spec.terms):
        phi = sum(t.weight for t in spec.terms)
        if p <= q:
            K = phi
        else:
            dim = m if m is not None else spec.dim
            if dim is None:
                raise BadParameter("class count m is required for p > q")
            K = float(dim) ** (_inv(q) - _inv(p)) * phi
    elif len(spec.terms) == 1:
        term = spec.terms[0]
        norm = operator_norm if operator_norm is not None else _operator_norm(term.matrix, p, q)
        if norm is None:
            raise UnsupportedKernel(f"no closed form for ||A||_(p={p};q={q}); pass operator_norm")
        K = term.weight * float(norm)
    else:
        raise UnsupportedKernel("uniform bound needs identity terms or a single matrix term")
    return KernelBound(p, q, K, factor * K)


# --------------------------------------------------------------------------
# textual kernel specifications
# --------------------------------------------------------------------------

_TERM_RE = re.compile(
    r"""^\s*(?:(?P<weight>[0-9.eE+-]+)\s*\*\s*)?
        (?P<family>exp|gauss)\s*\(\s*(?P<args>[^)]*)\)
        (?:\s*\*\s*identity)?\s*$""",
    re.VERBOSE,
)


@dataclass(frozen=True)
class KernelRecipe:
    """Parsed kernel text whose bandwidths may still depend on the data.

    Grammar, terms joined by ``+``::

        [weight*]exp(nu=<float>|median|meantv[,dist=tv|euclidean])[*identity]
        [weight*]gauss(nu=...[,dist=...])[*identity]
    """

    terms: tuple[tuple[str, str, str, float], ...]  # (family, nu, distance, weight)

    def resolve(self, ds: Optional[LabeledDataset] = None, dirichlet_alpha: Optional[Sequence[float]] = None) -> MatrixKernel:
        resolved = []
        for family, nu, dist, weight in self.terms:
            if nu == "median":
                if ds is None:
                    raise BadParameter("nu=median needs a dataset")
                bw = median_heuristic(ds, dist)
            elif nu == "meantv":
                if dirichlet_alpha is None:
                    raise BadParameter("nu=meantv needs the Dirichlet parameter of the predictions")
                bw = mean_tv_bandwidth(dirichlet_alpha)
            else:
                bw = float(nu)
            resolved.append(KernelTerm(ScalarKernel(family, bw, dist), None, weight))
        return MatrixKernel(tuple(resolved))

    @property
    def needs_data(self) -> bool:
        return any(nu == "median" for _, nu, _, _ in self.terms)


def parse_kernel(text: str) -> KernelRecipe:
    terms = []
    for chunk in text.split("+"):
        match = _TERM_RE.match(chunk)
        if not match:
            raise BadParameter(f"cannot parse kernel term {chunk.strip()!r}")
        family = "exponential" if match["family"] == "exp" else "gaussian"
        weight = float(match["weight"]) if match["weight"] else 1.0
        opts = {}
        for item in filter(None, (a.strip() for a in match["args"].split(","))):
            key, sep, value = item.partition("=")
            if not sep:
                raise BadParameter(f"kernel argument {item!r} must be key=value")
            opts[key.strip()] = value.strip()
        unknown = set(opts) - {"nu", "dist"}
        if unknown:
            raise BadParameter(f"unknown kernel arguments {sorted(unknown)}")
        nu = opts.get("nu", "median")
        if nu not in ("median", "meantv"):
            try:
                if not float(nu) > 0:
                    raise ValueError
            except ValueError:
                raise BadParameter(f"nu must be a positive number, 'median' or 'meantv', got {nu!r}") from None
        dist = opts.get("dist", "tv")
        if dist not in DISTANCES:
            raise BadParameter(f"unknown distance {dist!r}")
        if not weight >= 0:
            raise BadParameter(f"term weight must be non-negative, got {weight}")
        terms.append((family, nu, dist, weight))
    return KernelRecipe(tuple(terms))
