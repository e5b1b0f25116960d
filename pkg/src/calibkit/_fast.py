"""Hot pairwise kernels behind the SKCE estimators and the median heuristic.

Every kernel exists twice: a numba version (``_nb_*``) and a pure numpy
version (``_np_*``). The public names at the bottom of the module are bound to
one of them according to :data:`calibkit._accel.USE_NUMBA`. Both versions take
the same arguments:

``P``
    ``(n, m)`` predictions.
``R``
    ``(n, m)`` residuals ``e_y - p``.
``V``
    ``(n, m)`` residuals multiplied by the term matrix (``R @ A``), or ``R``
    itself for identity terms.
``metric``, ``family``, ``nu``
    integer codes for the base distance and scalar kernel family, and the
    bandwidth.

Reductions over pairs are accumulated per row and then summed in index order,
so results do not depend on the number of numba threads.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit, prange

METRIC_TV = 0
METRIC_EUCLIDEAN = 1
FAMILY_EXPONENTIAL = 0
FAMILY_GAUSSIAN = 1


# --------------------------------------------------------------------------
# numba
# --------------------------------------------------------------------------


@njit(cache=True)
def _nb_dist(P, i, j, metric):
    s = 0.0
    if metric == METRIC_TV:
        for c in range(P.shape[1]):
            s += abs(P[i, c] - P[j, c])
        return 0.5 * s
    for c in range(P.shape[1]):
        d = P[i, c] - P[j, c]
        s += d * d
    return math.sqrt(s)


@njit(cache=True)
def _nb_phi(d, family, nu):
    if family == FAMILY_EXPONENTIAL:
        return math.exp(-d / nu)
    x = d / nu
    return math.exp(-x * x)


@njit(cache=True)
def _nb_dot(R, i, V, j):
    s = 0.0
    for c in range(R.shape[1]):
        s += R[i, c] * V[j, c]
    return s


@njit(parallel=True, cache=True)
def _nb_pair_row_sums(P, R, V, metric, family, nu):
    n = P.shape[0]
    out = np.zeros(n)
    for i in prange(n):
        acc = 0.0
        for j in range(i + 1, n):
            acc += _nb_phi(_nb_dist(P, i, j, metric), family, nu) * _nb_dot(R, i, V, j)
        out[i] = acc
    return out


@njit(parallel=True, cache=True)
def _nb_h_matrix(P, R, V, metric, family, nu):
    n = P.shape[0]
    H = np.empty((n, n))
    for i in prange(n):
        H[i, i] = _nb_dot(R, i, V, i)
        for j in range(i + 1, n):
            H[i, j] = _nb_phi(_nb_dist(P, i, j, metric), family, nu) * _nb_dot(R, i, V, j)
    for i in range(n):
        for j in range(i + 1, n):
            H[j, i] = H[i, j]
    return H


@njit(cache=True)
def _nb_linear_terms(P, R, V, metric, family, nu):
    k = P.shape[0] // 2
    out = np.empty(k)
    for i in range(k):
        a = 2 * i
        b = a + 1
        out[i] = _nb_phi(_nb_dist(P, a, b, metric), family, nu) * _nb_dot(R, a, V, b)
    return out


@njit(cache=True)
def _nb_condensed_distances(P, metric):
    n = P.shape[0]
    out = np.empty(n * (n - 1) // 2)
    pos = 0
    for i in range(n):
        for j in range(i + 1, n):
            out[pos] = _nb_dist(P, i, j, metric)
            pos += 1
    return out


# --------------------------------------------------------------------------
# numpy
# --------------------------------------------------------------------------

_BLOCK_ELEMENTS = 1 << 22


def _np_dist(A, B, metric):
    diff = A[:, None, :] - B[None, :, :]
    if metric == METRIC_TV:
        return 0.5 * np.abs(diff).sum(axis=-1)
    return np.sqrt((diff * diff).sum(axis=-1))


def _np_phi(d, family, nu):
    if family == FAMILY_EXPONENTIAL:
        return np.exp(-d / nu)
    x = d / nu
    return np.exp(-x * x)


def _block_rows(n, m):
    return max(1, _BLOCK_ELEMENTS // max(1, n * m))


def _np_pair_row_sums(P, R, V, metric, family, nu):
    n, m = P.shape
    out = np.zeros(n)
    step = _block_rows(n, m)
    for a in range(0, n, step):
        b = min(n, a + step)
        block = _np_phi(_np_dist(P[a:b], P, metric), family, nu) * (R[a:b] @ V.T)
        # keep only j > i
        out[a:b] = np.triu(block, k=a + 1).sum(axis=1)
    return out


def _np_h_matrix(P, R, V, metric, family, nu):
    n, m = P.shape
    H = np.empty((n, n))
    step = _block_rows(n, m)
    for a in range(0, n, step):
        b = min(n, a + step)
        H[a:b] = _np_phi(_np_dist(P[a:b], P, metric), family, nu) * (R[a:b] @ V.T)
    upper = np.triu(H, k=1)
    H = upper + upper.T + np.diag(np.einsum("ij,ij->i", R, V))
    return H


def _np_linear_terms(P, R, V, metric, family, nu):
    k = P.shape[0] // 2
    a = slice(0, 2 * k, 2)
    b = slice(1, 2 * k, 2)
    diff = P[a] - P[b]
    if metric == METRIC_TV:
        d = 0.5 * np.abs(diff).sum(axis=1)
    else:
        d = np.sqrt((diff * diff).sum(axis=1))
    return _np_phi(d, family, nu) * np.einsum("ij,ij->i", R[a], V[b])


def _np_condensed_distances(P, metric):
    n, m = P.shape
    parts = []
    step = _block_rows(n, m)
    for a in range(0, n, step):
        b = min(n, a + step)
        D = _np_dist(P[a:b], P, metric)
        rows, cols = np.triu_indices(b - a, k=1, m=n - a)
        parts.append(D[:, a:][rows, cols])
    if not parts:
        return np.empty(0)
    return np.concatenate(parts)


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

NUMBA_KERNELS = {
    "pair_row_sums": _nb_pair_row_sums,
    "h_matrix": _nb_h_matrix,
    "linear_terms": _nb_linear_terms,
    "condensed_distances": _nb_condensed_distances,
}

NUMPY_KERNELS = {
    "pair_row_sums": _np_pair_row_sums,
    "h_matrix": _np_h_matrix,
    "linear_terms": _np_linear_terms,
    "condensed_distances": _np_condensed_distances,
}

_ACTIVE = NUMBA_KERNELS if USE_NUMBA else NUMPY_KERNELS

pair_row_sums = _ACTIVE["pair_row_sums"]
h_matrix = _ACTIVE["h_matrix"]
linear_terms = _ACTIVE["linear_terms"]
condensed_distances = _ACTIVE["condensed_distances"]
