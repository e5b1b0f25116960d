"""Backend switch for the hot kernels.

Numba is used when importable unless ``CALIBKIT_DISABLE_NUMBA`` is set to a
truthy value, in which case every kernel runs on its pure-numpy path.
"""
import os

_DISABLED = os.environ.get("CALIBKIT_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

# workqueue is always available and avoids TBB version warnings
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not _DISABLED
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, otherwise the identity decorator."""
    if HAS_NUMBA:
        return numba.njit(*args, **kwargs)

    def wrap(fn):
        return fn

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrap


if HAS_NUMBA:
    prange = numba.prange
else:  # pragma: no cover
    prange = range
