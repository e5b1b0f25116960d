"""Compare the numba and numpy paths of the pairwise kernels.

    python3 benchmarks/bench_backends.py --sizes 500,1000,2000 --repeats 5

Both paths are called directly from ``calibkit._fast``, so one process
measures both regardless of ``CALIBKIT_DISABLE_NUMBA``. Reported times are
the best of ``--repeats`` runs after one warm-up call (which also triggers
numba compilation).
"""
import argparse
import time

import numpy as np

from calibkit import _accel, _fast
from calibkit.synth import preset, sample_dataset


def best_of(fn, repeats):
    fn()
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="500,1000,2000", help="comma-separated dataset sizes")
    parser.add_argument("--linear-sizes", default="10000,100000")
    parser.add_argument("--m", type=int, default=10)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if not _accel.HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    cfg = preset("M3", args.m)
    metric, family, nu = _fast.METRIC_TV, _fast.FAMILY_EXPONENTIAL, 0.5

    def case(name, n):
        ds = sample_dataset(cfg, n, seed=args.seed)
        P = np.ascontiguousarray(ds.predictions)
        R = np.ascontiguousarray(ds.residuals)
        if name == "condensed_distances":
            call = lambda kernels: kernels[name](P, metric)
        else:
            call = lambda kernels: kernels[name](P, R, R, metric, family, nu)
        t_nb = best_of(lambda: call(_fast.NUMBA_KERNELS), args.repeats)
        t_np = best_of(lambda: call(_fast.NUMPY_KERNELS), args.repeats)
        diff = float(np.max(np.abs(call(_fast.NUMBA_KERNELS) - call(_fast.NUMPY_KERNELS)), initial=0.0))
        print(f"{name:20s} {n:>8d} {t_nb * 1e3:>10.2f} {t_np * 1e3:>10.2f} {t_np / t_nb:>8.1f} {diff:>10.1e}")

    print(f"m={args.m}, best of {args.repeats}, numba threading layer: {_accel.numba.config.THREADING_LAYER}")
    print(f"{'kernel':20s} {'n':>8s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s} {'max diff':>10s}")
    for n in (int(s) for s in args.sizes.split(",")):
        for name in ("pair_row_sums", "h_matrix", "condensed_distances"):
            case(name, n)
    for n in (int(s) for s in args.linear_sizes.split(",")):
        case("linear_terms", n)


if __name__ == "__main__":
    main()
