"""Command-line interface.

::

    calibkit estimate data.csv [--skce-b] [--skce-uq] [--skce-ul] [--ece] [--mmce]
    calibkit test data.csv --method {D_b,D_uq,D_ul,A_l,A_uq,C} [--alpha 0.05]
    calibkit synth {M1,M2,M3} --n 250 --seed 1 [--out data.csv]
    calibkit experiment errors --out results/
    calibkit experiment pvalues --out results/

Exit codes: 0 success, 1 rejection with ``--fail-on-reject``, 2 input error.
Seeds default to ``$CALIBKIT_SEED`` and then to 0.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

from . import calibration_tests as ct
from . import experiments as ex
from .core import load_dataset_csv, write_dataset_csv
from .errors import BadParameter, CalibkitError, DegenerateBandwidth
from .estimators import SKCE_ESTIMATORS, ece_histogram, max_lens, mmce_squared, parse_binning
from .kernels import parse_kernel
from .rng import default_seed
from .synth import PRESETS, GenerativeConfig, preset, sample_dataset, theoretical_ece_tv

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_INPUT = 2

KERNEL_HELP = (
    "kernel, e.g. 'exp(nu=median)', 'exp(nu=0.3,dist=euclidean)*identity', "
    "'gauss(nu=meantv)', terms joined by '+' (default: exp(nu=median))"
)


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise BadParameter(f"expected comma-separated numbers, got {text!r}") from None


def _alpha_grid(text: str) -> tuple[float, ...]:
    if ":" in text:
        try:
            start, stop, step = (float(x) for x in text.split(":"))
        except ValueError:
            raise BadParameter(f"expected start:stop:step, got {text!r}") from None
        if step <= 0:
            raise BadParameter("grid step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 12) for i in range(count))
    return tuple(_float_list(text))


def _read_dataset(path: str):
    if path == "-":
        return load_dataset_csv(sys.stdin)
    with open(path, newline="", encoding="utf-8") as fh:
        return load_dataset_csv(fh)


def _dirichlet_alpha(args, m):
    if args.dirichlet_alpha is None:
        return None
    values = _float_list(args.dirichlet_alpha)
    return values * m if len(values) == 1 else values


def _emit(rows, header, out):
    if out:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)


def cmd_estimate(args) -> int:
    ds = _read_dataset(args.dataset)
    selected = [name for name, flag in (("SKCE_b", args.skce_b), ("SKCE_uq", args.skce_uq),
                                         ("SKCE_ul", args.skce_ul), ("ECE", args.ece), ("MMCE2", args.mmce)) if flag]
    if not selected:
        selected = ["SKCE_b", "SKCE_uq", "SKCE_ul", "ECE"]
    recipe = parse_kernel(args.kernel)
    kernel = None
    rows = []
    for name in selected:
        if name in SKCE_ESTIMATORS:
            if kernel is None:
                kernel = recipe.resolve(ds, _dirichlet_alpha(args, ds.class_count))
            est = SKCE_ESTIMATORS[name](kernel, ds)
            rows.append([name, repr(est.value), est.n, est.kernel])
        elif name == "ECE":
            binning = parse_binning(args.bins)
            est = ece_histogram(ds, binning)
            rows.append([name, repr(est.value), len(ds), f"{binning.describe()};occupied={est.occupied_bins}"])
        else:
            if len(recipe.terms) != 1:
                raise BadParameter("--mmce needs a single-term kernel")
            scalar = recipe.resolve(max_lens(ds), None).terms[0].scalar
            rows.append([name, repr(mmce_squared(scalar, ds)), len(ds), scalar.describe()])
    _emit(rows, ["estimator", "value", "n", "descriptor"], args.out)
    return EXIT_OK


def _format_params(params: dict) -> str:
    def fmt(v):
        if isinstance(v, float):
            return repr(v)
        if isinstance(v, tuple):
            return "/".join(str(x) for x in v)
        return str(v)

    return ";".join(f"{k}={fmt(v)}" for k, v in params.items())


def cmd_test(args) -> int:
    ds = _read_dataset(args.dataset)
    seed = default_seed(args.seed)
    kernel = None
    if args.method != "C":
        kernel = parse_kernel(args.kernel).resolve(ds, _dirichlet_alpha(args, ds.class_count))
    result = ct.run_method(args.method, ds, kernel, parse_binning(args.bins), args.boot, seed, args.p, args.q)
    reject = result.reject(args.alpha)
    rows = [[args.method, repr(result.statistic), repr(result.pvalue), repr(args.alpha),
             str(reject).lower(), _format_params(result.params)]]
    _emit(rows, ["method", "statistic", "pvalue", "alpha", "reject", "params"], args.out)
    return EXIT_REJECT if (reject and args.fail_on_reject) else EXIT_OK


def _synth_config(args) -> GenerativeConfig:
    if args.preset:
        if args.alpha or args.pi is not None or args.beta:
            raise BadParameter("a preset cannot be combined with --alpha/--pi/--beta")
        return preset(args.preset, args.m)
    if not args.alpha:
        raise BadParameter("give a preset (M1, M2, M3) or --alpha")
    alpha = _float_list(args.alpha)
    if len(alpha) == 1:
        alpha = alpha * args.m
    beta = _float_list(args.beta) if args.beta else None
    return GenerativeConfig(tuple(alpha), args.pi if args.pi is not None else 0.0, beta and tuple(beta))


def cmd_synth(args) -> int:
    cfg = _synth_config(args)
    ds = sample_dataset(cfg, args.n, default_seed(args.seed))
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            write_dataset_csv(ds, fh)
    else:
        write_dataset_csv(ds, sys.stdout)
    print(f"theoretical_ece_tv={theoretical_ece_tv(cfg)!r}", file=sys.stderr)
    return EXIT_OK


def _experiment_config(args) -> ex.ExperimentConfig:
    common = dict(
        models=tuple(m.strip().upper() for m in args.models.split(",") if m.strip()),
        replications=args.R,
        n=args.n,
        m=args.m,
        dirichlet_a=args.a,
        kernel=args.kernel,
        binning=parse_binning(args.bins),
        seed=default_seed(args.seed),
        workers=args.workers,
    )
    if args.experiment == "errors":
        ests = tuple(e.strip() for e in args.estimators.split(",") if e.strip())
        return ex.ExperimentConfig(estimators=ests, **common)
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    return ex.ExperimentConfig(methods=methods, alphas=_alpha_grid(args.alphas), n_boot=args.boot, **common)


def cmd_experiment(args) -> int:
    cfg = _experiment_config(args)
    out = Path(args.out)
    if args.experiment == "errors":
        rows, summary = ex.run_errors(cfg)
        ex.write_csv(out / "errors.csv", ex.ERRORS_HEADER, rows)
        ex.write_csv(out / "errors_summary.csv", ex.SUMMARY_HEADER, summary)
    else:
        rows, errs = ex.run_pvalues(cfg)
        ex.write_csv(out / "pvalues.csv", ex.PVALUES_HEADER, rows)
        ex.write_csv(out / "testerrors.csv", ex.TESTERRORS_HEADER, errs)
    print(f"wrote {out}", file=sys.stderr)
    return EXIT_OK


def _add_kernel_args(p):
    p.add_argument("--kernel", default="exp(nu=median)", help=KERNEL_HELP)
    p.add_argument("--bins", default="uniform:10", help="ECE binning: uniform:<bins per class> or median:<min per bin>")
    p.add_argument("--dirichlet-alpha", default=None,
                   help="Dirichlet parameter of the predictions (needed for nu=meantv); one value or a comma list")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="calibkit", description="Calibration errors and calibration tests")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate calibration errors of a dataset CSV")
    p.add_argument("dataset", help="CSV with header p1,...,pm,y ('-' for stdin)")
    p.add_argument("--skce-b", action="store_true")
    p.add_argument("--skce-uq", action="store_true")
    p.add_argument("--skce-ul", action="store_true")
    p.add_argument("--ece", action="store_true")
    p.add_argument("--mmce", action="store_true", help="squared MMCE of the max-confidence predictions")
    _add_kernel_args(p)
    p.add_argument("--out", help="also write the result table to this CSV")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("test", help="run a calibration test on a dataset CSV")
    p.add_argument("dataset")
    p.add_argument("--method", required=True, choices=sorted(ct.METHODS))
    _add_kernel_args(p)
    p.add_argument("--alpha", type=float, default=0.05, help="significance level")
    p.add_argument("--boot", type=int, default=ct.DEFAULT_BOOT, help="bootstrap rounds for A_uq and C")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--p", default="2", help="norm index p of the uniform kernel bound (1, 2, inf)")
    p.add_argument("--q", default="2", help="norm index q of the uniform kernel bound (1, 2, inf)")
    p.add_argument("--fail-on-reject", action="store_true", help="exit with code 1 when the test rejects")
    p.add_argument("--out")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("synth", help="sample a synthetic dataset")
    p.add_argument("preset", nargs="?", choices=PRESETS)
    p.add_argument("--alpha", help="Dirichlet parameter: one value (with --m) or a comma list")
    p.add_argument("--pi", type=float, default=None, help="mixture weight of the label distribution beta")
    p.add_argument("--beta", help="comma list, label distribution used with probability pi (default uniform)")
    p.add_argument("--n", type=int, default=250)
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("experiment", help="replicated synthetic experiments")
    esub = p.add_subparsers(dest="experiment", required=True)
    for name in ("errors", "pvalues"):
        e = esub.add_parser(name)
        e.add_argument("--models", default="M1,M2,M3")
        e.add_argument("--R", type=int, default=500, help="replications per model")
        e.add_argument("--n", type=int, default=250)
        e.add_argument("--m", type=int, default=10)
        e.add_argument("--a", type=float, default=0.1, help="symmetric Dirichlet parameter of the predictions")
        e.add_argument("--kernel", default="exp(nu=median)", help=KERNEL_HELP)
        e.add_argument("--bins", default="uniform:10")
        e.add_argument("--seed", type=int, default=None)
        e.add_argument("--workers", type=int, default=1)
        e.add_argument("--out", required=True, help="output directory")
        if name == "errors":
            e.add_argument("--estimators", default=",".join(ex.ESTIMATORS))
        else:
            e.add_argument("--methods", default=",".join(ex.METHODS))
            e.add_argument("--alphas", default="0.01:0.25:0.01", help="start:stop:step or comma list")
            e.add_argument("--boot", type=int, default=ct.DEFAULT_BOOT)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DegenerateBandwidth as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("hint: pass --kernel 'exp(nu=meantv)' with --dirichlet-alpha, or a fixed nu", file=sys.stderr)
    except (CalibkitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
