"""Calibration errors and calibration tests for multi-class probabilistic classifiers."""
from ._accel import BACKEND
from .calibration_tests import (
    TestResult,
    distfree_threshold,
    pvalue_bound_biased,
    pvalue_bound_unbiased,
    run_method,
    test_consistency_resampling,
    test_distfree,
    test_linear_asymptotic,
    test_quadratic_bootstrap,
)
from .core import LabeledDataset, PredictionRecord, load_dataset_csv, residual, validate_dataset, write_dataset_csv
from .errors import *  # noqa: F401,F403
from .estimators import (
    EceEstimate,
    MedianSplitBinning,
    SkceEstimate,
    UniformBinning,
    ece_histogram,
    h_term,
    max_lens,
    mmce_squared,
    partition,
    skce_biased,
    skce_linear,
    skce_unbiased,
)
from .kernels import (
    KernelBound,
    KernelTerm,
    MatrixKernel,
    ScalarKernel,
    eval_scalar,
    mean_tv_bandwidth,
    median_heuristic,
    parse_kernel,
    quadform,
    tv_distance,
    uniform_bound,
)
from .synth import GenerativeConfig, preset, sample_dataset, theoretical_ece_tv

__version__ = "0.1.0"
