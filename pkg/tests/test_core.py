import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calibkit.core import (
    LabeledDataset,
    PredictionRecord,
    load_dataset_csv,
    residual,
    simplex_vector,
    validate_dataset,
    write_dataset_csv,
)
from calibkit.errors import BadLabel, DimensionMismatch, EmptyInput, NotOnSimplex, ParseError
from calibkit.synth import preset, sample_dataset


class TestValidateDataset:
    def test_one_hot(self):
        ds = validate_dataset([((1, 0), 1)], m=2, tol=1e-6)
        assert len(ds) == 1
        np.testing.assert_array_equal(ds.predictions, [[1.0, 0.0]])

    def test_drift_within_tolerance_is_renormalized(self):
        ds = validate_dataset([((0.5, 0.5000001), 2)], m=2, tol=1e-6)
        assert ds.predictions[0].sum() == pytest.approx(1.0, abs=1e-15)
        assert ds.labels[0] == 2

    def test_sum_too_large(self):
        with pytest.raises(NotOnSimplex):
            validate_dataset([((0.7, 0.7), 1)], m=2, tol=1e-6)

    def test_negative_entry(self):
        with pytest.raises(NotOnSimplex):
            validate_dataset([((1.1, -0.1), 1)], m=2)

    def test_tiny_negative_is_clamped(self):
        ds = validate_dataset([((1.0 + 1e-13, -1e-13), 1)], m=2)
        assert ds.predictions[0, 1] == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            validate_dataset([((0.2, 0.3, 0.5), 1)], m=2)

    @pytest.mark.parametrize("label", [0, 3, -1])
    def test_bad_label(self, label):
        with pytest.raises(BadLabel):
            validate_dataset([((0.5, 0.5), label)], m=2)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            validate_dataset([], m=2)

    def test_order_preserved(self):
        rows = [((0.1 * i, 1 - 0.1 * i), 1 + i % 2) for i in range(11)]
        ds = validate_dataset(rows, m=2)
        np.testing.assert_allclose(ds.predictions[:, 0], [0.1 * i for i in range(11)])
        np.testing.assert_array_equal(ds.labels, [1 + i % 2 for i in range(11)])


def test_simplex_vector():
    v = simplex_vector([0.25, 0.75])
    np.testing.assert_array_equal(v, [0.25, 0.75])
    with pytest.raises(NotOnSimplex):
        simplex_vector([0.5, 0.6])
    with pytest.raises(DimensionMismatch):
        simplex_vector([1.0])


def test_dataset_is_immutable():
    ds = LabeledDataset([[0.6, 0.4]], [1], 2)
    with pytest.raises(ValueError):
        ds.predictions[0, 0] = 0.0
    with pytest.raises(AttributeError):
        ds.class_count = 3


@pytest.mark.parametrize(
    "p, y, expected",
    [
        ((1.0, 0.0, 0.0), 1, (0.0, 0.0, 0.0)),
        ((0.6, 0.4), 1, (0.4, -0.4)),
        ((0.3, 0.7), 2, (-0.3, 0.3)),
    ],
)
def test_residual(p, y, expected):
    rec = PredictionRecord(np.array(p), y)
    np.testing.assert_allclose(residual(rec), expected, atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_residual_properties(m, seed):
    g = np.random.default_rng(seed)
    p = g.dirichlet(np.ones(m))
    y = int(g.integers(1, m + 1))
    r = residual(PredictionRecord(p, y))
    assert abs(r.sum()) <= 1e-12
    assert np.abs(r).max() <= 1.0
    ds = LabeledDataset(p[None, :], [y], m)
    np.testing.assert_array_equal(ds.residuals[0], r)


class TestCsv:
    def test_load_binary(self):
        ds = load_dataset_csv("p1,p2,y\n0.6,0.4,1\n")
        assert len(ds) == 1 and ds.class_count == 2
        np.testing.assert_array_equal(ds.predictions, [[0.6, 0.4]])

    def test_bad_label(self):
        with pytest.raises(BadLabel):
            load_dataset_csv("p1,p2,y\n0.6,0.4,3\n")

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "a,b,y\n0.5,0.5,1\n",
            "p1,p2,y\n0.5,0.5\n",
            "p1,p2,y\n0.5,abc,1\n",
            "p1,p2,y\n0.5,0.5,1.5\n",
        ],
    )
    def test_parse_errors(self, text):
        with pytest.raises(ParseError):
            load_dataset_csv(text)

    def test_header_only_roundtrip(self):
        empty = LabeledDataset(np.empty((0, 3)), np.empty(0, dtype=int), 3)
        buf = io.StringIO()
        write_dataset_csv(empty, buf)
        assert buf.getvalue() == "p1,p2,p3,y\n"
        back = load_dataset_csv(buf.getvalue())
        assert len(back) == 0 and back.class_count == 3

    def test_single_record(self):
        ds = LabeledDataset([[0.6, 0.4]], [1], 2)
        buf = io.StringIO()
        write_dataset_csv(ds, buf)
        assert buf.getvalue() == "p1,p2,y\n0.6,0.4,1\n"

    def test_250_rows_m10_preserve_order(self):
        ds = sample_dataset(preset("M1"), 250, seed=5)
        buf = io.StringIO()
        write_dataset_csv(ds, buf)
        back = load_dataset_csv(buf.getvalue())
        assert len(back) == 250 and back.class_count == 10
        np.testing.assert_array_equal(back.labels, ds.labels)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 12), st.integers(1, 40), st.integers(0, 2**32 - 1))
    def test_roundtrip(self, m, n, seed):
        g = np.random.default_rng(seed)
        ds = LabeledDataset.from_arrays(g.dirichlet(np.full(m, 0.3), size=n), g.integers(1, m + 1, size=n))
        buf = io.StringIO()
        write_dataset_csv(ds, buf)
        back = load_dataset_csv(buf.getvalue())
        assert np.abs(back.predictions - ds.predictions).max() <= 1e-12
        np.testing.assert_array_equal(back.labels, ds.labels)
