import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from sturm.tensor_core import (LabeledDataset, as_tensor3, fro_norm, frontal_slice,
                               inner_product, l1_norm, tensorize3, tube, vectorize)

shapes = st.tuples(*[st.integers(1, 5)] * 3)
finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_inner_product_trivial():
    ones = np.ones((2, 2, 2))
    assert inner_product(ones, ones) == 8.0
    assert inner_product(np.random.default_rng(0).random((2, 2, 2)), np.zeros((2, 2, 2))) == 0.0


def test_inner_product_matches_loop(rng):
    a, b = rng.standard_normal((2, 3, 4, 5))
    assert inner_product(a, b) == pytest.approx(oracles.inner_product(a, b), rel=1e-12)


def test_inner_product_shape_mismatch():
    with pytest.raises(ValueError, match=r"\(2, 2, 2\).*\(2, 2, 3\)"):
        inner_product(np.ones((2, 2, 2)), np.ones((2, 2, 3)))


def test_l1_norm():
    assert l1_norm(np.zeros((2, 2, 2))) == 0.0
    assert l1_norm(np.array([1.0, -2, 3, -4]).reshape(2, 2, 1)) == 10.0
    a = np.random.default_rng(3).standard_normal((4, 4, 4))
    assert l1_norm(a) == pytest.approx(oracles.l1_norm(a), rel=1e-12)
    assert l1_norm(a) == pytest.approx(np.abs(vectorize(a)).sum(), rel=1e-12)


def test_fro_norm():
    assert fro_norm(np.zeros((2, 3, 1))) == 0.0
    assert fro_norm(np.ones((2, 2, 2))) == pytest.approx(np.sqrt(8))
    a = np.random.default_rng(4).standard_normal((3, 2, 5))
    assert fro_norm(a) == pytest.approx(oracles.fro_norm(a), rel=1e-12)


def test_vectorize_order():
    a = np.array([5.0, 6, 7]).reshape(1, 1, 3)
    np.testing.assert_array_equal(vectorize(a), [5, 6, 7])
    b = np.zeros((2, 1, 2))
    b[0, 0, 0], b[0, 0, 1], b[1, 0, 0], b[1, 0, 1] = 1, 2, 3, 4
    np.testing.assert_array_equal(vectorize(b), [1, 2, 3, 4])


def test_vectorize_round_trip(rng):
    a = rng.standard_normal((3, 2, 4))
    assert np.array_equal(tensorize3(vectorize(a), a.shape), a)


def test_tensorize_length_mismatch():
    with pytest.raises(ValueError):
        tensorize3(np.zeros(5), (2, 2, 2))


def test_slices_and_tubes_agree_with_elements(rng):
    a = rng.standard_normal((3, 4, 5))
    assert frontal_slice(a, 2)[1, 3] == a[1, 3, 2]
    assert tube(a, 2, 1)[4] == a[2, 1, 4]
    assert tube(a, 2, 1).flags.c_contiguous


def test_as_tensor3_rejects_bad_input():
    with pytest.raises(ValueError):
        as_tensor3(np.zeros((2, 2)))
    with pytest.raises(ValueError, match="NaN"):
        as_tensor3(np.full((1, 1, 2), np.nan))


def test_labeled_dataset_validation():
    x = np.zeros((3, 2, 2, 2))
    ds = LabeledDataset(x, [1, -1, 1])
    assert ds.dims == (2, 2, 2) and ds.n_samples == 3
    assert ds.design_matrix().shape == (3, 8)
    with pytest.raises(ValueError, match="labels"):
        LabeledDataset(x, [1, 0, 1])
    with pytest.raises(ValueError):
        LabeledDataset(x, [1, -1])
    with pytest.raises(ValueError):
        LabeledDataset(np.zeros((0, 2, 2, 2)), [])


@settings(max_examples=50, deadline=None)
@given(shapes.flatmap(lambda s: arrays(np.float64, s, elements=finite)))
def test_round_trip_property(a):
    assert np.array_equal(tensorize3(vectorize(a), a.shape), a)


@settings(max_examples=50, deadline=None)
@given(shapes, st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**32 - 1))
def test_inner_product_bilinear_symmetric(shape, s, t, seed):
    a, b, c = np.random.default_rng(seed).standard_normal((3,) + shape)
    assert inner_product(a, b) == pytest.approx(inner_product(b, a), rel=1e-12)
    lhs = inner_product(s * a + t * b, c)
    rhs = s * inner_product(a, c) + t * inner_product(b, c)
    scale = (abs(s) + abs(t)) * fro_norm(c) * (fro_norm(a) + fro_norm(b))
    assert abs(lhs - rhs) <= 1e-12 * max(scale, 1.0)


@settings(max_examples=50, deadline=None)
@given(shapes, st.integers(0, 2**32 - 1))
def test_fro_triangle(shape, seed):
    a, b = np.random.default_rng(seed).standard_normal((2,) + shape)
    assert fro_norm(a + b) <= fro_norm(a) + fro_norm(b) + 1e-12
