"""Kernel specs, Gram matrices, and the median bandwidth heuristic."""
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ratioloss import (KernelSpec, as_points, gram, kernel_eval,
                       median_heuristic)


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec(kind="gaussian")
    with pytest.raises(ValueError):
        KernelSpec(kind="gaussian", sigma=0.0)
    with pytest.raises(ValueError):
        KernelSpec(kind="polynomial")
    with pytest.raises(ValueError):
        KernelSpec(kind="polynomial", degree=0)
    with pytest.raises(ValueError):
        KernelSpec(kind="laplace", sigma=1.0)


def test_gaussian_point_values():
    spec = KernelSpec(kind="gaussian", sigma=1.0)
    assert kernel_eval(spec, 0.7, 0.7) == pytest.approx(1.0, abs=1e-15)
    # squared distance 2 at bandwidth 1 gives exp(-1)
    assert kernel_eval(spec, 0.0, np.sqrt(2.0)) == pytest.approx(np.exp(-1.0),
                                                                 rel=1e-12)


def test_polynomial_point_values():
    spec = KernelSpec(kind="polynomial", degree=3)
    assert kernel_eval(spec, 1.0, 2.0) == pytest.approx(27.0, abs=1e-12)
    shifted = KernelSpec(kind="polynomial", degree=2, offset=0.5)
    assert kernel_eval(shifted, 1.0, 2.0) == pytest.approx(6.25, abs=1e-12)


def test_gram_shape_and_symmetry():
    spec = KernelSpec(kind="gaussian", sigma=0.8)
    x = np.array([[0.0], [1.0], [2.5]])
    k = gram(spec, x, x)
    assert k.shape == (3, 3)
    assert np.allclose(k, k.T)
    assert np.allclose(np.diag(k), 1.0)


def test_gram_dimension_mismatch():
    spec = KernelSpec(kind="gaussian", sigma=1.0)
    with pytest.raises(ValueError):
        gram(spec, np.zeros((3, 1)), np.zeros((3, 2)))


def test_as_points_coercion():
    assert as_points(2.0).shape == (1, 1)
    assert as_points([1.0, 2.0, 3.0]).shape == (3, 1)
    assert as_points(np.zeros((4, 2))).shape == (4, 2)
    with pytest.raises(ValueError):
        as_points(np.zeros((2, 2, 2)))
    with pytest.raises(ValueError):
        as_points([1.0, np.nan])


def test_median_heuristic_frozen_case():
    # pairwise distances {1, 1, 2} have median 1
    assert median_heuristic([0.0, 1.0, 2.0]) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        median_heuristic([1.0])
    with pytest.raises(ValueError):
        median_heuristic([2.0, 2.0, 2.0])


@given(st.lists(st.floats(-5.0, 5.0), min_size=2, max_size=8, unique=True),
       st.floats(0.3, 3.0))
def test_gaussian_gram_positive_semidefinite(xs, sigma):
    k = gram(KernelSpec(kind="gaussian", sigma=sigma), xs, xs)
    eigs = np.linalg.eigvalsh(0.5 * (k + k.T))
    assert float(eigs.min()) > -1e-8
