import numpy as np
import pytest
import scipy.sparse as sp

from wellsvm.data import Dataset, make_two_gaussians
from wellsvm.kernel import (
    KernelSpec,
    composite_label_gram,
    cross_gram,
    gamma_heuristic,
    gram,
    kernel_alignment,
    kernel_value,
)


def _dataset(X):
    return Dataset(sp.csr_matrix(np.asarray(X, dtype=float)), [None] * len(X))


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec("gaussian")  # width required
    with pytest.raises(ValueError):
        KernelSpec("gaussian", -1.0)
    with pytest.raises(ValueError):
        KernelSpec("poly")


def test_linear_gram_matches_product():
    d = make_two_gaussians(10, 2.0, seed=0)
    K = gram(d, KernelSpec("linear"))
    X = np.asarray(d.X.todense())
    assert np.allclose(K, X @ X.T)


def test_gaussian_gram_properties():
    d = make_two_gaussians(12, 2.0, seed=1)
    K = gram(d, KernelSpec("gaussian", 1.3))
    assert np.allclose(np.diag(K), 1.0)
    assert np.allclose(K, K.T)
    assert np.all(K > 0) and np.all(K <= 1.0 + 1e-15)
    w = np.linalg.eigvalsh(K)
    assert w.min() > -1e-10  # psd


def test_gamma_heuristic_exact_mean_pairwise_distance():
    d = _dataset([[0.0, 0.0], [3.0, 4.0], [6.0, 8.0]])
    # pairwise distances: 5, 10, 5 -> mean 20/3
    assert gamma_heuristic(d) == pytest.approx(20.0 / 3.0, rel=1e-12)


def test_kernel_value_matches_gram_entry():
    d = make_two_gaussians(6, 2.0, seed=2)
    spec = KernelSpec("gaussian", 0.9)
    K = gram(d, spec)
    X = np.asarray(d.X.todense())
    assert K[1, 4] == pytest.approx(kernel_value(spec, X[1], X[4]), rel=1e-14)


def test_cross_gram_consistency():
    d = make_two_gaussians(8, 2.0, seed=3)
    spec = KernelSpec("gaussian", 1.1)
    X = np.asarray(d.X.todense())
    assert np.allclose(cross_gram(spec, X, X), gram(d, spec))
    assert np.allclose(cross_gram(spec, d.X, d.X), gram(d, spec))


def test_composite_label_gram():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((5, 5))
    K = A @ A.T
    y1 = np.array([1, -1, 1, 1, -1], dtype=float)
    y2 = -y1
    mu = np.array([0.3, 0.7])
    C = composite_label_gram(K, [y1, y2], mu)
    expected = 0.3 * K * np.outer(y1, y1) + 0.7 * K * np.outer(y2, y2)
    assert np.allclose(C, expected)


def test_kernel_alignment_formula_and_range():
    d = make_two_gaussians(10, 4.0, seed=4)
    K = gram(d, KernelSpec("linear"))
    y = d.label_vector().astype(float)
    val = kernel_alignment(K, y)
    assert val == pytest.approx((y @ K @ y) / (10 * np.linalg.norm(K, "fro")), rel=1e-12)
    # true labels align better than a scrambled copy
    rng = np.random.default_rng(0)
    assert val > kernel_alignment(K, rng.permutation(y))
