"""The compiled kernel and the numpy fallback must agree."""

import numpy as np
import pytest

from skelscene.backend import BACKEND, available_backends, reference

compiled = available_backends().get("compiled")

needs_compiled = pytest.mark.skipif(
    compiled is None, reason="compiled backend not built"
)


def sparse_batch(rng, n=6, rows=40, width=18, density=0.25):
    X = np.zeros((n, rows, width))
    for i in range(n):
        occ = rng.choice(rows, size=rng.integers(0, max(2, int(rows * density))), replace=False)
        if occ.size:
            X[i, occ] = rng.standard_normal((occ.size, width))
    return X


def test_selected_backend_reported():
    assert BACKEND in ("compiled", "reference")


def test_reference_zero_matrix_gives_bias():
    X = np.zeros((2, 10, 6))
    K = np.ones((3, 2, 6))
    b = np.array([0.5, -0.25, 0.0])
    pooled, argmax = reference.conv_pool_forward(X, K, b)
    np.testing.assert_array_equal(pooled, np.maximum(b, 0.0)[None].repeat(2, axis=0))
    np.testing.assert_array_equal(argmax, 0)


def test_reference_matches_dense_bruteforce(rng):
    X = sparse_batch(rng)
    K = rng.standard_normal((5, 3, 18))
    b = rng.standard_normal(5)
    pooled, argmax = reference.conv_pool_forward(X, K, b)
    # dense brute force
    for n in range(X.shape[0]):
        z = np.array(
            [[(K[f] * X[n, t : t + 3]).sum() + b[f] for f in range(5)] for t in range(38)]
        )
        np.testing.assert_allclose(pooled[n], np.maximum(z.max(axis=0), 0.0), atol=1e-9)
        # the reported window attains the max
        np.testing.assert_allclose(
            z[argmax[n], np.arange(5)], z.max(axis=0), atol=1e-9
        )


@needs_compiled
def test_forward_equivalence(rng):
    for _ in range(20):
        X = sparse_batch(rng)
        K = rng.standard_normal((5, int(rng.integers(2, 5)), 18))
        b = rng.standard_normal(5)
        p_ref, a_ref = reference.conv_pool_forward(X, K, b)
        p_c, a_c = compiled.conv_pool_forward(X, K, b)
        np.testing.assert_allclose(p_c, p_ref, rtol=1e-9, atol=1e-12)
        np.testing.assert_array_equal(a_c, a_ref)


@needs_compiled
def test_backward_equivalence(rng):
    for _ in range(10):
        X = sparse_batch(rng)
        w = int(rng.integers(2, 5))
        K = rng.standard_normal((5, w, 18))
        b = rng.standard_normal(5)
        pooled, argmax = reference.conv_pool_forward(X, K, b)
        grad = rng.standard_normal(pooled.shape) * (pooled > 0)
        dk_ref = np.zeros_like(K)
        db_ref = np.zeros(5)
        reference.conv_pool_backward(X, grad, argmax, w, dk_ref, db_ref)
        dk_c = np.zeros_like(K)
        db_c = np.zeros(5)
        compiled.conv_pool_backward(X, grad, argmax, w, dk_c, db_c)
        np.testing.assert_allclose(dk_c, dk_ref, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(db_c, db_ref, rtol=1e-9, atol=1e-12)


@needs_compiled
def test_dense_input_equivalence(rng):
    # no zero rows at all: the all-zero-window shortcut must not misfire
    X = rng.standard_normal((3, 20, 10))
    K = rng.standard_normal((4, 3, 10))
    b = rng.standard_normal(4)
    p_ref, a_ref = reference.conv_pool_forward(X, K, b)
    p_c, a_c = compiled.conv_pool_forward(X, K, b)
    np.testing.assert_allclose(p_c, p_ref, rtol=1e-9, atol=1e-12)
    np.testing.assert_array_equal(a_c, a_ref)


@needs_compiled
def test_all_zero_input_equivalence():
    X = np.zeros((2, 12, 8))
    K = np.ones((3, 2, 8))
    b = np.array([1.0, -1.0, 0.0])
    p_ref, a_ref = reference.conv_pool_forward(X, K, b)
    p_c, a_c = compiled.conv_pool_forward(X, K, b)
    np.testing.assert_array_equal(p_c, p_ref)
    np.testing.assert_array_equal(a_c, a_ref)
