"""The compiled and numpy kernels follow the same operation order.

ReLU results agree bit for bit.  Softmax results agree to rounding only:
numpy's vectorized ``exp`` and the C library's can differ in the last bit.
"""
import numpy as np
import pytest

from slct import _fallback, kernels

compiled = kernels.BACKENDS.get("cython")
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")


def test_backend_selection():
    assert kernels.BACKEND in kernels.BACKENDS
    assert kernels.get("python") is _fallback
    with pytest.raises(ValueError):
        kernels.get("fortran")


@needs_compiled
@pytest.mark.parametrize("widths", [(1, 1, 1), (2, 3, 2), (3, 5, 4)])
def test_relu_parity(widths):
    h1, h2, h3 = widths
    rng = np.random.default_rng(sum(widths))
    d = h1 * h2 + h2 * h3 + h2
    X = rng.uniform(-1, 1, size=(257, h3))
    W = rng.normal(size=(40, d))
    target = compiled.relu_forward(W[0], X, h1, h2, h3)
    np.testing.assert_array_equal(target, _fallback.relu_forward(W[0], X, h1, h2, h3))
    np.testing.assert_array_equal(compiled.relu_sq_error(W, X, target, h1, h2, h3),
                                  _fallback.relu_sq_error(W, X, target, h1, h2, h3))


@needs_compiled
@pytest.mark.parametrize("widths, bias", [((2, 1), False), ((3, 2, 2), True), ((4, 1, 2, 3), False)])
def test_softmax_parity(widths, bias):
    w = np.asarray(widths, dtype=np.intc)
    rng = np.random.default_rng(len(widths))
    d = sum(widths[s] * widths[s + 1] for s in range(len(widths) - 1)) + (sum(widths[:-1]) if bias else 0)
    X = rng.uniform(-1, 1, size=(300, widths[-1]))
    W = rng.normal(size=(30, d))
    target = compiled.softmax_forward(W[0], X, w, bias)
    np.testing.assert_allclose(target, _fallback.softmax_forward(W[0], X, w, bias), rtol=1e-14, atol=0)
    np.testing.assert_allclose(compiled.softmax_sq_error(W, X, target, w, bias),
                               _fallback.softmax_sq_error(W, X, target, w, bias), rtol=1e-12, atol=1e-30)


@needs_compiled
def test_cap_only_affects_values_above_it():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, size=(512, 2))
    W = rng.normal(scale=0.3, size=(200, 2 * 3 + 3 * 2 + 3))
    target = compiled.relu_forward(np.zeros(W.shape[1]), X, 2, 3, 2)
    full = compiled.relu_sq_error(W, X, target, 2, 3, 2)
    cap = float(np.median(full))
    capped = compiled.relu_sq_error(W, X, target, 2, 3, 2, cap)
    below = full <= cap
    np.testing.assert_array_equal(capped[below], full[below])
    assert np.all(capped[~below] > cap)
