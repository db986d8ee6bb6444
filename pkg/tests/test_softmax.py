from fractions import Fraction

import numpy as np
import pytest

from slct.lct import LCT
from slct.linear import LinearArchitecture, LinearNetwork
from slct.softmax import (SoftmaxModel, difference_functions, differencing_matrix, lambda_softmax_linear,
                          softmax_difference_reduction)


def test_two_outputs_reduce_to_scalar_difference():
    arch = LinearArchitecture((2, 1))
    red = softmax_difference_reduction(SoftmaxModel(arch), LinearNetwork.zeros(arch))
    assert red.architecture.widths == (1, 1)
    # (w2 - w1) x
    w = LinearNetwork(arch, ([[Fraction(3)], [Fraction(5)]],))
    red_w = softmax_difference_reduction(arch, w)
    assert red_w.truth.A[0].tolist() == [[Fraction(2)]]
    assert red.describe() == "y2 - y1"


def test_single_output_is_trivial():
    arch = LinearArchitecture((1, 4))
    red = softmax_difference_reduction(arch, LinearNetwork.zeros(arch))
    assert red.architecture is None and red.describe() == "(no outputs)"
    net = LinearNetwork(arch, ([[1, 2, 3, 4]],))
    assert lambda_softmax_linear(arch, net) == LCT(0, 1)


def test_identity_preactivation_rows():
    arch = LinearArchitecture((3, 3))
    W = [[1, 2, 0], [0, 1, 1], [3, 0, 2]]
    red = softmax_difference_reduction(arch, LinearNetwork(arch, (W,)))
    W = np.array(W)
    expected = np.vstack([W[1] - W[0], W[2] - W[0]])
    assert (red.truth.A[0].astype(int) == expected).all()


def test_examples():
    arch = LinearArchitecture((2, 1))
    assert lambda_softmax_linear(arch, LinearNetwork.zeros(arch)) == LCT(Fraction(1, 2), 1)
    deep = LinearArchitecture((2, 1, 1))
    assert lambda_softmax_linear(deep, LinearNetwork.zeros(deep)) == LCT(Fraction(1, 2), 2)


def test_pivot_invariance_random_instances():
    rng = np.random.default_rng(7)
    for bias in (False, True):
        for widths in [(3, 2), (4, 2, 3), (3, 1, 2)]:
            arch = LinearArchitecture(widths, bias)
            A = tuple(rng.integers(-2, 3, size=s).tolist() for s in arch.layer_shapes)
            B = tuple(rng.integers(-2, 3, size=widths[s]).tolist() for s in range(arch.depth)) if bias else ()
            net = LinearNetwork(arch, A, B)
            values = {lambda_softmax_linear(arch, net, p) for p in range(widths[0])}
            assert len(values) == 1


def test_shift_invariance():
    rng = np.random.default_rng(1)
    arch = LinearArchitecture((3, 2))
    W = rng.integers(-3, 4, size=(3, 2))
    shift = rng.integers(-3, 4, size=2)
    base = softmax_difference_reduction(arch, LinearNetwork(arch, (W.tolist(),)))
    moved = softmax_difference_reduction(arch, LinearNetwork(arch, ((W + shift).tolist(),)))
    assert (base.truth.A[0] == moved.truth.A[0]).all()


def test_difference_functions():
    y = np.array([[1.0, 4.0, 2.0]])
    np.testing.assert_array_equal(difference_functions(y, 0), [[3.0, 1.0]])
    np.testing.assert_array_equal(difference_functions(y, 2), [[-1.0, 2.0]])
    D = differencing_matrix(3, 1)
    assert D.tolist() == [[1, -1, 0], [0, -1, 1]]
    with pytest.raises(ValueError):
        differencing_matrix(3, 3)


def test_dimension_mismatch():
    arch = LinearArchitecture((2, 1))
    other = LinearArchitecture((2, 2))
    with pytest.raises(ValueError):
        softmax_difference_reduction(arch, LinearNetwork.zeros(other))
