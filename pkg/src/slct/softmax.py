"""Softmax-output models reduced to output differences.

The zero set of ``Softmax(y(w)) - Softmax(y(w0))`` is cut out by the
differences ``y_j - y_pivot`` (shifted by their values at ``w0``).  For a
linear pre-activation this is again a linear network whose first layer is
the differenced ``A(1)``, so the closed forms of :mod:`slct.linear` apply.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lct import LCT
from .linear import LinearArchitecture, LinearNetwork, lambda_for, true_rank


@dataclass(frozen=True)
class SoftmaxModel:
    base: LinearArchitecture

    @property
    def output_dim(self) -> int:
        return self.base.widths[0]


@dataclass(frozen=True, eq=False)
class SoftmaxReduction:
    """Reduced model/truth pair; ``None`` entries mean an empty output."""

    architecture: LinearArchitecture | None
    truth: LinearNetwork | None
    differencing: np.ndarray
    pivot: int

    def describe(self) -> str:
        k = self.differencing.shape[1]
        rows = [f"y{j + 1} - y{self.pivot + 1}" for j in range(k) if j != self.pivot]
        return ", ".join(rows) if rows else "(no outputs)"


def differencing_matrix(k: int, pivot: int = 0) -> np.ndarray:
    """``(k-1) x k`` integer matrix with rows ``e_j - e_pivot``, ``j != pivot``."""
    if not 0 <= pivot < k:
        raise ValueError(f"pivot {pivot} outside [0, {k})")
    rows = [j for j in range(k) if j != pivot]
    D = np.zeros((k - 1, k), dtype=object)
    for i, j in enumerate(rows):
        D[i, j] = 1
        D[i, pivot] = -1
    return D


def difference_functions(outputs, pivot: int = 0) -> np.ndarray:
    """Apply the differencing to a batch of model outputs ``(..., k)``."""
    y = np.asarray(outputs, dtype=np.float64)
    return np.delete(y, pivot, axis=-1) - y[..., pivot:pivot + 1]


def _left_multiply(D, m):
    if m.dtype == object:
        return D.dot(m)
    return D.astype(np.float64) @ m


def softmax_difference_reduction(model: SoftmaxModel | LinearArchitecture, truth: LinearNetwork,
                                 pivot: int = 0) -> SoftmaxReduction:
    arch = model.base if isinstance(model, SoftmaxModel) else model
    if truth.architecture != arch:
        raise ValueError(f"truth architecture {truth.architecture} does not match model {arch}")
    k = arch.widths[0]
    D = differencing_matrix(k, pivot)
    if k == 1:
        return SoftmaxReduction(None, None, D, pivot)
    red_arch = LinearArchitecture((k - 1,) + arch.widths[1:], arch.bias)
    A = (_left_multiply(D, truth.A[0]),) + truth.A[1:]
    B = ((_left_multiply(D, truth.B[0]),) + truth.B[1:]) if arch.bias else ()
    return SoftmaxReduction(red_arch, LinearNetwork(red_arch, A, B), D, pivot)


def lambda_softmax_linear(model: SoftmaxModel | LinearArchitecture, truth: LinearNetwork,
                          pivot: int = 0) -> LCT:
    """Coefficient of the softmax model via its differenced linear problem.

    >>> arch = LinearArchitecture((2, 1))
    >>> lambda_softmax_linear(arch, LinearNetwork.zeros(arch))
    LCT(lam=Fraction(1, 2), theta=1)
    """
    red = softmax_difference_reduction(model, truth, pivot)
    if red.architecture is None:
        return LCT(0, 1)
    return lambda_for(red.architecture, true_rank(red.truth))
