"""Average error functions ``K(w)`` for the oracle to sample.

An evaluator maps a batch of parameter vectors to non-negative errors and
vanishes at its center (the truth).  Linear models use the squared
coefficient difference, which has the same threshold as the input
integral; ReLU and softmax models integrate over a fixed quasi-random
point set.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from . import kernels
from .linear import LinearArchitecture, LinearNetwork
from .relu import InputDomain, ReLUNetwork

#: smallest quadrature size accepted for the integral-based evaluators
MIN_QUADRATURE = 1000


class KEvaluator:
    """Batch evaluator of an average error function around ``center``.

    ``func(W, cap)`` receives a float array of shape ``(m, d)`` and returns
    ``m`` values.  Values above ``cap`` may be returned as any number larger
    than ``cap`` (the compiled kernels stop summing early).
    """

    def __init__(self, func: Callable, center, name: str = "K"):
        self.func = func
        self.center = np.asarray(center, dtype=np.float64).ravel()
        self.name = name

    @property
    def dimension(self) -> int:
        return self.center.size

    def evaluate(self, W, cap: float = np.inf) -> np.ndarray:
        W = np.ascontiguousarray(W, dtype=np.float64)
        if W.ndim != 2 or W.shape[1] != self.dimension:
            raise ValueError(f"expected parameter batch of shape (m, {self.dimension}), got {W.shape}")
        return np.asarray(self.func(W, cap), dtype=np.float64)

    def __call__(self, w):
        w = np.asarray(w, dtype=np.float64)
        if w.ndim == 1:
            return float(self.evaluate(w[None, :])[0])
        return self.evaluate(w)

    def scaled(self, factor: float) -> "KEvaluator":
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return KEvaluator(lambda W, cap: factor * self.func(W, cap / factor), self.center, f"{factor}*{self.name}")

    def __repr__(self):
        return f"KEvaluator({self.name}, d={self.dimension})"


def sum_of_squares(funcs: Sequence[Callable], center, name: str = "sum of squares") -> KEvaluator:
    """``K(w) = sum_i f_i(w)**2`` for generators given as batch callables."""
    funcs = list(funcs)

    def func(W, cap):
        out = np.zeros(W.shape[0])
        for f in funcs:
            out += np.asarray(f(W), dtype=np.float64) ** 2
        return out

    return KEvaluator(func, center, name)


def monomial(exponents, dimension=None, center=None, name=None) -> KEvaluator:
    """``K(w) = prod_j (w_j - c_j)**e_j``; exponents must be even."""
    exps = np.asarray(exponents, dtype=int)
    if np.any(exps % 2) or np.any(exps < 0):
        raise ValueError("monomial exponents must be even and non-negative")
    d = dimension or exps.size
    exps = np.concatenate([exps, np.zeros(d - exps.size, dtype=int)])
    c = np.zeros(d) if center is None else np.asarray(center, dtype=np.float64)

    def func(W, cap):
        return np.prod((W - c) ** exps, axis=1)

    label = name or "*".join(f"w{j}^{e}" for j, e in enumerate(exps) if e)
    return KEvaluator(func, c, label)


def _linear_terms(W, arch: LinearArchitecture):
    """Batched end-to-end product and absorbed bias for flat parameters."""
    m = W.shape[0]
    mats, off = [], 0
    for rows, cols in arch.layer_shapes:
        mats.append(W[:, off:off + rows * cols].reshape(m, rows, cols))
        off += rows * cols
    prod = mats[0]
    for a in mats[1:]:
        prod = np.matmul(prod, a)
    if not arch.bias:
        return prod, None
    bs = []
    for s in range(arch.depth):
        h = arch.widths[s]
        bs.append(W[:, off:off + h])
        off += h
    offset = bs[0]
    prefix = mats[0]
    for s in range(1, arch.depth):
        offset = offset + np.matmul(prefix, bs[s][:, :, None])[:, :, 0]
        prefix = np.matmul(prefix, mats[s])
    return prod, offset


def coeff_sos_linear(arch: LinearArchitecture, truth: LinearNetwork) -> KEvaluator:
    """Squared distance of the weight product (and absorbed bias) from the truth."""
    if truth.architecture != arch:
        raise ValueError(f"truth architecture {truth.architecture} does not match {arch}")
    center = truth.float_params()
    p_star, b_star = _linear_terms(center[None, :], arch)

    def func(W, cap):
        prod, offset = _linear_terms(W, arch)
        out = ((prod - p_star) ** 2).sum(axis=(1, 2))
        if offset is not None:
            out = out + ((offset - b_star) ** 2).sum(axis=1)
        return out

    return KEvaluator(func, center, f"linear{arch.widths}{'+bias' if arch.bias else ''}")


def quadrature_points(domain: InputDomain, n_points: int = 1024, seed: int = 0) -> np.ndarray:
    """Scrambled Sobol points in the box, fixed by ``seed``."""
    if n_points < MIN_QUADRATURE:
        raise ValueError(f"need at least {MIN_QUADRATURE} quadrature points, got {n_points}")
    sampler = qmc.Sobol(d=domain.dim, scramble=True, seed=seed)
    m = int(np.ceil(np.log2(n_points)))
    pts = sampler.random_base2(m)[:n_points]
    return np.ascontiguousarray(qmc.scale(pts, domain.lower, domain.upper))


def k_relu(truth: ReLUNetwork, domain: InputDomain, n_points: int = 1024, seed: int = 0,
           backend: str | None = None) -> KEvaluator:
    """Mean squared output difference of ``A1 (A2 x + B2)_+`` over the box."""
    h1, h2, h3 = truth.widths
    if domain.dim != h3:
        raise ValueError(f"domain has dimension {domain.dim}, network input is {h3}")
    X = quadrature_points(domain, n_points, seed)
    kern = kernels.get(backend)
    center = truth.float_params()
    target = np.ascontiguousarray(kern.relu_forward(center, X, h1, h2, h3))

    def func(W, cap):
        return kern.relu_sq_error(W, X, target, h1, h2, h3, cap)

    ev = KEvaluator(func, center, f"relu{truth.widths}")
    ev.points = X
    return ev


def k_softmax(arch: LinearArchitecture, truth: LinearNetwork, domain: InputDomain, n_points: int = 1024,
              seed: int = 0, backend: str | None = None) -> KEvaluator:
    """Mean squared difference of softmax outputs over the box."""
    if truth.architecture != arch:
        raise ValueError(f"truth architecture {truth.architecture} does not match {arch}")
    if domain.dim != arch.widths[-1]:
        raise ValueError(f"domain has dimension {domain.dim}, network input is {arch.widths[-1]}")
    X = quadrature_points(domain, n_points, seed)
    kern = kernels.get(backend)
    widths = np.asarray(arch.widths, dtype=np.intc)
    center = truth.float_params()
    target = np.ascontiguousarray(kern.softmax_forward(center, X, widths, arch.bias))

    def func(W, cap):
        return kern.softmax_sq_error(W, X, target, widths, arch.bias, cap)

    ev = KEvaluator(func, center, f"softmax{arch.widths}")
    ev.points = X
    return ev
