"""Learning coefficients of deep linear networks.

Width lists are output-first: ``widths[0]`` is the output dimension
``H(1)`` and ``widths[-1]`` the input dimension ``H(L+1)``.  Layer ``s``
(1-based) maps ``R^{H(s+1)} -> R^{H(s)}`` through the ``H(s) x H(s+1)``
matrix ``A(s)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .lct import LCT

#: relative singular-value cutoff used for floating-point ranks
RANK_RTOL = 1e-9


class NoAdmissibleDecomposition(RuntimeError):
    pass


def _check_widths(widths) -> tuple:
    widths = tuple(widths)
    if len(widths) < 2:
        raise ValueError(f"need at least two widths (one layer), got {widths}")
    for h in widths:
        if isinstance(h, bool) or not isinstance(h, (int, np.integer)) or h < 1:
            raise ValueError(f"widths must be positive integers, got {widths}")
    return tuple(int(h) for h in widths)


def _check_rank(widths, r) -> int:
    if isinstance(r, bool) or not isinstance(r, (int, np.integer)):
        raise ValueError(f"rank must be an integer, got {r!r}")
    if not 0 <= r <= min(widths):
        raise ValueError(f"rank {r} out of range [0, {min(widths)}] for widths {widths}")
    return int(r)


@dataclass(frozen=True)
class LinearArchitecture:
    widths: tuple
    bias: bool = False

    def __post_init__(self):
        object.__setattr__(self, "widths", _check_widths(self.widths))
        object.__setattr__(self, "bias", bool(self.bias))

    @property
    def depth(self) -> int:
        return len(self.widths) - 1

    @property
    def layer_shapes(self) -> list:
        return [(self.widths[s], self.widths[s + 1]) for s in range(self.depth)]

    @property
    def n_params(self) -> int:
        n = sum(a * b for a, b in self.layer_shapes)
        if self.bias:
            n += sum(self.widths[:-1])
        return n


def _as_matrix(data, shape=None, name="matrix") -> np.ndarray:
    """Exact object array when every entry is an int/Fraction/'p/q', else float64."""
    arr = np.array(data, dtype=object)
    if arr.ndim == 1 and shape is not None and len(shape) == 2:
        arr = arr.reshape(shape) if arr.size == shape[0] * shape[1] else arr
    if shape is not None and arr.shape != tuple(shape):
        raise ValueError(f"{name} has shape {arr.shape}, expected {tuple(shape)}")
    flat = arr.ravel()
    if all(isinstance(v, (int, np.integer, Fraction, str)) and not isinstance(v, bool) for v in flat):
        return np.array([Fraction(v) if not isinstance(v, np.integer) else Fraction(int(v)) for v in flat],
                        dtype=object).reshape(arr.shape)
    try:
        return arr.astype(np.float64)
    except (TypeError, ValueError):
        raise ValueError(f"{name} has non-numeric entries") from None


def is_exact(arr: np.ndarray) -> bool:
    return arr.dtype == object


@dataclass(frozen=True, eq=False)
class LinearNetwork:
    """A concrete parameter point of a :class:`LinearArchitecture`.

    ``A[s-1]`` holds ``A(s)`` and ``B[s-1]`` holds ``B(s)``.  Integer and
    rational inputs are kept exact so that ranks can be computed without
    rounding.
    """

    architecture: LinearArchitecture
    A: tuple
    B: tuple = ()

    def __post_init__(self):
        arch = self.architecture
        if len(self.A) != arch.depth:
            raise ValueError(f"expected {arch.depth} weight matrices, got {len(self.A)}")
        A = tuple(_as_matrix(a, shape, f"A({s + 1})")
                  for s, (a, shape) in enumerate(zip(self.A, arch.layer_shapes)))
        if arch.bias:
            if len(self.B) != arch.depth:
                raise ValueError(f"expected {arch.depth} bias vectors, got {len(self.B)}")
            B = tuple(_as_matrix(b, (arch.widths[s],), f"B({s + 1})") for s, b in enumerate(self.B))
        elif len(self.B):
            raise ValueError("bias vectors given for an architecture without bias")
        else:
            B = ()
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def exact(self) -> bool:
        return all(is_exact(m) for m in self.A + self.B)

    @classmethod
    def zeros(cls, architecture: LinearArchitecture) -> "LinearNetwork":
        A = [[[0] * c for _ in range(r)] for r, c in architecture.layer_shapes]
        B = [[0] * architecture.widths[s] for s in range(architecture.depth)] if architecture.bias else []
        return cls(architecture, tuple(A), tuple(B))

    def product(self) -> np.ndarray:
        """``A(1) A(2) ... A(L)``, exact when every layer is exact."""
        mats = self.A if self.exact else tuple(m.astype(np.float64) for m in self.A)
        out = mats[0]
        for m in mats[1:]:
            out = out.dot(m)
        return out

    def absorbed_bias(self) -> np.ndarray:
        """Effective output offset ``B(1) + sum_S A(1)...A(S-1) B(S)``."""
        if not self.architecture.bias:
            return np.zeros(self.architecture.widths[0])
        exact = self.exact
        cast = (lambda m: m) if exact else (lambda m: m.astype(np.float64))
        offset = cast(self.B[0])
        prefix = cast(self.A[0])
        for s in range(1, self.architecture.depth):
            offset = offset + prefix.dot(cast(self.B[s]))
            prefix = prefix.dot(cast(self.A[s]))
        return offset

    def float_params(self) -> np.ndarray:
        """Flat parameter vector: every ``A(s)`` row-major, then every ``B(s)``."""
        parts = [np.asarray(m, dtype=np.float64).ravel() for m in self.A]
        parts += [np.asarray(b, dtype=np.float64).ravel() for b in self.B]
        return np.concatenate(parts) if parts else np.zeros(0)

    def __call__(self, x):
        """Network output for inputs ``x`` of shape ``(..., H(L+1))``."""
        v = np.asarray(x, dtype=np.float64)
        for s in reversed(range(self.architecture.depth)):
            v = v @ np.asarray(self.A[s], dtype=np.float64).T
            if self.architecture.bias:
                v = v + np.asarray(self.B[s], dtype=np.float64)
        return v


def exact_rank(matrix) -> int:
    """Rank by fraction-exact Gaussian elimination."""
    rows = [[Fraction(v) for v in row] for row in np.asarray(matrix, dtype=object).tolist()]
    if not rows or not rows[0]:
        return 0
    n_rows, n_cols = len(rows), len(rows[0])
    rank = 0
    for col in range(n_cols):
        pivot = next((i for i in range(rank, n_rows) if rows[i][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        p = rows[rank][col]
        for i in range(rank + 1, n_rows):
            f = rows[i][col] / p
            if f:
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
        if rank == n_rows:
            break
    return rank


def matrix_rank(matrix, rtol: float = RANK_RTOL) -> int:
    """Exact rank for object (rational) arrays, relative-SVD rank otherwise."""
    m = np.asarray(matrix)
    if m.size == 0:
        return 0
    if m.dtype == object:
        return exact_rank(m)
    s = np.linalg.svd(m.astype(np.float64), compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def true_rank(network: LinearNetwork) -> int:
    """Rank of the end-to-end weight product of a truth network."""
    return matrix_rank(network.product())


@dataclass(frozen=True)
class MSaDecomposition:
    """Selection of the relatively small ``M(s) = H(s) - r``.

    ``selected`` holds 1-based layer numbers ``s``; ``ell`` is
    ``len(selected) - 1``; ``M`` is the ceiling of ``sum / ell``; ``a`` is the
    remainder term ``sum - (M - 1) * ell``.
    """

    r: int
    Ms: tuple
    selected: tuple
    ell: int
    M: int
    a: int

    @property
    def total(self) -> int:
        return sum(self.Ms[s - 1] for s in self.selected)


def admissible(Ms: Sequence[int], selected) -> bool:
    """Whether ``selected`` (1-based layer numbers) satisfies all three conditions."""
    chosen = set(selected)
    inside = [Ms[s - 1] for s in chosen]
    outside = [m for s, m in enumerate(Ms, 1) if s not in chosen]
    if not inside:
        return False
    ell = len(inside) - 1
    total = sum(inside)
    if outside and max(inside) >= min(outside):
        return False
    if any(total < ell * m for m in inside):
        return False
    return all(total < ell * m for m in outside)


def mseta_decompose(widths, r: int) -> MSaDecomposition:
    """Find the admissible set of layers for the closed-form coefficient.

    Candidates are prefixes of the layers sorted by ``M(s)``, with ties kept
    together; the first prefix meeting every condition is returned.
    """
    widths = _check_widths(widths)
    r = _check_rank(widths, r)
    Ms = tuple(h - r for h in widths)
    for cut in sorted(set(Ms)):
        selected = tuple(s for s, m in enumerate(Ms, 1) if m <= cut)
        ell = len(selected) - 1
        if ell < 1 or not admissible(Ms, selected):
            continue
        total = sum(Ms[s - 1] for s in selected)
        M = -(-total // ell)
        a = total - (M - 1) * ell
        return MSaDecomposition(r, Ms, selected, ell, M, a)
    raise NoAdmissibleDecomposition(f"no admissible decomposition for widths {widths}, r={r}")


def _rank_part(widths, r) -> Fraction:
    return Fraction(-r * r + r * (widths[0] + widths[-1]), 2)


def formula_value(widths, dec: MSaDecomposition) -> LCT:
    """Evaluate the closed form for a given decomposition (no shortcut)."""
    ell, a = dec.ell, dec.a
    sel = [dec.Ms[s - 1] for s in dec.selected]
    total = sum(sel)
    lam = (_rank_part(widths, dec.r)
           + Fraction(a * (ell - a), 4 * ell)
           + Fraction(total * total, 4 * ell)
           - Fraction(sum(m * m for m in sel), 4))
    return LCT(lam, a * (ell - a) + 1)


def has_zero_margin(widths, r: int) -> bool:
    """True when some ``H(s) == r``; the coefficient then has the short form."""
    return any(h == r for h in widths)


def lambda_linear(widths, r: int) -> LCT:
    """Learning coefficient of a bias-free deep linear network.

    >>> lambda_linear((1, 1, 1), 0)
    LCT(lam=Fraction(1, 2), theta=2)
    >>> lambda_linear((2, 1, 2), 1)
    LCT(lam=Fraction(3, 2), theta=1)
    """
    widths = _check_widths(widths)
    r = _check_rank(widths, r)
    if has_zero_margin(widths, r):
        return LCT(_rank_part(widths, r), 1)
    return formula_value(widths, mseta_decompose(widths, r))


def lambda_linear_with_bias(widths, r: int) -> LCT:
    """Coefficient with a bias vector in every layer: adds ``H(1)/2``."""
    base = lambda_linear(widths, r)
    return LCT(base.lam + Fraction(_check_widths(widths)[0], 2), base.theta)


def lambda_for(architecture: LinearArchitecture, r: int) -> LCT:
    if architecture.bias:
        return lambda_linear_with_bias(architecture.widths, r)
    return lambda_linear(architecture.widths, r)
