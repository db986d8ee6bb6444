"""Three-layer ReLU networks ``h(x) = A1 (A2 x + B2)_+``.

Hidden units carry stable ids (their column in the original ``A1``), so
regions, removals and groups all refer to the same numbering after dead
units are dropped.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .lct import LCT, combine_independent
from .linear import _as_matrix, is_exact, lambda_linear, matrix_rank

log = logging.getLogger(__name__)

#: exhaustive sign-pattern enumeration is refused above this hidden width
MAX_HIDDEN = 24
#: a region counts as full-dimensional when a ball of this radius fits inside
INTERIOR_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class ReLUNetwork:
    A1: np.ndarray
    A2: np.ndarray
    B2: np.ndarray
    unit_ids: tuple = None

    def __post_init__(self):
        A2 = _as_matrix(self.A2, name="A2")
        if A2.ndim != 2:
            raise ValueError("A2 must be a matrix")
        h2, h3 = A2.shape
        A1 = _as_matrix(self.A1, name="A1")
        if A1.ndim != 2 or A1.shape[1] != h2:
            raise ValueError(f"A1 has shape {A1.shape}, expected (H1, {h2})")
        B2 = _as_matrix(self.B2, (h2,), "B2")
        if A1.shape[0] < 1 or h3 < 1:
            raise ValueError("output and input widths must be at least 1")
        ids = tuple(range(h2)) if self.unit_ids is None else tuple(int(i) for i in self.unit_ids)
        if len(ids) != h2 or len(set(ids)) != h2:
            raise ValueError(f"unit_ids {ids} do not match {h2} hidden units")
        object.__setattr__(self, "A1", A1)
        object.__setattr__(self, "A2", A2)
        object.__setattr__(self, "B2", B2)
        object.__setattr__(self, "unit_ids", ids)

    @property
    def widths(self) -> tuple:
        """``(H1, H2, H3)``: outputs, hidden units, inputs."""
        return (self.A1.shape[0], self.A2.shape[0], self.A2.shape[1])

    @property
    def exact(self) -> bool:
        return is_exact(self.A1) and is_exact(self.A2) and is_exact(self.B2)

    def float_params(self) -> np.ndarray:
        """Flat ``(A1 row-major, A2 row-major, B2)``."""
        return np.concatenate([np.asarray(m, dtype=np.float64).ravel() for m in (self.A1, self.A2, self.B2)])

    @classmethod
    def from_params(cls, params, widths) -> "ReLUNetwork":
        h1, h2, h3 = widths
        p = np.asarray(params, dtype=np.float64)
        if p.size != h1 * h2 + h2 * h3 + h2:
            raise ValueError(f"expected {h1 * h2 + h2 * h3 + h2} parameters, got {p.size}")
        return cls(p[:h1 * h2].reshape(h1, h2), p[h1 * h2:h1 * h2 + h2 * h3].reshape(h2, h3), p[h1 * h2 + h2 * h3:])

    def hidden(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return x @ np.asarray(self.A2, dtype=np.float64).T + np.asarray(self.B2, dtype=np.float64)

    def __call__(self, x) -> np.ndarray:
        return np.maximum(self.hidden(x), 0.0) @ np.asarray(self.A1, dtype=np.float64).T

    def subset(self, ids: Sequence[int]) -> "ReLUNetwork":
        pos = [self.unit_ids.index(i) for i in ids]
        return ReLUNetwork(self.A1[:, pos], self.A2[pos, :], self.B2[pos], tuple(ids))


@dataclass(frozen=True, eq=False)
class InputDomain:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=np.float64).ravel()
        hi = np.asarray(self.upper, dtype=np.float64).ravel()
        if lo.shape != hi.shape or lo.size == 0:
            raise ValueError("domain bounds must be non-empty vectors of equal length")
        if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)) or np.any(hi <= lo):
            raise ValueError("domain must have lower < upper in every coordinate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))


@dataclass(frozen=True, eq=False)
class ActivationRegion:
    active: frozenset
    witness: np.ndarray
    volume_positive: bool = True

    def __repr__(self):
        return f"ActivationRegion(active={sorted(self.active)}, witness={self.witness.tolist()})"


@dataclass(frozen=True)
class GroupDecomposition:
    """Partition of surviving hidden units with per-group sizes and ranks.

    ``h1`` is the effective output count of each group and ``ranks`` the rank
    of each group's affine map; both align with ``groups``.
    """

    groups: tuple
    h1: tuple
    ranks: tuple

    @property
    def sizes(self) -> tuple:
        return tuple(len(g) for g in self.groups)

    def to_json(self) -> dict:
        return {"groups": [list(g) for g in self.groups], "h1": list(self.h1), "ranks": list(self.ranks)}


@dataclass(frozen=True)
class ReLUResult:
    lct: LCT
    groups: GroupDecomposition
    removed: tuple
    parts: tuple = field(default=())
    degenerate: bool = False


def _normalized_rows(net: ReLUNetwork):
    A = np.asarray(net.A2, dtype=np.float64)
    b = np.asarray(net.B2, dtype=np.float64)
    norms = np.linalg.norm(A, axis=1)
    return A, b, norms


def _interior_point(rows, offsets, domain: InputDomain):
    """Point of ``{x in box : rows @ x + offsets < 0}`` with the largest margin.

    Returns ``(x, margin)``; rows are expected to be unit-norm.
    """
    d = domain.dim
    k = len(rows)
    # variables (x, t); maximize t
    A_ub = np.zeros((k + 2 * d, d + 1))
    b_ub = np.zeros(k + 2 * d)
    if k:
        A_ub[:k, :d] = rows
        A_ub[:k, d] = 1.0
        b_ub[:k] = -np.asarray(offsets)
    eye = np.eye(d)
    A_ub[k:k + d, :d] = -eye
    A_ub[k:k + d, d] = 1.0
    b_ub[k:k + d] = -domain.lower
    A_ub[k + d:, :d] = eye
    A_ub[k + d:, d] = 1.0
    b_ub[k + d:] = domain.upper
    c = np.zeros(d + 1)
    c[d] = -1.0
    bounds = [(None, None)] * d + [(None, 1.0)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        return None, -np.inf
    return res.x[:d], float(res.x[d])


def enumerate_regions(net: ReLUNetwork, domain: InputDomain) -> list:
    """All hidden-unit activation patterns with positive volume inside the box.

    Patterns are built unit by unit and infeasible prefixes are pruned, so
    the number of LPs grows with the number of regions rather than with
    ``2**H2``.  A unit whose input row is zero has a constant sign given by
    its bias.
    """
    h1, h2, h3 = net.widths
    if h2 > MAX_HIDDEN:
        raise ValueError(f"{h2} hidden units exceeds the enumeration cap of {MAX_HIDDEN}")
    if domain.dim != h3:
        raise ValueError(f"domain has dimension {domain.dim}, network input is {h3}")
    A, b, norms = _normalized_rows(net)
    ids = net.unit_ids
    regions = []

    def extend(unit, active, rows, offsets, x):
        if unit == h2:
            regions.append(ActivationRegion(frozenset(active), x))
            return
        if norms[unit] == 0.0:
            nxt = active + [ids[unit]] if b[unit] >= 0 else active
            extend(unit + 1, nxt, rows, offsets, x)
            return
        a, c = A[unit] / norms[unit], b[unit] / norms[unit]
        for on in (True, False):
            # active: a.x + c >= 0, i.e. -a.x - c < 0 in the interior
            r_new, o_new = (-a, -c) if on else (a, c)
            rows2 = rows + [r_new]
            offs2 = offsets + [o_new]
            x, margin = _interior_point(rows2, offs2, domain)
            if margin > INTERIOR_SLACK:
                extend(unit + 1, active + [ids[unit]] if on else active, rows2, offs2, x)

    x0, margin0 = _interior_point([], [], domain)
    if margin0 <= INTERIOR_SLACK:
        raise ValueError("domain has no interior")
    extend(0, [], [], [], x0)
    log.debug("found %d activation regions for %d hidden units", len(regions), h2)
    return regions


def sign_pattern(net: ReLUNetwork, x) -> frozenset:
    pre = net.hidden(np.asarray(x, dtype=np.float64))
    return frozenset(i for i, v in zip(net.unit_ids, pre) if v >= 0)


def remove_dead_units(net: ReLUNetwork, regions) -> tuple:
    """Drop hidden units that are inactive on every region.

    Returns ``(reduced network, removed unit ids)``.
    """
    alive = set().union(*(r.active for r in regions)) if regions else set()
    removed = tuple(i for i in net.unit_ids if i not in alive)
    if not removed:
        return net, ()
    keep = [i for i in net.unit_ids if i in alive]
    return net.subset(keep), removed


def group_rank(net: ReLUNetwork, ids) -> int:
    """Rank of ``[A1_G A2_G | A1_G B2_G]``, the group's affine map."""
    sub = net.subset(ids)
    if sub.exact:
        lin = sub.A1.dot(sub.A2)
        off = sub.A1.dot(sub.B2.reshape(-1, 1))
    else:
        a1 = np.asarray(sub.A1, dtype=np.float64)
        lin = a1 @ np.asarray(sub.A2, dtype=np.float64)
        off = a1 @ np.asarray(sub.B2, dtype=np.float64).reshape(-1, 1)
    return matrix_rank(np.hstack([lin, off]))


def coactivation_groups(net: ReLUNetwork, regions) -> list:
    ids = list(net.unit_ids)
    if not ids:
        return []
    pos = {u: k for k, u in enumerate(ids)}
    rows, cols = [], []
    for reg in regions:
        members = sorted(pos[u] for u in reg.active if u in pos)
        for u, v in zip(members, members[1:]):
            rows.append(u)
            cols.append(v)
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(ids), len(ids)))
    n, labels = connected_components(graph, directed=False)
    groups = [tuple(u for u, lab in zip(ids, labels) if lab == g) for g in range(n)]
    return sorted(groups)


def group_units(net: ReLUNetwork, regions, overrides: Optional[dict | GroupDecomposition] = None) -> GroupDecomposition:
    """Partition surviving units into independent groups.

    By default groups are the connected components of the co-activation
    graph, every group sees all ``H1`` outputs and its rank is that of the
    group's affine map.  ``overrides`` (a :class:`GroupDecomposition` or its
    JSON dict, with ``h1``/``ranks`` optional) replaces the default.
    """
    h1, _, h3 = net.widths
    if overrides is None:
        groups = coactivation_groups(net, regions)
        return GroupDecomposition(tuple(groups), tuple(h1 for _ in groups),
                                  tuple(group_rank(net, g) for g in groups))

    if isinstance(overrides, GroupDecomposition):
        overrides = overrides.to_json()
    groups = tuple(tuple(int(u) for u in g) for g in overrides["groups"])
    flat = [u for g in groups for u in g]
    if any(len(g) == 0 for g in groups) or sorted(flat) != sorted(net.unit_ids) or len(set(flat)) != len(flat):
        raise ValueError(f"override groups {groups} are not a partition of surviving units {net.unit_ids}")
    h1s = tuple(int(v) for v in overrides.get("h1") or [h1] * len(groups))
    ranks = overrides.get("ranks")
    ranks = tuple(int(v) for v in ranks) if ranks is not None else tuple(group_rank(net, g) for g in groups)
    if len(h1s) != len(groups) or len(ranks) != len(groups):
        raise ValueError("override h1/ranks must have one entry per group")
    for g, hh, r in zip(groups, h1s, ranks):
        if not 1 <= hh <= h1:
            raise ValueError(f"group {g}: effective output count {hh} outside [1, {h1}]")
        if not 0 <= r <= min(hh, len(g), h3 + 1):
            raise ValueError(f"group {g}: rank {r} outside [0, {min(hh, len(g), h3 + 1)}]")
    return GroupDecomposition(groups, h1s, ranks)


def lambda_relu(net: ReLUNetwork, domain: InputDomain, overrides=None) -> ReLUResult:
    """Coefficient of the three-layer ReLU model at truth ``net`` on ``domain``.

    Runs region enumeration, dead-unit removal and grouping, then adds the
    linear-network coefficients ``lambda(H1'_i, H2_i, H3 + 1, r_i)`` of the
    groups.
    """
    regions = enumerate_regions(net, domain)
    reduced, removed = remove_dead_units(net, regions)
    if reduced.widths[1] == 0:
        log.info("all hidden units are dead; truth is the constant zero map")
        return ReLUResult(LCT(0, 1), GroupDecomposition((), (), ()), removed, (), degenerate=True)
    groups = group_units(reduced, regions, overrides)
    h3 = net.widths[2]
    parts = tuple(lambda_linear((hh, len(g), h3 + 1), r) for g, hh, r in zip(groups.groups, groups.h1, groups.ranks))
    return ReLUResult(combine_independent(parts), groups, removed, parts)
