"""Free-energy penalties and ranking of candidate linear architectures.

The penalty is ``lam log n - (theta - 1) log log n``.  The bounded remainder
of the expansion is left out, so penalties compare candidates at one ``n``
and mean nothing on their own.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

from .lct import LCT
from .linear import LinearArchitecture, lambda_for


def free_energy_penalty(lct: LCT, n: float) -> float:
    """``lam log n - (theta - 1) log log n`` for ``n >= 3``.

    >>> round(free_energy_penalty(LCT(2, 2), 10**4), 2)
    16.2
    """
    if isinstance(n, bool) or not n >= 3:
        raise ValueError(f"sample size must be at least 3, got {n!r}")
    logn = math.log(n)
    return float(lct.lam) * logn - (lct.theta - 1) * math.log(logn)


@dataclass(frozen=True)
class Candidate:
    widths: tuple
    bias: bool = False
    rank: int = 0

    def to_json(self) -> dict:
        return {"widths": list(self.widths), "bias": self.bias, "rank": self.rank}


@dataclass(frozen=True)
class RankedCandidate:
    """One row of a ranking; failed candidates carry ``error`` and no ``lct``."""

    index: int
    candidate: Candidate
    lct: Optional[LCT] = None
    penalty: Optional[float] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_json(self) -> dict:
        out = self.candidate.to_json()
        if self.ok:
            out.update(self.lct.to_json())
            out["penalty"] = self.penalty
        else:
            out["error"] = self.error
        return out


def _as_candidate(item) -> Candidate:
    if isinstance(item, Candidate):
        return item
    if isinstance(item, dict):
        return Candidate(tuple(item["widths"]), item.get("bias", False), item.get("rank", 0))
    widths, bias, rank = item
    return Candidate(tuple(widths), bias, rank)


def rank_architectures(candidates: Iterable, n: float) -> list:
    """Order candidates by penalty at sample size ``n``.

    Ties are broken by smaller ``lam``, then larger ``theta``, then input
    order.  A candidate that fails validation is reported with its error
    message after the valid ones instead of aborting the batch.
    """
    free_energy_penalty(LCT(0, 1), n)  # validates n once
    ok, failed = [], []
    for i, item in enumerate(candidates):
        try:
            cand = _as_candidate(item)
            lct = lambda_for(LinearArchitecture(cand.widths, cand.bias), cand.rank)
        except (ValueError, TypeError, KeyError, RuntimeError) as exc:
            cand = item if isinstance(item, Candidate) else _raw_candidate(item)
            failed.append(RankedCandidate(i, cand, error=str(exc)))
            continue
        ok.append(RankedCandidate(i, cand, lct, free_energy_penalty(lct, n)))
    ok.sort(key=lambda rc: (rc.penalty, rc.lct.lam, -rc.lct.theta, rc.index))
    return ok + failed


def _raw_candidate(item) -> Candidate:
    """Best-effort echo of an invalid candidate for error reporting."""
    try:
        if isinstance(item, dict):
            return Candidate(tuple(item.get("widths", ())), item.get("bias", False), item.get("rank", 0))
        widths, bias, rank = item
        return Candidate(tuple(widths), bias, rank)
    except (TypeError, ValueError):
        return Candidate((), False, 0)
