"""Exact learning-coefficient values and their combination rule.

Learning coefficients are rational numbers, so every value here is a
:class:`fractions.Fraction`.  Floating point never enters this module.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Union

RationalLike = Union[int, Fraction, str]


def as_rational(value: RationalLike) -> Fraction:
    """Coerce an int, Fraction or ``"p/q"`` string to a canonical Fraction.

    Floats are rejected: a learning coefficient that went through floating
    point is no longer exact.
    """
    if isinstance(value, bool) or isinstance(value, float):
        raise TypeError(f"refusing inexact value {value!r}; pass an int, Fraction or 'p/q'")
    return Fraction(value)


def rational_to_json(value: Fraction) -> dict:
    value = as_rational(value)
    return {"num": value.numerator, "den": value.denominator}


def rational_from_json(obj: dict) -> Fraction:
    num, den = obj["num"], obj["den"]
    if not isinstance(num, int) or not isinstance(den, int) or isinstance(num, bool):
        raise ValueError(f"rational fields must be integers, got {obj!r}")
    if den <= 0:
        raise ValueError(f"rational denominator must be positive, got {den}")
    return Fraction(num, den)


@dataclass(frozen=True)
class LCT:
    """A learning coefficient ``lam`` together with its order ``theta``."""

    lam: Fraction
    theta: int = 1

    def __post_init__(self):
        object.__setattr__(self, "lam", as_rational(self.lam))
        if isinstance(self.theta, bool) or not isinstance(self.theta, int):
            raise TypeError(f"theta must be an int, got {self.theta!r}")
        if self.lam < 0:
            raise ValueError(f"learning coefficient must be non-negative, got {self.lam}")
        if self.theta < 1:
            raise ValueError(f"order must be >= 1, got {self.theta}")

    def __add__(self, other: "LCT") -> "LCT":
        if not isinstance(other, LCT):
            return NotImplemented
        return LCT(self.lam + other.lam, self.theta + other.theta - 1)

    def __str__(self):
        return f"lambda = {self.lam} ({float(self.lam):g}), theta = {self.theta}"

    def to_json(self) -> dict:
        return {"lambda": rational_to_json(self.lam), "theta": self.theta}

    @classmethod
    def from_json(cls, obj: dict) -> "LCT":
        return cls(rational_from_json(obj["lambda"]), int(obj["theta"]))


#: neutral element of :func:`combine_independent`
ZERO = LCT(Fraction(0), 1)


def combine_independent(parts: Iterable[LCT]) -> LCT:
    """Combine coefficients of ideals living on disjoint parameter blocks.

    The coefficients add and the orders combine as ``sum(theta_i - 1) + 1``.
    An empty input gives ``LCT(0, 1)``.

    >>> combine_independent([LCT(Fraction(1, 2), 2), LCT(Fraction(1, 2), 3)])
    LCT(lam=Fraction(1, 1), theta=4)
    """
    return reduce(lambda acc, part: acc + part, parts, ZERO)
