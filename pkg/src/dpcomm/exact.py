"""Exact arithmetic for logarithms of rationals.

A value ``sum_i a_i * log2(q_i)`` with rational ``a_i`` and ``q_i`` is stored
as a linear form over ``log2(p)`` for primes ``p``. Logarithms of distinct
primes are linearly independent over the rationals, so two such values are
equal exactly when their coefficient maps agree. This lets identity checks
(chain rules, Markov projections) be decided without rounding.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

from sympy import factorint


@lru_cache(maxsize=65536)
def _factor(n: int) -> tuple[tuple[int, int], ...]:
    return tuple(sorted(factorint(n).items()))


class LogSum:
    """Exact ``sum_p c_p * log2(p)`` over primes ``p``, rational ``c_p``."""

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        self._terms = {p: Fraction(c) for p, c in (terms or {}).items() if c != 0}

    @classmethod
    def log2(cls, q) -> "LogSum":
        q = Fraction(q)
        if q <= 0:
            raise ValueError(f"log2 of non-positive rational {q}")
        terms: dict[int, Fraction] = {}
        for p, e in _factor(q.numerator):
            terms[p] = terms.get(p, Fraction(0)) + e
        for p, e in _factor(q.denominator):
            terms[p] = terms.get(p, Fraction(0)) - e
        return cls(terms)

    @property
    def terms(self) -> dict[int, Fraction]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def _combine(self, other, sign):
        if isinstance(other, (int, Fraction)) and other == 0:
            return self
        if not isinstance(other, LogSum):
            return NotImplemented
        terms = dict(self._terms)
        for p, c in other._terms.items():
            terms[p] = terms.get(p, Fraction(0)) + sign * c
        return LogSum(terms)

    def __add__(self, other):
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1)

    def __rsub__(self, other):
        return (-self)._combine(other, 1)

    def __neg__(self):
        return LogSum({p: -c for p, c in self._terms.items()})

    def __mul__(self, k):
        if isinstance(k, (int, Fraction)):
            return LogSum({p: c * k for p, c in self._terms.items()})
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)) and other == 0:
            return self.is_zero()
        if isinstance(other, LogSum):
            return self._terms == other._terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __float__(self):
        return math.fsum(float(c) * math.log2(p) for p, c in self._terms.items())

    def __repr__(self):
        if not self._terms:
            return "LogSum(0)"
        body = " + ".join(f"({c})*log2({p})" for p, c in sorted(self._terms.items()))
        return f"LogSum({body})"
