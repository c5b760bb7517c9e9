"""Ramification function, orbifold signature and the parabolic test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .ratmap import RamificationPortrait

PARABOLIC_SIGNATURES = ((2, 2, 2, 2), (2, 4, 4), (2, 3, 6), (3, 3, 3))


class Diverges(RuntimeError):
    """The lcm iteration for the ramification function does not stabilize."""


def ramification_function(portrait: RamificationPortrait, max_rounds: int = 200) -> dict[int, int]:
    """``nu`` on the postcritical nodes of ``portrait``.

    Least fixed point of ``nu(p) = lcm{deg(q) nu(q) : R(q) = p}`` over
    portrait nodes ``q``, starting from ``nu = 1``; nodes outside the
    postcritical set keep ``nu = 1``. A critical cycle makes the values grow
    without bound, reported as :class:`Diverges`.
    """
    post = set(portrait.postcritical)
    nu = {i: 1 for i in range(len(portrait.points))}
    for _ in range(max_rounds):
        new = {i: 1 for i in nu}
        for q, p in enumerate(portrait.image):
            if p in post:
                new[p] = math.lcm(new[p], portrait.local_degree[q] * nu[q])
        if new == nu:
            return {p: nu[p] for p in portrait.postcritical}
        nu = new
    raise Diverges("ramification values still growing; the portrait has a critical cycle")


def divisibility_violations(portrait: RamificationPortrait, nu: dict[int, int]) -> list[tuple[int, int]]:
    """Edges ``q -> p`` where ``deg(q) nu(q)`` does not divide ``nu(p)``."""
    bad = []
    for q, p in enumerate(portrait.image):
        if p in nu and nu[p] % (portrait.local_degree[q] * nu.get(q, 1)):
            bad.append((q, p))
    return bad


def maxdeg(portrait: RamificationPortrait, p: int) -> int:
    """Largest local degree of an iterate ``R^j`` at a point of ``R^{-j}(p)``.

    Only critical points raise the degree, so it suffices to follow each
    critical point's forward path through the portrait and multiply local
    degrees until it reaches ``p``; paths into cycles stop growing.
    """
    best = 1
    n = len(portrait.points)
    for c in portrait.critical:
        prod = 1
        v = c
        for _ in range(n + 1):
            prod *= portrait.local_degree[v]
            v = portrait.image[v]
            if v == p:
                best = max(best, prod)
    return best


def maxdeg_table(portrait: RamificationPortrait) -> dict[int, int]:
    return {p: maxdeg(portrait, p) for p in portrait.postcritical}


@dataclass(frozen=True)
class OrbifoldSignature:
    values: tuple[int, ...]

    def __post_init__(self):
        vals = tuple(sorted(self.values))
        for v in vals:
            if not isinstance(v, int) or isinstance(v, bool) or v < 2:
                raise ValueError(f"ramification values must be integers >= 2, got {v!r}")
        object.__setattr__(self, "values", vals)

    @property
    def euler_characteristic(self) -> Fraction:
        return euler_characteristic(self)

    def __str__(self):
        return "(" + ",".join(map(str, self.values)) + ")"


def euler_characteristic(signature: OrbifoldSignature | Sequence[int]) -> Fraction:
    """``2 + sum(1/nu - 1)`` in exact arithmetic."""
    vals = signature.values if isinstance(signature, OrbifoldSignature) else signature
    return 2 + sum((Fraction(1, v) - 1 for v in vals), Fraction(0))


def signature(portrait: RamificationPortrait) -> OrbifoldSignature:
    nu = ramification_function(portrait)
    return OrbifoldSignature(tuple(v for v in nu.values() if v >= 2))


def classify(sig: OrbifoldSignature) -> str:
    """``"parabolic"`` (a Lattes candidate) when the Euler characteristic is
    zero, ``"hyperbolic"`` otherwise."""
    chi = euler_characteristic(sig)
    if chi == 0:
        assert sig.values in PARABOLIC_SIGNATURES
        return "parabolic"
    return "hyperbolic"
