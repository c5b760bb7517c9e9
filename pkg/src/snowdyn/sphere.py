"""Riemann-sphere points in projective form, the chordal metric, the
spherical derivative and seeded sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import config


class ZeroPoint(ValueError):
    """Both projective components vanish (or are not finite)."""


class NumericalBreakdown(ArithmeticError):
    """Both charts produced non-finite values."""


@dataclass(frozen=True)
class SpherePoint:
    """A point ``[a : b]`` of the Riemann sphere, meaning ``a / b``.

    Always constructed through :func:`normalize`, which divides the pair by
    its larger component (ties go to ``b``), so that component is exactly 1
    and the representation is canonical. Infinity is ``[1 : 0]``.
    """

    a: complex
    b: complex

    @classmethod
    def from_complex(cls, z) -> SpherePoint:
        if z is None or (isinstance(z, float) and math.isinf(z)):
            return INF
        z = complex(z)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            return INF
        return normalize(z, 1.0)

    @property
    def is_infinity(self) -> bool:
        return abs(self.b) < config.INFINITY_THRESHOLD

    def to_complex(self) -> complex:
        """Affine coordinate; ``complex(inf, 0)`` for infinity."""
        if self.is_infinity:
            return complex(math.inf, 0.0)
        return self.a / self.b

    def pair(self) -> tuple[complex, complex]:
        return self.a, self.b

    def conjugate(self) -> SpherePoint:
        return SpherePoint(self.a.conjugate(), self.b.conjugate())

    def __repr__(self):
        if self.is_infinity:
            return "SpherePoint(inf)"
        return f"SpherePoint({self.to_complex()!r})"


def normalize(a, b) -> SpherePoint:
    a = complex(a)
    b = complex(b)
    finite = all(map(math.isfinite, (a.real, a.imag, b.real, b.imag)))
    if not finite or (a == 0 and b == 0):
        raise ZeroPoint(f"cannot normalize ({a}, {b})")
    if abs(b) >= abs(a):
        return SpherePoint(a / b, 1 + 0j)
    return SpherePoint(1 + 0j, b / a)


INF = SpherePoint(1 + 0j, 0j)
ZERO = SpherePoint(0j, 1 + 0j)
ONE = SpherePoint(1 + 0j, 1 + 0j)


def as_point(z) -> SpherePoint:
    """Accept a SpherePoint, a complex number, or ``math.inf``."""
    if isinstance(z, SpherePoint):
        return z
    return SpherePoint.from_complex(z)


def chordal_distance(p, q) -> float:
    """``2|a d - b c| / sqrt((|a|^2+|b|^2)(|c|^2+|d|^2))``; lies in [0, 2]."""
    p = as_point(p)
    q = as_point(q)
    num = abs(p.a * q.b - p.b * q.a)
    den = math.sqrt((abs(p.a) ** 2 + abs(p.b) ** 2) * (abs(q.a) ** 2 + abs(q.b) ** 2))
    return min(2.0, 2.0 * num / den)


def chordal_distance_array(pairs_p: np.ndarray, pairs_q: np.ndarray) -> np.ndarray:
    """Vectorized chordal distance between rows of ``(..., 2)`` complex arrays."""
    a, b = pairs_p[..., 0], pairs_p[..., 1]
    c, d = pairs_q[..., 0], pairs_q[..., 1]
    num = np.abs(a * d - b * c)
    den = np.sqrt((np.abs(a) ** 2 + np.abs(b) ** 2) * (np.abs(c) ** 2 + np.abs(d) ** 2))
    return np.minimum(2.0, 2.0 * num / den)


def spherical_derivative(rmap, z) -> float:
    """``|R'(z)| (1 + |z|^2) / (1 + |R(z)|^2)``, valid at poles and at infinity.

    The point is evaluated in whichever chart puts it in the closed unit
    disk; the chart rules ``(1/R)# = R#`` and ``R(1/z)# = R#(1/z)`` make
    this exact.
    """
    from ._backend import kernels

    z = as_point(z)
    _, _, s = kernels.rat_eval(rmap.num_h, rmap.den_h, z.a, z.b)
    if not math.isfinite(s):
        raise NumericalBreakdown(f"spherical derivative of {rmap.label} not finite at {z}")
    return s


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream.

    Backed by numpy's Philox4x64 counter-based generator keyed through
    ``SeedSequence(seed, spawn_key=(stream_index,))``, so a given
    ``(seed, stream_index)`` yields the same draws on every host.
    """

    seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, index: int) -> RngStream:
        return RngStream(self.seed, self.stream_index * 1_000_003 + index + 1)


def sample_unit_square(rng: RngStream | np.random.Generator) -> SpherePoint:
    """``x + iy`` with ``x, y`` independent uniform on [0, 1]."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    x, y = gen.random(2)
    return normalize(complex(x, y), 1.0)


def sample_sphere(gen: np.random.Generator, count: int) -> np.ndarray:
    """``count`` points uniform for normalized spherical measure, as normalized pairs.

    Draws a uniform point of the unit sphere and projects stereographically;
    the chart is chosen by hemisphere so both components stay bounded.
    """
    v = gen.normal(size=(count, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    x, y, h = v[:, 0], v[:, 1], v[:, 2]
    # z = (x + iy) / (1 - h) = (1 + h) / (x - iy)
    a = np.where(h <= 0, x + 1j * y, 1 + h + 0j)
    b = np.where(h <= 0, 1 - h + 0j, x - 1j * y)
    return normalize_array(np.stack([a, b], axis=1))


def normalize_array(pairs: np.ndarray) -> np.ndarray:
    """Row-wise :func:`normalize` on an ``(n, 2)`` complex array."""
    use_b = np.abs(pairs[:, 1]) >= np.abs(pairs[:, 0])
    piv = np.where(use_b, pairs[:, 1], pairs[:, 0])
    return pairs / piv[:, None]
