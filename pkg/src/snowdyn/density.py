"""The densities kappa_j of pushed-forward Lebesgue measure, their checks,
blow-up exponents at postcritical points, the Jacobian and Rohlin's entropy."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import config
from ._backend import STATUS_CRITICAL, STATUS_NO_CONVERGENCE, kappa_batch, kernels
from .orbifold import maxdeg
from .polyroots import NoConvergence
from .ratmap import RationalMap, cached_portrait, evaluate, postcritical_pairs, preimages
from .sphere import (
    RngStream,
    SpherePoint,
    as_point,
    chordal_distance,
    chordal_distance_array,
    normalize,
    sample_sphere,
    spherical_derivative,
)


class TooClosePostcritical(ValueError):
    pass


def j_cap(rmap: RationalMap) -> int:
    return config.J_CAP.get(rmap.degree, config.J_CAP_DEFAULT)


def postcritical_distance(rmap: RationalMap, pairs: np.ndarray) -> np.ndarray:
    post = postcritical_pairs(rmap)
    if post.size == 0:
        return np.full(len(pairs), np.inf)
    d = chordal_distance_array(pairs[:, None, :], post[None, :, :])
    return d.min(axis=1)


def _check_status(rmap, status, where):
    if status == STATUS_NO_CONVERGENCE:
        raise NoConvergence(config.ROOT_MAX_ITER, math.inf)
    if status == STATUS_CRITICAL:
        raise TooClosePostcritical(f"{rmap.label}: fiber over {where} hits a critical point")


def kappa_j(
    rmap: RationalMap,
    z,
    j: int,
    exclusion: float | None = config.EXCLUSION_RADIUS,
    audit: bool = True,
) -> float:
    """``sum (R^j)#(w)^-2`` over the full fiber ``R^{-j}(z)``.

    The fiber is enumerated level by level, carrying the product of
    spherical derivatives along each branch. Pass ``exclusion=None`` to
    allow points near the postcritical set (blow-up fits do).
    """
    if j < 0 or j > j_cap(rmap):
        raise ValueError(f"j must lie in [0, {j_cap(rmap)}] for degree {rmap.degree}")
    z = as_point(z)
    if exclusion is not None:
        dist = postcritical_distance(rmap, np.array([z.pair()], dtype=np.complex128))[0]
        if dist <= exclusion:
            raise TooClosePostcritical(f"{z} is within {dist:.3g} of the postcritical set")
    if j == 0:
        return 1.0
    kappa, count, status = kernels.kappa_tree(
        rmap.num_h, rmap.den_h, z.a, z.b, j, config.ROOT_TOL, config.ROOT_MAX_ITER
    )
    _check_status(rmap, status, z)
    if audit and count != rmap.degree**j:
        raise AssertionError(f"fiber audit: {count} points, expected {rmap.degree ** j}")
    return float(kappa)


@dataclass(frozen=True)
class DensityField:
    label: str
    j: int
    points: np.ndarray  # (m, 2) normalized pairs
    kappa: np.ndarray
    fiber_count: np.ndarray


def kappa_field(rmap: RationalMap, pairs: np.ndarray, j: int) -> DensityField:
    """``kappa_j`` at many points; failures are NaN with the fiber count kept."""
    pairs = np.ascontiguousarray(pairs, dtype=np.complex128)
    if j == 0:
        m = len(pairs)
        return DensityField(rmap.label, 0, pairs, np.ones(m), np.ones(m, dtype=np.int64))
    kap, cnt, sts = kappa_batch(
        rmap.num_h, rmap.den_h, pairs, j, config.ROOT_TOL, config.ROOT_MAX_ITER
    )
    kap = np.where(sts == 0, kap, np.nan)
    return DensityField(rmap.label, j, pairs, kap, cnt)


def kappa_recursive(rmap: RationalMap, z, j: int) -> float:
    """``sum_{y in R^-1(z)} R#(y)^-2 kappa_{j-1}(y)``, multiplicity weighted.

    An independent route to ``kappa_j`` through :func:`ratmap.preimages`.
    """
    if j == 0:
        return 1.0
    total = 0.0
    for y, m in preimages(rmap, z):
        s = spherical_derivative(rmap, y)
        total += m * kappa_j(rmap, y, j - 1, exclusion=None) / (s * s)
    return total


@dataclass(frozen=True)
class NormalizationResult:
    j: int
    samples: int
    kept: int
    estimate: float  # integral over the sphere minus the exclusion disks
    stderr: float
    excluded_mass: float  # analytic estimate of the mass inside the disks

    @property
    def total(self) -> float:
        return self.estimate + self.excluded_mass


def _disk_mass(rmap: RationalMap, j: int, radius: float, directions: int = 8) -> float:
    """Mass of ``kappa_j`` inside chordal disks of ``radius`` around post(R).

    With ``kappa ~ C r^-beta`` and normalized area ``r^2 / 4`` inside
    chordal radius ``r``, the mass is ``kappa(radius) radius^2 / (2 (2 - beta))``;
    ``kappa(radius)`` is averaged over a ring of directions.
    """
    port = cached_portrait(rmap)
    total = 0.0
    for p in port.postcritical:
        beta = 2.0 * (1.0 - 1.0 / maxdeg(port, p))
        ring = _ring(port.points[p], radius, directions)
        vals = kappa_field(rmap, ring, j).kappa
        total += float(np.nanmean(vals)) * radius**2 / (2.0 * (2.0 - beta))
    return total


def _ring(p: SpherePoint, radius: float, directions: int) -> np.ndarray:
    """Points at chordal distance ``radius`` from ``p`` (to first order)."""
    ang = np.exp(2j * np.pi * (np.arange(directions) + 0.5) / directions)
    if abs(p.b) >= abs(p.a):
        t = p.a / p.b
        step = radius * (1 + abs(t) ** 2) / 2
        a, b = t + step * ang, np.ones(directions, dtype=np.complex128)
    else:
        u = p.b / p.a
        step = radius * (1 + abs(u) ** 2) / 2
        a, b = np.ones(directions, dtype=np.complex128), u + step * ang
    pairs = np.stack([a, b], axis=1)
    use_b = np.abs(pairs[:, 1]) >= np.abs(pairs[:, 0])
    piv = np.where(use_b, pairs[:, 1], pairs[:, 0])
    return pairs / piv[:, None]


def normalization_check(
    rmap: RationalMap,
    j: int,
    samples: int,
    rng: RngStream,
    exclusion: float = config.EXCLUSION_RADIUS,
    batch: int = 100_000,
) -> NormalizationResult:
    """Monte Carlo ``int kappa_j d(lambda)`` over sphere-uniform samples.

    Samples inside the exclusion disks count as zero in ``estimate``; the
    missing mass is estimated separately from the blow-up exponent.
    """
    if j == 0:
        return NormalizationResult(0, samples, samples, 1.0, 0.0, 0.0)
    gen = rng.generator()
    s1 = s2 = 0.0
    kept = 0
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        pts = sample_sphere(gen, m)
        far = postcritical_distance(rmap, pts) > exclusion
        vals = kappa_field(rmap, pts[far], j).kappa
        if np.any(~np.isfinite(vals)):
            raise NoConvergence(config.ROOT_MAX_ITER, math.inf)
        s1 += float(vals.sum())
        s2 += float((vals * vals).sum())
        kept += int(far.sum())
        done += m
    mean = s1 / samples
    var = max(s2 / samples - mean * mean, 0.0)
    return NormalizationResult(
        j, samples, kept, mean, math.sqrt(var / samples), _disk_mass(rmap, j, exclusion)
    )


@dataclass(frozen=True)
class Bump:
    """``exp(-(d(z, centre) / width)^2)`` in chordal distance."""

    centre: SpherePoint
    width: float

    def __call__(self, pairs: np.ndarray) -> np.ndarray:
        c = np.array([self.centre.pair()], dtype=np.complex128)
        d = chordal_distance_array(pairs, np.broadcast_to(c, pairs.shape))
        return np.exp(-((d / self.width) ** 2))

    @property
    def name(self) -> str:
        z = self.centre
        loc = "inf" if z.is_infinity else f"{z.to_complex():.4g}"
        return f"bump({loc},{self.width:g})"


def constant_one(pairs: np.ndarray) -> np.ndarray:
    return np.ones(len(pairs))


constant_one.name = "one"


def admissible(rmap: RationalMap, g, margin: float = 3.0) -> bool:
    """Test functions must be negligible near post(R): a bump whose centre
    sits closer than ``margin`` widths to a postcritical point is refused."""
    if not isinstance(g, Bump):
        return True
    post = postcritical_pairs(rmap)
    d = postcritical_distance(rmap, np.array([g.centre.pair()], dtype=np.complex128))[0] if post.size else math.inf
    return d >= margin * g.width


def default_bumps(rmap: RationalMap, count: int = 6, width: float = 0.15, seed: int = 0) -> list[Bump]:
    """Admissible bumps with centres on a fixed pseudo-random set."""
    gen = RngStream(seed, 7).generator()
    out = []
    while len(out) < count:
        p = sample_sphere(gen, 1)[0]
        b = Bump(SpherePoint(complex(p[0]), complex(p[1])), width)
        if admissible(rmap, b):
            out.append(b)
    return out


@dataclass(frozen=True)
class PushforwardRow:
    name: str
    deviation: float
    stderr: float


def pushforward_check(
    rmap: RationalMap,
    j: int,
    test_functions: Sequence[Callable],
    samples: int,
    rng: RngStream,
    exclusion: float = config.EXCLUSION_RADIUS,
) -> list[PushforwardRow]:
    """``int g(R x) kappa_{j-1}(x) - int g(x) kappa_j(x)`` by Monte Carlo.

    Inadmissible test functions (see :func:`admissible`) raise ValueError.
    """
    if j < 1:
        raise ValueError("pushforward needs j >= 1")
    for g in test_functions:
        if not admissible(rmap, g):
            raise ValueError(f"test function {getattr(g, 'name', g)} reaches the postcritical set")
    gen = rng.generator()
    pts = sample_sphere(gen, samples)
    pts = pts[postcritical_distance(rmap, pts) > exclusion]
    k0 = kappa_field(rmap, pts, j - 1).kappa
    k1 = kappa_field(rmap, pts, j).kappa
    img = np.array([evaluate(rmap, SpherePoint(complex(a), complex(b))).pair() for a, b in pts])
    rows = []
    for g in test_functions:
        u = g(img) * k0
        v = g(pts) * k1
        dev = (u.sum() - v.sum()) / samples
        se = math.sqrt((u.var() + v.var()) / samples)
        rows.append(PushforwardRow(getattr(g, "name", repr(g)), float(dev), se))
    return rows


@dataclass(frozen=True)
class BlowupFit:
    point: SpherePoint
    j: int
    radii: tuple[float, ...]
    kappa: tuple[float, ...]
    slope: float
    maxdeg: int

    @property
    def predicted(self) -> float:
        return -2.0 * (1.0 - 1.0 / self.maxdeg)


def blowup_fit(
    rmap: RationalMap,
    p,
    j: int,
    radii: Sequence[float] = (1e-3, 3e-4, 1e-4, 3e-5, 1e-5),
    directions: int = 8,
) -> BlowupFit:
    """Least-squares slope of ``log kappa_j`` against ``log r`` near ``p``.

    ``p`` is snapped to the nearest postcritical node; at infinity the
    rings are laid out in the chart ``1/z``.
    """
    radii = sorted(float(r) for r in radii)
    if len(radii) < 4 or radii[-1] / radii[0] < 100:
        raise ValueError("blow-up fit needs at least 4 radii spanning 2 decades")
    port = cached_portrait(rmap)
    node = port.node_for(as_point(p))
    centre = port.points[node]
    means = []
    for r in radii:
        vals = kappa_field(rmap, _ring(centre, r, directions), j).kappa
        means.append(float(np.exp(np.nanmean(np.log(vals)))))
    slope = float(np.polyfit(np.log(radii), np.log(means), 1)[0])
    return BlowupFit(centre, j, tuple(radii), tuple(means), slope, maxdeg(port, node))


def jacobian_estimate(rmap: RationalMap, z, j: int) -> float:
    """``R#(z)^2 kappa_j(R z) / kappa_j(z)``."""
    z = as_point(z)
    s = spherical_derivative(rmap, z)
    if j == 0:
        return s * s
    w = evaluate(rmap, z)
    return s * s * kappa_j(rmap, w, j, exclusion=None) / kappa_j(rmap, z, j, exclusion=None)


@dataclass(frozen=True)
class RohlinResult:
    h: float
    chi: float
    mean_jacobian: float
    orbit_length: int
    j: int

    @property
    def relative_gap(self) -> float:
        return abs(self.h - 2 * self.chi) / (2 * self.chi)


def rohlin_entropy(
    rmap: RationalMap,
    orbit_length: int,
    j: int,
    rng: RngStream,
) -> RohlinResult:
    """Birkhoff average of ``log J`` along one orbit from a random start.

    ``J`` at each orbit point uses ``kappa_j`` at the point and its image,
    so the density is evaluated once per orbit point. ``chi`` is the
    Lyapunov average along the same orbit.
    """
    gen = rng.generator()
    x, y = gen.random(2)
    z0 = normalize(complex(x, y), 1.0)
    orb = kernels.orbit(rmap.num_h, rmap.den_h, z0.a, z0.b, orbit_length)
    kap = kappa_field(rmap, orb, j).kappa
    sharp = np.array(
        [kernels.rat_eval(rmap.num_h, rmap.den_h, a, b)[2] for a, b in orb[:-1]]
    )
    ok = np.isfinite(kap[:-1]) & np.isfinite(kap[1:]) & (sharp > 0)
    logj = 2 * np.log(sharp[ok]) + np.log(kap[1:][ok]) - np.log(kap[:-1][ok])
    return RohlinResult(
        h=float(np.mean(logj)),
        chi=float(np.mean(np.log(sharp[ok]))),
        mean_jacobian=float(np.mean(np.exp(logj))),
        orbit_length=int(ok.sum()),
        j=j,
    )


def oscillation(
    rmap: RationalMap,
    j: int,
    delta: float,
    centres: np.ndarray,
    directions: int = 8,
) -> float:
    """Largest ``|kappa_j(z) - kappa_j(z')|`` with ``z'`` on a ring of chordal
    radius ``delta`` around one of ``centres``."""
    worst = 0.0
    base = kappa_field(rmap, centres, j).kappa
    for c, k in zip(centres, base):
        ring = _ring(SpherePoint(complex(c[0]), complex(c[1])), delta, directions)
        vals = kappa_field(rmap, ring, j).kappa
        worst = max(worst, float(np.nanmax(np.abs(vals - k))))
    return worst
