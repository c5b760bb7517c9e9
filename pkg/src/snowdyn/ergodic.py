"""Lyapunov exponents by Birkhoff sums, the dimension formulas, the
experiment harness and itinerary-based estimates of the snowsphere metric."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import config
from ._backend import kernels
from .ratmap import RationalMap, cached_portrait, critical_pairs, postcritical_pairs
from .sphere import RngStream, SpherePoint, as_point, chordal_distance, normalize, sample_unit_square

UPPER = "upper"
LOWER = "lower"
BOUNDARY = "boundary"


class DegenerateOrbit(ArithmeticError):
    """``log R#`` stayed non-finite along an orbit even after perturbing."""


class NonPositiveChi(ValueError):
    pass


class NotRealPostcritical(ValueError):
    """Itineraries need the postcritical set on the extended real line."""


class ExperimentFailed(RuntimeError):
    def __init__(self, message: str, report: "ExperimentReport"):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class LyapunovRun:
    seed_point: SpherePoint
    iterations: int
    chi: float
    min_critical_distance: float
    perturbations: int = 0


def _perturb(z: SpherePoint, size: float, gen: np.random.Generator) -> SpherePoint:
    """Move ``z`` by ``size`` in a random direction, in the chart where it
    has modulus at most one."""
    step = size * np.exp(2j * np.pi * gen.random())
    if abs(z.b) >= abs(z.a):
        return normalize(z.a / z.b + step, 1.0)
    return normalize(1.0, z.b / z.a + step)


def birkhoff_lyapunov(
    rmap: RationalMap,
    z0,
    n: int,
    rng: RngStream | np.random.Generator | None = None,
    guard: float = config.CRITICAL_GUARD,
    perturbation: float = config.PERTURBATION,
    max_perturbations: int = 10,
) -> LyapunovRun:
    """``(1/n) sum_{k<n} log R#(R^k z0)``, no burn-in.

    Whenever the orbit comes within ``guard`` (chordal) of a critical point,
    or starts within ``guard`` of a postcritical point, the current point is
    moved by ``perturbation`` in a random direction and the event counted.
    """
    if n < 1:
        raise ValueError("n must be positive")
    z0 = as_point(z0)
    if rng is None:
        rng = RngStream(0)
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    crit = critical_pairs(rmap)
    za, zb = z0.a, z0.b
    events = 0
    post = postcritical_pairs(rmap)
    if post.size and min(chordal_distance(z0, SpherePoint(*p)) for p in post) < guard:
        z = _perturb(z0, perturbation, gen)
        za, zb = z.a, z.b
        events += 1
    total = 0.0
    done = 0
    min_dist = math.inf
    while done < n:
        part, steps, za, zb, dist = kernels.lyapunov_orbit(
            rmap.num_h, rmap.den_h, crit, za, zb, n - done, guard
        )
        total += part
        done += steps
        min_dist = min(min_dist, dist)
        if done < n:
            events += 1
            if events > max_perturbations:
                raise DegenerateOrbit(
                    f"{rmap.label}: orbit of {z0} kept hitting the critical set ({events} perturbations)"
                )
            z = _perturb(SpherePoint(complex(za), complex(zb)), perturbation, gen)
            za, zb = z.a, z.b
    chi = total / n
    if not math.isfinite(chi):
        raise DegenerateOrbit(f"{rmap.label}: non-finite Lyapunov sum from {z0}")
    return LyapunovRun(z0, n, chi, min_dist, events)


def dim_mu(chi: float, N: int) -> float:
    """``2 chi / log N``."""
    if not chi > 0:
        raise NonPositiveChi(f"chi must be positive, got {chi}")
    return 2.0 * chi / math.log(N)


def alpha_exponent(chi: float, N: int) -> float:
    """``log N / chi``; ``alpha * dim_mu = 2``."""
    if not chi > 0:
        raise NonPositiveChi(f"chi must be positive, got {chi}")
    return math.log(N) / chi


def hausdorff_dimension(degree: int, N: int) -> float:
    """``log deg / log N``, the dimension of the snowsphere."""
    if degree < 2 or N < 2:
        raise ValueError("degree and N must be at least 2")
    return math.log(degree) / math.log(N)


def jensen_gap(chi: float, degree: int) -> float:
    """``log deg - 2 chi``; nonnegative, zero exactly for Lattes maps."""
    return math.log(degree) - 2.0 * chi


@dataclass(frozen=True)
class ExperimentReport:
    label: str
    degree: int
    N: int
    seeds: int
    n: int
    rng_seed: int
    rng_stream: int
    chis: tuple[float, ...]
    excluded: tuple[int, ...] = ()
    perturbations: int = 0
    seed_points: tuple[SpherePoint, ...] = field(default=(), repr=False)

    @property
    def dims(self) -> np.ndarray:
        return 2.0 * np.asarray(self.chis) / math.log(self.N)

    @property
    def mean_chi(self) -> float:
        return float(np.mean(self.chis))

    @property
    def mean_dim(self) -> float:
        return float(np.mean(self.dims))

    @property
    def max_dim(self) -> float:
        return float(np.max(self.dims))

    @property
    def min_dim(self) -> float:
        return float(np.min(self.dims))

    @property
    def std_dim(self) -> float:
        return float(np.std(self.dims, ddof=1)) if len(self.chis) > 1 else 0.0

    @property
    def alpha(self) -> float:
        return alpha_exponent(self.mean_chi, self.N)

    @property
    def hausdorff_dim(self) -> float:
        return hausdorff_dimension(self.degree, self.N)

    @property
    def jensen_gap(self) -> float:
        return jensen_gap(self.mean_chi, self.degree)

    @property
    def entropy_h(self) -> float:
        return 2.0 * self.mean_chi


def _one_seed(args):
    rmap, stream, n = args
    gen = stream.generator()
    z0 = sample_unit_square(gen)
    try:
        return birkhoff_lyapunov(rmap, z0, n, gen)
    except DegenerateOrbit:
        return z0


def dimension_experiment(
    rmap: RationalMap,
    N: int,
    seeds: int,
    n: int,
    rng: RngStream,
    workers: int = 1,
    max_excluded: float = 0.01,
) -> ExperimentReport:
    """Table-style experiment: one Birkhoff run per seed.

    Seed ``i`` draws its starting point uniformly from the unit square
    using the child stream ``rng.child(i)``, so the report does not depend
    on ``workers``. Seeds whose orbit degenerates are excluded and listed;
    more than ``max_excluded`` of them raises :class:`ExperimentFailed`.
    """
    # warm the caches before any fork so workers inherit them
    critical_pairs(rmap)
    cached_portrait(rmap)
    jobs = [(rmap, rng.child(i), n) for i in range(seeds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_seed, jobs, chunksize=max(1, seeds // (4 * workers))))
    else:
        results = [_one_seed(j) for j in jobs]
    chis, points, excluded = [], [], []
    events = 0
    for i, r in enumerate(results):
        if isinstance(r, LyapunovRun):
            chis.append(r.chi)
            points.append(r.seed_point)
            events += r.perturbations
        else:
            excluded.append(i)
    report = ExperimentReport(
        label=rmap.label,
        degree=rmap.degree,
        N=N,
        seeds=seeds,
        n=n,
        rng_seed=rng.seed,
        rng_stream=rng.stream_index,
        chis=tuple(chis),
        excluded=tuple(excluded),
        perturbations=events,
        seed_points=tuple(points),
    )
    if len(excluded) > max_excluded * seeds or not chis:
        raise ExperimentFailed(f"{len(excluded)} of {seeds} seeds degenerate", report)
    return report


# ---------------------------------------------------------------------------
# itineraries and the snowsphere metric
# ---------------------------------------------------------------------------


def _require_real_post(rmap: RationalMap):
    if "real_post" not in rmap._cache:
        port = cached_portrait(rmap)
        tol = port.snap_tol
        ok = rmap.has_real_coefficients() and all(
            p.is_infinity or abs(p.to_complex().imag) <= tol for p in port.postcritical_points()
        )
        rmap._cache["real_post"] = ok
    if not rmap._cache["real_post"]:
        raise NotRealPostcritical(f"{rmap.label}: postcritical set is not on the real line")


def _symbols(pairs: np.ndarray, tol: float) -> np.ndarray:
    """+1 upper, -1 lower, 0 boundary for each normalized pair."""
    # Im(a conj(b)) has the sign of Im(a/b); infinity gives 0
    im = (pairs[:, 0] * np.conj(pairs[:, 1])).imag
    out = np.sign(im).astype(np.int8)
    out[np.abs(im) < tol] = 0
    return out


_NAMES = {1: UPPER, -1: LOWER, 0: BOUNDARY}


def _orbit_symbols(rmap: RationalMap, z: SpherePoint, jmax: int, tol: float) -> np.ndarray:
    orb = kernels.orbit(rmap.num_h, rmap.den_h, z.a, z.b, max(jmax - 1, 0))
    return _symbols(orb[:jmax], tol)


def itinerary(rmap: RationalMap, z, jmax: int, boundary_tol: float = config.BOUNDARY_TOL) -> list[str]:
    """Closed half-plane containing ``R^k(z)`` for ``k < jmax``."""
    _require_real_post(rmap)
    sym = _orbit_symbols(rmap, as_point(z), jmax, boundary_tol)
    return [_NAMES[int(s)] for s in sym]


class SnowEstimate(NamedTuple):
    value: float
    level: int
    saturated: bool


def _first_split(sx: np.ndarray, sy: np.ndarray) -> int:
    hit = np.flatnonzero((sx != sy) & (sx != 0) & (sy != 0))
    return int(hit[0]) if hit.size else -1


def snow_metric_estimate(
    rmap: RationalMap, x, y, N: int, jmax: int, boundary_tol: float = config.BOUNDARY_TOL
) -> SnowEstimate:
    """``N**(-j)`` where ``j`` is the first step at which the orbits of ``x``
    and ``y`` sit in opposite open half-planes.

    With no such step below ``jmax`` the result is ``N**(-jmax)`` and
    ``saturated`` is set (only a lower bound on the level).
    """
    _require_real_post(rmap)
    sx = _orbit_symbols(rmap, as_point(x), jmax, boundary_tol)
    sy = _orbit_symbols(rmap, as_point(y), jmax, boundary_tol)
    j = _first_split(sx, sy)
    if j < 0:
        return SnowEstimate(float(N) ** (-jmax), jmax, True)
    return SnowEstimate(float(N) ** (-j), j, False)


@dataclass(frozen=True)
class HolderRow:
    radius: float
    median_ratio: float
    q25: float
    q75: float
    used: int
    excluded: int


@dataclass(frozen=True)
class HolderTable:
    label: str
    N: int
    alpha: float
    rows: tuple[HolderRow, ...]

    @property
    def smallest(self) -> HolderRow:
        return min(self.rows, key=lambda r: r.radius)


def holder_probe(
    rmap: RationalMap,
    N: int,
    chi: float,
    samples: int,
    radii: Sequence[float],
    rng: RngStream,
    jmax: int | None = None,
    boundary_tol: float = config.BOUNDARY_TOL,
) -> HolderTable:
    """Median of ``log |x-y|_S / log |x-y|`` over random pairs at each radius.

    Base points are uniform in the unit square. Each partner sits in a
    uniform random direction at affine distance ``r * N**(-u)`` with ``u``
    uniform on [0, 1); the itinerary level is an integer, and spreading
    the distances over one factor of ``N`` keeps the median from snapping
    to multiples of ``log N / log(1/r)``. ``|x-y|`` is the chordal distance
    and ``|x-y|_S`` the itinerary estimate. Pairs that coincide or never
    split before ``jmax`` are excluded.
    """
    _require_real_post(rmap)
    if jmax is None:
        jmax = int(math.ceil(3 * math.log(1 / min(radii)) / math.log(N))) + 20
    gen = rng.generator()
    base = gen.random((samples, 2))
    theta = gen.random(samples) * 2 * np.pi
    jitter = float(N) ** (-gen.random(samples))
    rows = []
    for r in sorted(radii, reverse=True):
        ratios = []
        excluded = 0
        for k in range(samples):
            x = complex(base[k, 0], base[k, 1])
            y = x + r * jitter[k] * complex(math.cos(theta[k]), math.sin(theta[k]))
            px, py = normalize(x, 1.0), normalize(y, 1.0)
            d = chordal_distance(px, py)
            if d == 0 or d >= 1:
                excluded += 1
                continue
            est = snow_metric_estimate(rmap, px, py, N, jmax, boundary_tol)
            if est.saturated or est.value >= 1:
                excluded += 1
                continue
            ratios.append(math.log(est.value) / math.log(d))
        if ratios:
            q25, med, q75 = np.percentile(ratios, [25, 50, 75])
        else:
            q25 = med = q75 = math.nan
        rows.append(HolderRow(float(r), float(med), float(q25), float(q75), len(ratios), excluded))
    return HolderTable(rmap.label, N, alpha_exponent(chi, N), tuple(rows))
