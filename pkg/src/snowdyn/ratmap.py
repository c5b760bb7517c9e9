"""Rational maps of the sphere: evaluation, critical points, fibers,
postcritical portraits and the built-in catalog."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from . import config
from ._backend import kernels
from .polyroots import (
    Polynomial,
    _rel_dist,
    _split,
    backward_error,
    find_roots,
    poly_add,
    poly_derivative,
    poly_from_factors,
    poly_mul,
    poly_scale,
)
from .sphere import INF, SpherePoint, as_point, chordal_distance, normalize


class IndeterminateForm(ArithmeticError):
    """Numerator and denominator vanish together."""


class DegenerateMap(ValueError):
    """Numerator and denominator share a root."""


class UnknownName(KeyError):
    pass


class NotFiniteWithinBudget(RuntimeError):
    """Critical orbits neither snapped nor cycled within the step budget."""


@dataclass(frozen=True)
class FactoredForm:
    """``affine_offset + constant * prod(zeros) / prod(poles)``.

    Zeros and poles are ``(root, multiplicity)``; the ``*_factors`` lists
    hold irreducible-looking higher-degree factors as ``(coefficients,
    multiplicity)`` so published parameter tables can be kept verbatim.
    """

    constant: complex = 1.0
    affine_offset: complex = 0.0
    zeros: tuple = ()
    poles: tuple = ()
    numerator_factors: tuple = ()
    denominator_factors: tuple = ()

    def expand(self) -> tuple[Polynomial, Polynomial]:
        top = poly_from_factors(self.zeros, self.numerator_factors, self.constant)
        bottom = poly_from_factors(self.poles, self.denominator_factors, 1.0)
        if self.affine_offset != 0:
            top = poly_add(poly_scale(bottom, self.affine_offset), top)
        return top, bottom


class RationalMap:
    """``R = numerator / denominator`` acting on the Riemann sphere."""

    def __init__(
        self,
        numerator: Polynomial,
        denominator: Polynomial,
        label: str = "map",
        factored_form: FactoredForm | None = None,
        provenance: dict | None = None,
    ):
        self.numerator = numerator
        self.denominator = denominator
        self.degree = max(numerator.degree, denominator.degree)
        self.label = label
        self.factored_form = factored_form
        self.provenance = provenance or {}
        self.num_h = numerator.padded(self.degree)
        self.den_h = denominator.padded(self.degree)
        self.num_h.setflags(write=False)
        self.den_h.setflags(write=False)
        self._cache: dict = {}
        self._check_coprime()

    @classmethod
    def from_factored(cls, form: FactoredForm, label: str = "map", provenance=None):
        top, bottom = form.expand()
        return cls(top, bottom, label, form, provenance)

    def _check_coprime(self):
        low, high = sorted((self.numerator, self.denominator), key=lambda p: p.degree)
        if low.degree == 0:
            return
        for r in find_roots(low).roots:
            z = r.location
            c = high.coefficients
            if abs(z) <= 1:
                val = abs(high(z))
                scale = float(np.polyval(np.abs(c[::-1]), abs(z)))
            else:
                u = 1 / z
                val = abs(np.polyval(c, u))
                scale = float(np.polyval(np.abs(c), abs(u)))
            if val <= 1e-10 * scale:
                raise DegenerateMap(f"{self.label}: numerator and denominator share root {z}")

    def __call__(self, z) -> SpherePoint:
        return evaluate(self, z)

    def __repr__(self):
        return f"RationalMap({self.label!r}, degree={self.degree})"

    def has_real_coefficients(self, tol: float = 0.0) -> bool:
        return bool(
            np.all(np.abs(self.num_h.imag) <= tol) and np.all(np.abs(self.den_h.imag) <= tol)
        )


def cached_portrait(rmap: RationalMap) -> RamificationPortrait:
    """The portrait at the map's default snapping tolerance, computed once."""
    if "portrait" not in rmap._cache:
        rmap._cache["portrait"] = portrait(rmap)
    return rmap._cache["portrait"]


def critical_pairs(rmap: RationalMap) -> np.ndarray:
    """Critical points as an ``(m, 2)`` array of normalized pairs."""
    if "critical_pairs" not in rmap._cache:
        pts = [c.point.pair() for c in critical_points(rmap)]
        rmap._cache["critical_pairs"] = np.array(pts, dtype=np.complex128).reshape(-1, 2)
    return rmap._cache["critical_pairs"]


def postcritical_pairs(rmap: RationalMap) -> np.ndarray:
    port = cached_portrait(rmap)
    pts = [p.pair() for p in port.postcritical_points()]
    return np.array(pts, dtype=np.complex128).reshape(-1, 2)


def evaluate(rmap: RationalMap, z) -> SpherePoint:
    z = as_point(z)
    wa, wb, _ = kernels.rat_eval(rmap.num_h, rmap.den_h, z.a, z.b)
    if not (np.isfinite(wa) and np.isfinite(wb)):
        raise IndeterminateForm(f"{rmap.label} is 0/0 at {z}")
    return SpherePoint(complex(wa), complex(wb))


def iterate(rmap: RationalMap, z, n: int) -> SpherePoint:
    z = as_point(z)
    for _ in range(n):
        z = evaluate(rmap, z)
    return z


def wronskian(rmap: RationalMap) -> Polynomial | None:
    """``num' den - num den'``; None for a constant map."""
    num, den = rmap.numerator, rmap.denominator
    terms = []
    if num.degree:
        terms.append(poly_mul(poly_derivative(num), den))
    if den.degree:
        terms.append(poly_scale(poly_mul(num, poly_derivative(den)), -1.0))
    total = np.zeros(2 * rmap.degree + 1, dtype=np.complex128)
    for t in terms:
        total[: t.degree + 1] += t.coefficients
    if not np.any(total):
        return None
    return Polynomial(total)


@dataclass(frozen=True)
class CriticalDatum:
    point: SpherePoint
    local_degree: int
    image: SpherePoint


def critical_points(rmap: RationalMap, precision: float | None = None) -> list[CriticalDatum]:
    """Roots of the Wronskian with merged multiplicity, plus infinity when
    the Wronskian's degree falls short of ``2d - 2``.

    ``precision`` (default: the map's ``coefficient_precision`` provenance
    entry, if any) enables a second merge for maps whose coefficients are
    only known to that relative accuracy; see :func:`merge_pseudo_multiple`.
    """
    if rmap.degree < 2:
        raise ValueError("critical points need degree >= 2")
    if precision is None:
        precision = rmap.provenance.get("coefficient_precision")
    w = wronskian(rmap)
    out = []
    for r in find_roots(w).roots:
        p = normalize(r.location, 1.0)
        out.append(CriticalDatum(p, r.multiplicity + 1, evaluate(rmap, p)))
    if precision:
        snap = rmap.provenance.get("snap_tol", config.SNAP_TOL_RHAT)
        out = merge_pseudo_multiple(rmap, w, out, precision, snap)
    at_inf = 2 * rmap.degree - 2 - w.degree
    if at_inf > 0:
        out.append(CriticalDatum(INF, at_inf + 1, evaluate(rmap, INF)))
    return out


def merge_pseudo_multiple(
    rmap: RationalMap,
    w: Polynomial,
    crit: list[CriticalDatum],
    precision: float,
    snap_tol: float,
    link_radius: float = config.CRITICAL_MERGE_LINK,
) -> list[CriticalDatum]:
    """Merge critical points that are one multiple critical point up to the
    coefficient precision.

    Truncating the coefficients of a map with a k-fold critical point
    splits it into k nearby simple ones, about ``precision**(1/k)`` apart.
    Critical points within ``link_radius`` (relative) of each other whose
    images agree within ``snap_tol`` are grouped; a group becomes one
    critical point when the Wronskian's backward error at the weighted
    centroid is at most ``precision``, and is otherwise split along its
    longest spanning-tree edge.
    """
    n = len(crit)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    locs = [c.point.to_complex() for c in crit]
    for i in range(n):
        for j in range(i + 1, n):
            if (
                _rel_dist(locs[i], locs[j]) <= link_radius
                and chordal_distance(crit[i].image, crit[j].image) < snap_tol
            ):
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)

    out = []
    stack = list(groups.values())
    while stack:
        g = stack.pop()
        if len(g) == 1:
            out.append(crit[g[0]])
            continue
        k = sum(crit[i].local_degree - 1 for i in g)
        centre = sum((crit[i].local_degree - 1) * locs[i] for i in g) / k
        if backward_error(w.coefficients, centre) <= precision:
            p = normalize(centre, 1.0)
            out.append(CriticalDatum(p, k + 1, evaluate(rmap, p)))
        else:
            left, _ = _split([locs[i] for i in g])
            keep = set(left)
            stack.append([i for i in g if locs[i] in keep])
            stack.append([i for i in g if locs[i] not in keep])
    out.sort(key=lambda c: (round(c.point.to_complex().real, 12), round(c.point.to_complex().imag, 12)))
    return out


def riemann_hurwitz_sum(crit: Sequence[CriticalDatum]) -> int:
    return sum(c.local_degree - 1 for c in crit)


def preimages(rmap: RationalMap, z) -> list[tuple[SpherePoint, int]]:
    """The fiber ``R^{-1}(z)`` with multiplicities summing to the degree."""
    z = as_point(z)
    c = rmap.num_h * z.b - z.a * rmap.den_h
    nz = np.flatnonzero(c)
    if nz.size == 0:
        raise IndeterminateForm(f"{rmap.label} is constant")
    top = nz[-1]
    out = []
    if top >= 1:
        for r in find_roots(Polynomial(c[: top + 1])).roots:
            out.append((normalize(r.location, 1.0), r.multiplicity))
    if top < rmap.degree:
        out.append((INF, rmap.degree - top))
    return out


@dataclass
class RamificationPortrait:
    """Finite forward-invariant graph through the critical points.

    Node ``i`` sits at ``points[i]`` with local degree ``local_degree[i]``
    and maps to node ``image[i]``. Critical points come first.
    """

    points: list[SpherePoint]
    local_degree: list[int]
    image: list[int]
    critical: list[int]
    postcritical: list[int]
    cycles: list[list[int]]
    has_critical_periodic_orbit: bool
    snap_tol: float
    labels: dict[int, str] = field(default_factory=dict)

    def preimage_nodes(self, node: int) -> list[int]:
        return [q for q, p in enumerate(self.image) if p == node]

    def postcritical_points(self) -> list[SpherePoint]:
        return [self.points[i] for i in self.postcritical]

    def nearest_node(self, z) -> tuple[int, float]:
        z = as_point(z)
        d = [chordal_distance(z, p) for p in self.points]
        i = int(np.argmin(d))
        return i, d[i]

    def node_for(self, z, candidates: Sequence[int] | None = None) -> int:
        pool = self.postcritical if candidates is None else candidates
        return min(pool, key=lambda i: chordal_distance(z, self.points[i]))


def _periodic_refine(rmap, w, tol, max_period=3):
    """A periodic point of period at most ``max_period`` within ``tol`` of ``w``.

    Newton on ``R^p(t) - t`` in the chart where ``|t| <= 1``, with a
    central-difference derivative. Returns None when nothing converges
    close enough.
    """
    flip = abs(w.b) < abs(w.a)

    def point(t):
        return normalize(1.0, t) if flip else normalize(t, 1.0)

    def coord(p):
        return p.b / p.a if flip else p.a / p.b

    t0 = coord(w)
    for p in range(1, max_period + 1):

        def f(t):
            return coord(iterate(rmap, point(t), p)) - t

        t = t0
        try:
            for _ in range(40):
                h = 1e-7 * max(1.0, abs(t))
                df = (f(t + h) - f(t - h)) / (2 * h)
                step = f(t) / df
                t -= step
                if abs(step) <= 1e-12 * max(1.0, abs(t)):
                    break
            z = point(t)
        except (ZeroDivisionError, ArithmeticError, ValueError, OverflowError):
            continue
        if chordal_distance(z, w) < tol and chordal_distance(iterate(rmap, z, p), z) < 1e-9:
            return z
    return None


def portrait(
    rmap: RationalMap,
    snap_tol: float | None = None,
    max_steps: int = 200,
) -> RamificationPortrait:
    """Iterate critical orbits, snapping to existing nodes.

    An image snaps to the nearest node within ``snap_tol`` (chordal). A
    critical node additionally needs the two images to agree within
    ``snap_tol``; the map contracts near a critical point, so this test is
    robust there, and it keeps a pole that sits close to a postcritical
    point (as in "rhat") from absorbing that point.

    Each new node is first moved onto a nearby periodic point of low
    period, if one exists within ``snap_tol``. With
    truncated coefficients the critical values only approximate a
    repelling periodic point, and the raw orbit would run away from it.
    """
    if snap_tol is None:
        snap_tol = rmap.provenance.get("snap_tol", config.SNAP_TOL_EXACT)
    crit = critical_points(rmap)
    ncrit = len(crit)
    points = [c.point for c in crit]
    degs = [c.local_degree for c in crit]
    image: list[int | None] = [None] * ncrit
    crit_images = [c.image for c in crit]

    def find(w):
        dists = [chordal_distance(w, p) for p in points]
        for i in sorted(range(len(points)), key=dists.__getitem__):
            if dists[i] >= snap_tol:
                return None
            if i >= ncrit or chordal_distance(evaluate(rmap, w), crit_images[i]) < snap_tol:
                return i
        return None

    queue = list(range(ncrit))
    added = 0
    while queue:
        u = queue.pop(0)
        w = evaluate(rmap, points[u])
        match = find(w)
        if match is None:
            added += 1
            if added > max_steps:
                raise NotFiniteWithinBudget(
                    f"{rmap.label}: more than {max_steps} orbit points without closing up"
                )
            w = _periodic_refine(rmap, w, snap_tol) or w
            points.append(w)
            degs.append(1)
            image.append(None)
            match = len(points) - 1
            queue.append(match)
        image[u] = match

    post: set[int] = set()
    stack = [image[i] for i in range(ncrit)]
    while stack:
        v = stack.pop()
        if v not in post:
            post.add(v)
            stack.append(image[v])

    cycles = _cycles(image)
    crit_cycle = any(i < ncrit for cyc in cycles for i in cyc)
    port = RamificationPortrait(
        points=points,
        local_degree=degs,
        image=image,
        critical=list(range(ncrit)),
        postcritical=sorted(post),
        cycles=cycles,
        has_critical_periodic_orbit=crit_cycle,
        snap_tol=snap_tol,
    )
    port.labels = {i: point_label(points[i]) for i in port.postcritical}
    return port


def _cycles(image: list[int]) -> list[list[int]]:
    n = len(image)
    state = [0] * n  # 0 unvisited, 1 on current path, 2 done
    cycles = []
    for s in range(n):
        path = []
        v = s
        while state[v] == 0:
            state[v] = 1
            path.append(v)
            v = image[v]
        if state[v] == 1:
            k = path.index(v)
            cyc = path[k:]
            m = cyc.index(min(cyc))
            cycles.append(cyc[m:] + cyc[:m])
        for u in path:
            state[u] = 2
    return sorted(cycles)


def point_label(p: SpherePoint, digits: int = 6) -> str:
    if p.is_infinity:
        return "inf"
    z = p.to_complex()
    re = round(z.real, digits) + 0.0
    im = round(z.imag, digits) + 0.0
    if im == 0:
        return f"{re:g}"
    return f"{re:g}{im:+g}j"


def parse_point(text: str) -> SpherePoint:
    t = text.strip().lower()
    if t in ("inf", "infinity", "oo"):
        return INF
    return normalize(complex(t.replace("i", "j")), 1.0)


@dataclass(frozen=True)
class PcfReport:
    passed: bool
    max_deviation: float
    distances: tuple  # (critical point, critical value, nearest target, distance)
    invariance_deviation: float
    has_critical_periodic_orbit: bool
    riemann_hurwitz: int

    @property
    def worst(self):
        return max(self.distances, key=lambda d: d[3]) if self.distances else None


def verify_pcf(rmap: RationalMap, expected_post: Sequence, tol: float) -> PcfReport:
    """Check every critical value and every image of the target set lands
    within ``tol`` (chordal) of ``expected_post``."""
    targets = [as_point(p) for p in expected_post]
    crit = critical_points(rmap)
    rows = []
    for c in crit:
        dists = [chordal_distance(c.image, t) for t in targets]
        k = int(np.argmin(dists))
        rows.append((c.point, c.image, targets[k], dists[k]))
    inv = max(min(chordal_distance(evaluate(rmap, t), s) for s in targets) for t in targets)
    worst = max(r[3] for r in rows)
    crit_cycle = False
    try:
        crit_cycle = portrait(rmap, snap_tol=tol).has_critical_periodic_orbit
    except NotFiniteWithinBudget:
        pass
    return PcfReport(
        passed=worst < tol and inv < tol,
        max_deviation=worst,
        distances=tuple(rows),
        invariance_deviation=inv,
        has_critical_periodic_orbit=crit_cycle,
        riemann_hurwitz=riemann_hurwitz_sum(crit),
    )


# ---------------------------------------------------------------------------
# map files and catalog
# ---------------------------------------------------------------------------


def _cplx(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    return complex(v[0], v[1] if len(v) > 1 else 0.0)


def _factor_list(items):
    return tuple((Polynomial([_cplx(c) for c in f["coefficients"]]), int(f["multiplicity"])) for f in items)


def map_from_config(cfg: dict, label: str | None = None) -> RationalMap:
    """Build a map from the JSON layouts documented in the README."""
    label = label or cfg.get("label", "map")
    provenance = {
        k: cfg[k]
        for k in ("source", "snap_tol", "coefficient_precision", "expected_post", "expansion", "printed_table")
        if k in cfg
    }
    if "numerator" in cfg:
        order = cfg.get("order", "ascending")
        num = [_cplx(c) for c in cfg["numerator"]]
        den = [_cplx(c) for c in cfg["denominator"]]
        if order == "descending":
            num, den = num[::-1], den[::-1]
        return RationalMap(Polynomial(num), Polynomial(den), label, provenance=provenance)
    form = FactoredForm(
        constant=_cplx(cfg.get("constant", 1.0)),
        affine_offset=_cplx(cfg.get("affine_offset", 0.0)),
        zeros=tuple((complex(z[0], z[1]), int(z[2])) for z in cfg.get("zeros", [])),
        poles=tuple((complex(z[0], z[1]), int(z[2])) for z in cfg.get("poles", [])),
        numerator_factors=_factor_list(cfg.get("numerator_factors", [])),
        denominator_factors=_factor_list(cfg.get("denominator_factors", [])),
    )
    return RationalMap.from_factored(form, label, provenance)


def load_map(source: str) -> RationalMap:
    """A catalog name or a path to a JSON map file."""
    path = Path(source)
    if path.suffix == ".json" or path.exists():
        cfg = json.loads(path.read_text())
        return map_from_config(cfg, cfg.get("label", path.stem))
    return builtin(source)


def _bundled(name: str) -> dict:
    return json.loads(resources.files("snowdyn").joinpath("data", name).read_text())


def _lattes_2222() -> RationalMap:
    # (z^2 + 1)^2 / (4 z (z^2 - 1))
    num = poly_from_factors(factors=[([1, 0, 1], 2)])
    den = poly_from_factors([(0, 1), (1, 1), (-1, 1)], constant=4.0)
    return RationalMap(
        num, den, "lattes_2222",
        provenance={"expected_post": [0, 1, -1, "inf"], "expansion": 2,
                    "signature": [2, 2, 2, 2]},
    )


RHAT_PARAMETERS = ("lambda", "t1", "t2", "t3", "t4", "t5", "t6", "t7",
                   "a1", "a2", "a3", "a4", "a5", "a6", "a7")


def _rhat_parts(p):
    lam, t1, t2, t3, t4, t5, t6, t7, a1, a2, a3, a4, a5, a6, a7 = p
    zeros = ((1.0, 1), (a1, 4), (a2, 5), (-a3, 3), (-a4, 4), (a5, 4))
    num_f = (([a7, -a6, 1.0], 4),)
    den_f = tuple(([t, 0.0, 1.0], 2) for t in (t1, t2, t3, -t4, -t5)) + (([t7, 0.0, -t6, 0.0, 1.0], 2),)
    return lam, zeros, num_f, den_f


def _odd_residual(p):
    lam, zeros, num_f, den_f = _rhat_parts(p)
    n = poly_from_factors(zeros, num_f).coefficients.real
    d = poly_from_factors((), den_f).coefficients.real
    # R(-z) = -R(z) with an even denominator means lam * even(n) + d = 0
    even = lam * n[0::2]
    return (even + d[0::2]) / (np.abs(even) + np.abs(d[0::2]))


def restore_odd_symmetry(table: dict, tol: float = 1e-13, max_iter: int = 50) -> dict:
    """Newton-correct the printed parameters so that ``R(-z) = -R(z)`` holds exactly.

    The printed table satisfies the odd symmetry only up to its truncation
    (the zeros of ``R - 1`` mirror the multiple critical points over -1).
    The symmetry amounts to 15 coefficient equations in the 15 parameters;
    starting from the printed values, Newton converges in a few steps to a
    map whose critical values sit on {-1, 1, inf} to about 1e-10.
    """
    p = np.array([table[k] for k in RHAT_PARAMETERS], dtype=float)
    for _ in range(max_iter):
        r = _odd_residual(p)
        jac = np.empty((len(p), len(p)))
        for k in range(len(p)):
            h = 1e-7 * abs(p[k])
            q = p.copy()
            q[k] += h
            jac[:, k] = (_odd_residual(q) - r) / h
        step = np.linalg.solve(jac, -r)
        p += step
        if np.max(np.abs(step / p)) < tol or np.max(np.abs(_odd_residual(p))) < 1e-14:
            break
    return dict(zip(RHAT_PARAMETERS, map(float, p)))


def rhat_from_table(table: dict, label: str, provenance: dict | None = None) -> RationalMap:
    lam, zeros, num_f, den_f = _rhat_parts([table[k] for k in RHAT_PARAMETERS])
    form = FactoredForm(
        constant=lam,
        affine_offset=1.0,
        zeros=zeros,
        numerator_factors=tuple((Polynomial(c), m) for c, m in num_f),
        denominator_factors=tuple((Polynomial(c), m) for c, m in den_f),
    )
    return RationalMap.from_factored(form, label, provenance)


def _rhat_sym() -> RationalMap:
    cfg = _bundled("rhat.json")
    table = restore_odd_symmetry(cfg["printed_table"])
    prov = {k: cfg[k] for k in ("expansion", "expected_post")}
    prov.update(
        source="printed table corrected to exact odd symmetry R(-z) = -R(z)",
        snap_tol=config.SNAP_TOL_EXACT * 1e2,
        parameters=table,
    )
    return rhat_from_table(table, "rhat_sym", prov)


_CATALOG = {
    "rhat": lambda: map_from_config(_bundled("rhat.json"), "rhat"),
    "rhat_sym": _rhat_sym,
    "lattes_2222": _lattes_2222,
    "squaring": lambda: RationalMap(Polynomial([0, 0, 1]), Polynomial([1]), "squaring"),
    "basilica": lambda: RationalMap(Polynomial([-1, 0, 1]), Polynomial([1]), "basilica"),
}

# maps that must pass the Lattes gate (PCF check plus parabolic signature) before use
_GATED = {"lattes_2222"}


def catalog_names() -> list[str]:
    return sorted(_CATALOG)


@lru_cache(maxsize=None)
def builtin(name: str) -> RationalMap:
    if name not in _CATALOG:
        raise UnknownName(f"unknown map {name!r}; known: {', '.join(catalog_names())}")
    rmap = _CATALOG[name]()
    if name in _GATED:
        _lattes_gate(rmap)
    return rmap


def _lattes_gate(rmap: RationalMap):
    from .orbifold import classify, signature

    rep = verify_pcf(rmap, rmap.provenance["expected_post"], config.SNAP_TOL_EXACT)
    if not rep.passed or rep.has_critical_periodic_orbit:
        raise ValueError(f"{rmap.label} failed the PCF gate: {rep}")
    sig = signature(portrait(rmap))
    if classify(sig) != "parabolic" or sig.values != tuple(rmap.provenance["signature"]):
        raise ValueError(f"{rmap.label} failed the orbifold gate: {sig}")
