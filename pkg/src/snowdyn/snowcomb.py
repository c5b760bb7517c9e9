"""Abstract snowspheres: generator validation, subdivision and the chain metric.

Everything here is combinatorial. A generator is a list of axis-aligned
squares in the integer grid (coordinates scaled by ``N``); a level-``j``
complex is an array of quadrilaterals whose corners are global vertex ids.
Two cylinders are adjacent when they share a vertex, which is exactly
nonempty intersection for a cell complex built from squares.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import config
from ._backend import kernels

AXES = {"xy": (0, 1), "yz": (1, 2), "xz": (0, 2)}
CLAUSES = ("grid", "boundary", "disk", "symmetry", "corner")

# corners of the unit cube, id = x + 2y + 4z; faces listed with cyclic corners
CUBE_FACES = (
    (0, 1, 3, 2),
    (4, 5, 7, 6),
    (0, 1, 5, 4),
    (2, 3, 7, 6),
    (0, 2, 6, 4),
    (1, 3, 7, 5),
)
SINGLE_FACE = ((0, 1, 2, 3),)

# the eight corner orderings of a square related by its dihedral symmetries
DIHEDRAL = tuple(
    tuple((s * k + r) % 4 for k in range(4)) for s in (1, -1) for r in range(4)
)


class ValidationFailure(ValueError):
    def __init__(self, clause: str, message: str):
        super().__init__(f"{clause}: {message}")
        self.clause = clause


class BudgetExceeded(MemoryError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    """Raw generator: ``N`` and faces ``(anchor, axes)`` in units of ``1/N``."""

    N: int
    faces: tuple[tuple[tuple, str], ...]
    name: str = ""

    @classmethod
    def from_dict(cls, data: dict, name: str = "") -> "GeneratorSpec":
        try:
            faces = tuple((tuple(f["anchor"]), str(f["axes"])) for f in data["faces"])
            return cls(data["N"], faces, name)
        except (KeyError, TypeError) as exc:
            raise ValidationFailure("grid", f"malformed generator record: {exc}") from exc


def load_generator_spec(source: str | Path) -> GeneratorSpec:
    """Read a generator JSON file, or a bundled one by name (``main_29``)."""
    path = Path(source)
    if not path.exists():
        stem = path.name[:-5] if path.name.endswith(".json") else path.name
        bundled = resources.files("snowdyn").joinpath("data", "generators", stem + ".json")
        if not bundled.is_file():
            raise FileNotFoundError(f"no generator file or bundled generator named {source!r}")
        return GeneratorSpec.from_dict(json.loads(bundled.read_text()), stem)
    return GeneratorSpec.from_dict(json.loads(path.read_text()), path.stem)


def bundled_generators() -> list[str]:
    folder = resources.files("snowdyn").joinpath("data", "generators")
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))


@dataclass(frozen=True)
class GeneratorComplex:
    """Validated generator as a cell complex.

    ``faces[f]`` lists the four vertex indices of face ``f`` in cyclic order;
    ``vertices`` are integer coordinates. ``side_vertex[k, t]`` is the vertex
    at position ``t`` along side ``k`` of the unit square, walking
    counterclockwise from corner ``k``.
    """

    N: int
    vertices: np.ndarray
    faces: np.ndarray
    edges: np.ndarray
    side_vertex: np.ndarray
    interior: np.ndarray
    embeddable: bool
    name: str = ""

    @property
    def M(self) -> int:
        return len(self.faces)

    @property
    def edge_count(self) -> int:
        return len(self.edges)


def _square(anchor: tuple[int, int, int], axes: str) -> list[tuple[int, int, int]]:
    i, k = AXES[axes]
    a = list(anchor)
    out = []
    for di, dk in ((0, 0), (1, 0), (1, 1), (0, 1)):
        v = list(a)
        v[i] += di
        v[k] += dk
        out.append(tuple(v))
    return out


def _side_point(N: int, k: int, t: int) -> tuple[int, int, int]:
    return ((t, 0, 0), (N, t, 0), (N - t, N, 0), (0, N - t, 0))[k]


def _reflections(N: int):
    return (
        lambda v: (N - v[0], v[1], v[2]),
        lambda v: (v[0], N - v[1], v[2]),
        lambda v: (v[1], v[0], v[2]),
        lambda v: (N - v[1], N - v[0], v[2]),
    )


def build_generator(spec: GeneratorSpec) -> GeneratorComplex:
    """Validate ``spec`` clause by clause and build its cell complex.

    Raises :class:`ValidationFailure` with ``clause`` one of ``grid``,
    ``boundary``, ``disk``, ``symmetry``, ``corner``; the first violated
    clause in that order is reported.
    """
    N = spec.N
    if not isinstance(N, int) or isinstance(N, bool) or N < 2:
        raise ValidationFailure("grid", f"N must be an integer >= 2, got {N!r}")
    if not spec.faces:
        raise ValidationFailure("grid", "no faces")
    squares = []
    for anchor, axes in spec.faces:
        if axes not in AXES:
            raise ValidationFailure("grid", f"axes must be one of xy, yz, xz, got {axes!r}")
        if len(anchor) != 3 or not all(
            isinstance(c, int) and not isinstance(c, bool) for c in anchor
        ):
            raise ValidationFailure("grid", f"anchor {anchor!r} is not a point of the integer grid")
        squares.append(_square(tuple(anchor), axes))
    keys = [frozenset(s) for s in squares]
    if len(set(keys)) != len(keys):
        raise ValidationFailure("grid", "repeated face")

    # edges and their face counts
    edge_faces: dict[frozenset, list[int]] = {}
    for f, sq in enumerate(squares):
        for k in range(4):
            edge_faces.setdefault(frozenset((sq[k], sq[(k + 1) % 4])), []).append(f)
    boundary = {e for e, fs in edge_faces.items() if len(fs) == 1}
    square_boundary = {
        frozenset((_side_point(N, k, t), _side_point(N, k, t + 1)))
        for k in range(4)
        for t in range(N)
    }
    if boundary != square_boundary:
        extra = len(boundary - square_boundary)
        missing = len(square_boundary - boundary)
        raise ValidationFailure(
            "boundary",
            f"boundary differs from the unit square ({extra} extra, {missing} missing unit edges)",
        )

    bad = [e for e, fs in edge_faces.items() if len(fs) > 2]
    if bad:
        raise ValidationFailure("disk", f"{len(bad)} edges shared by more than two faces")
    parent = list(range(len(squares)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for fs in edge_faces.values():
        if len(fs) == 2:
            parent[find(fs[0])] = find(fs[1])
    if len({find(i) for i in range(len(squares))}) != 1:
        raise ValidationFailure("disk", "face set is not connected across edges")
    verts = sorted({v for sq in squares for v in sq})
    chi = len(verts) - len(edge_faces) + len(squares)
    if chi != 1:
        raise ValidationFailure("disk", f"V - E + F = {chi}, a disk needs 1")
    # every vertex link must be a single fan, otherwise two sheets touch at a point
    for v in verts:
        around = [f for f, sq in enumerate(squares) if v in sq]
        link_parent = {f: f for f in around}

        def lfind(i):
            while link_parent[i] != i:
                i = link_parent[i]
            return i

        for e, fs in edge_faces.items():
            if v in e and len(fs) == 2:
                link_parent[lfind(fs[0])] = lfind(fs[1])
        if len({lfind(f) for f in around}) != 1:
            raise ValidationFailure("disk", f"faces around vertex {v} do not form one fan")

    face_set = set(keys)
    for r, name in zip(_reflections(N), ("x=1/2", "y=1/2", "x=y", "x+y=1")):
        if {frozenset(r(v) for v in key) for key in face_set} != face_set:
            raise ValidationFailure("symmetry", f"not symmetric under the reflection in {name}")

    for corner in ((0, 0, 0), (N, 0, 0), (N, N, 0), (0, N, 0)):
        hits = sum(corner in sq for sq in squares)
        if hits != 1:
            raise ValidationFailure("corner", f"{hits} faces meet the corner {corner}")

    index = {v: i for i, v in enumerate(verts)}
    faces = np.array([[index[v] for v in sq] for sq in squares], dtype=np.int64)
    edges = np.array(sorted(tuple(sorted(index[v] for v in e)) for e in edge_faces), dtype=np.int64)
    side = np.array(
        [[index[_side_point(N, k, t)] for t in range(N + 1)] for k in range(4)], dtype=np.int64
    )
    on_boundary = set(side.ravel().tolist())
    interior = np.array([i for i in range(len(verts)) if i not in on_boundary], dtype=np.int64)
    # strictly inside the double pyramid away from the boundary square
    embeddable = all(
        abs(v[2]) < min(v[0], v[1], N - v[0], N - v[1])
        for i, v in enumerate(verts)
        if i not in on_boundary
    )
    vertices = np.array(verts, dtype=np.int64)
    for arr in (vertices, faces, edges, side, interior):
        arr.setflags(write=False)
    return GeneratorComplex(N, vertices, faces, edges, side, interior, embeddable, spec.name)


def snowsphere_hausdorff_dim(generator: GeneratorComplex | tuple[int, int]) -> float:
    """``log M / log N``; also accepts a ``(M, N)`` pair."""
    if isinstance(generator, tuple):
        M, N = generator
    else:
        M, N = generator.M, generator.N
    return math.log(M) / math.log(N)


@dataclass(frozen=True)
class PointAddress:
    """A point of the snowsphere by its nested cylinders, truncated.

    ``base`` is the face of the level-0 complex; ``digits[k]`` picks the
    child (a generator face index) at level ``k + 1``.
    """

    base: int
    digits: tuple[int, ...] = ()

    @property
    def depth(self) -> int:
        return len(self.digits)

    def prefix(self, j: int) -> "PointAddress":
        if j > self.depth:
            raise ValueError(f"address known to level {self.depth}, asked for {j}")
        return PointAddress(self.base, self.digits[:j])

    def __str__(self):
        return ".".join(str(x) for x in (self.base, *self.digits))

    @classmethod
    def parse(cls, text: str) -> "PointAddress":
        parts = [int(p) for p in text.strip().split(".")]
        return cls(parts[0], tuple(parts[1:]))


@dataclass
class SubdivisionComplex:
    """Levels ``0..j`` of the subdivision of a base complex by a generator.

    ``quads[j]`` has one row per ``j``-cylinder giving its corner vertex
    ids; row ``i`` at level ``j + 1`` is child ``i % M`` of cylinder
    ``i // M``. ``edge_vertices[j]`` is the boundary-identification table:
    for each ``j``-edge ``(lo, hi)`` the ids of the ``N - 1`` vertices
    splitting it, ordered from ``lo``.
    """

    generator: GeneratorComplex
    base: str
    quads: list[np.ndarray]
    edge_keys: list[np.ndarray] = field(default_factory=list)
    edge_vertices: list[np.ndarray] = field(default_factory=list)
    vertex_count: list[int] = field(default_factory=list)
    _adjacency: dict = field(default_factory=dict, repr=False)

    @property
    def level(self) -> int:
        return len(self.quads) - 1

    @property
    def M(self) -> int:
        return self.generator.M

    @property
    def N(self) -> int:
        return self.generator.N

    def count(self, j: int) -> int:
        return len(self.quads[j])

    def index(self, addr: PointAddress, j: int | None = None) -> int:
        j = addr.depth if j is None else j
        a = addr.prefix(j)
        if not 0 <= a.base < len(self.quads[0]):
            raise ValueError(f"base face {a.base} out of range")
        i = a.base
        for d in a.digits:
            if not 0 <= d < self.M:
                raise ValueError(f"child index {d} out of range for M = {self.M}")
            i = i * self.M + d
        return i

    def address(self, i: int, j: int) -> PointAddress:
        digits = []
        for _ in range(j):
            i, d = divmod(i, self.M)
            digits.append(d)
        return PointAddress(i, tuple(reversed(digits)))

    def parent(self, i: int) -> int:
        return i // self.M

    def adjacency(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """CSR arrays ``(indptr, indices)`` of vertex-sharing cylinders."""
        if j not in self._adjacency:
            self._adjacency[j] = _vertex_adjacency(self.quads[j])
        return self._adjacency[j]

    def corner_child(self, i: int, j: int, vertex: int) -> int:
        """The child of ``j``-cylinder ``i`` containing its corner ``vertex``."""
        kids = self.quads[j + 1][i * self.M : (i + 1) * self.M]
        hit = np.flatnonzero((kids == vertex).any(axis=1))
        if len(hit) != 1:
            raise ValueError(f"{len(hit)} children of cylinder {i} contain vertex {vertex}")
        return i * self.M + int(hit[0])


def _vertex_adjacency(quads: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = len(quads)
    cyl = np.repeat(np.arange(n, dtype=np.int64), 4)
    vert = quads.ravel()
    order = np.argsort(vert, kind="stable")
    vert, cyl = vert[order], cyl[order]
    starts = np.flatnonzero(np.r_[True, vert[1:] != vert[:-1]])
    sizes = np.diff(np.r_[starts, len(vert)])
    src, dst = [], []
    for s in np.unique(sizes):
        if s < 2:
            continue
        rows = starts[sizes == s][:, None] + np.arange(s)
        groups = cyl[rows]
        a = np.repeat(groups, s, axis=1)
        b = np.tile(groups, (1, s))
        keep = a != b
        src.append(a[keep])
        dst.append(b[keep])
    if src:
        code = np.unique(np.concatenate(src) * n + np.concatenate(dst))
    else:
        code = np.zeros(0, dtype=np.int64)
    u, v = np.divmod(code, n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(u, minlength=n), out=indptr[1:])
    return indptr, np.ascontiguousarray(v, dtype=np.int64)


def _refine(
    gen: GeneratorComplex, quads: np.ndarray, next_id: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Replace every quad by a copy of the generator.

    Corner ``k`` of the generator goes to corner ``k`` of the quad; the
    ``N - 1`` vertices splitting a shared edge get the same ids from both
    sides because they are keyed by the unordered corner pair.
    """
    N = gen.N
    n = len(quads)
    a = quads
    b = np.roll(quads, -1, axis=1)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    keys, inverse = np.unique(np.stack([lo.ravel(), hi.ravel()], axis=1), axis=0, return_inverse=True)
    inverse = inverse.reshape(n, 4)
    sub = next_id + np.arange(len(keys) * (N - 1), dtype=np.int64).reshape(len(keys), N - 1)
    next_id += sub.size
    table = np.empty((n, len(gen.vertices)), dtype=np.int64)
    forward = a < b
    for k in range(4):
        table[:, gen.side_vertex[k, 0]] = a[:, k]
        for t in range(1, N):
            s = np.where(forward[:, k], t, N - t)
            table[:, gen.side_vertex[k, t]] = sub[inverse[:, k], s - 1]
    m = len(gen.interior)
    fresh = next_id + np.arange(n * m, dtype=np.int64).reshape(n, m)
    next_id += n * m
    table[:, gen.interior] = fresh
    children = table[:, gen.faces].reshape(n * gen.M, 4)
    return children, keys, sub, next_id


def subdivide(
    generator: GeneratorComplex,
    levels: int,
    base: str = "cube",
    budget: int = config.CYLINDER_BUDGET,
    orientation_rng: np.random.Generator | None = None,
) -> SubdivisionComplex:
    """Subdivide the cube (or a single square) ``levels`` times.

    ``orientation_rng`` re-rolls the corner order of every cylinder by a
    random symmetry of the square before it is refined; the result is
    isomorphic to the canonical one because the generator is symmetric.
    """
    if base == "cube":
        q0 = np.array(CUBE_FACES, dtype=np.int64)
        nv = 8
    elif base in ("single-face", "single"):
        q0 = np.array(SINGLE_FACE, dtype=np.int64)
        nv = 4
        base = "single-face"
    else:
        raise ValueError(f"base must be 'cube' or 'single-face', got {base!r}")
    total = len(q0) * generator.M**levels
    if total > budget:
        raise BudgetExceeded(
            f"level {levels} needs {total} cylinders, budget is {budget}"
        )
    cx = SubdivisionComplex(generator, base, [q0], vertex_count=[nv])
    perms = np.array(DIHEDRAL, dtype=np.int64)
    quads = q0
    for _ in range(levels):
        if orientation_rng is not None:
            pick = perms[orientation_rng.integers(0, len(perms), len(quads))]
            quads = np.take_along_axis(quads, pick, axis=1)
        quads, keys, sub, nv = _refine(generator, quads, nv)
        cx.quads.append(quads)
        cx.edge_keys.append(keys)
        cx.edge_vertices.append(sub)
        cx.vertex_count.append(nv)
    return cx


def default_levels(generator: GeneratorComplex, budget: int = config.CYLINDER_BUDGET) -> int:
    """Largest ``j`` with ``6 M^j`` within the budget."""
    j = 0
    while 6 * generator.M ** (j + 1) <= budget:
        j += 1
    return j


def chain_length(cx: SubdivisionComplex, a: int, b: int, j: int) -> int:
    """Node count of the shortest ``j``-chain from cylinder ``a`` to ``b``."""
    indptr, indices = cx.adjacency(j)
    d = kernels.bfs_distance(indptr, indices, a, b)
    if d < 0:
        raise ValueError(f"cylinders {a} and {b} are not connected at level {j}")
    return d + 1


def chain_distance(cx: SubdivisionComplex, x: PointAddress, y: PointAddress, j: int) -> float:
    """``d_j(x, y) = N^-j`` times the node count of the shortest chain."""
    return chain_length(cx, cx.index(x, j), cx.index(y, j), j) * float(cx.N) ** -j


def annulus_crossing_min(cx: SubdivisionComplex, j: int) -> int:
    """Shortest ``(j+1)``-chain crossing any ``j``-annulus.

    Returns -1 when no annulus has an outer boundary (a single face at
    level 0).
    """
    if j + 1 > cx.level:
        raise BudgetExceeded(f"level {j + 1} is not built (complex has {cx.level})")
    ij, xj = cx.adjacency(j)
    ic, xc = cx.adjacency(j + 1)
    best, _ = kernels.annulus_min(ij, xj, ic, xc, cx.M)
    return best


def uniform_bound(generator: GeneratorComplex) -> float:
    """Constant ``C`` with ``d_j <= C`` for all pairs and levels.

    Every ``j``-edge is covered by ``N`` ``(j+1)``-edges and a vertex of a
    cylinder reaches a vertex of any child through at most ``E`` child
    edges (``E`` = edge count of the generator); summing the geometric
    series from both ends plus a path of three cube edges gives
    ``2 E N / (N - 1) + 5``.
    """
    E, N = generator.edge_count, generator.N
    return 2 * E * N / (N - 1) + 5


def separation_bounds(generator: GeneratorComplex, m: int) -> tuple[float, float]:
    """Bounds on ``d_j`` for ``j >= m`` when ``m`` is the first disjoint level.

    Below: ``N^-m`` (the chain crosses nested annuli). Above: the two
    cylinders at level ``m - 1`` share a vertex, joined to each point by at
    most ``E N^(j-m+1) / (N - 1)`` ``j``-edges.
    """
    E, N = generator.edge_count, generator.N
    return float(N) ** -m, (2 * E * N / (N - 1) + 2 * N) * float(N) ** -m


@dataclass(frozen=True)
class MetricProbe:
    distances: tuple[float, ...]
    first_disjoint: int | None
    monotone: bool
    bound: float
    within_bound: bool
    N: int

    @property
    def shifted(self) -> tuple[float, ...]:
        """``d_j - 2 N^-j``, nondecreasing from the first disjoint level."""
        return tuple(_shifted(self.distances, self.N))


def _shifted(distances: Sequence[float], N: int) -> list[float]:
    return [d - 2 * float(N) ** -j for j, d in enumerate(distances)]


def metric_probe(
    cx: SubdivisionComplex, x: PointAddress, y: PointAddress, jmax: int | None = None
) -> MetricProbe:
    """``d_j(x, y)`` for ``j <= jmax`` with the convergence diagnostics."""
    jmax = cx.level if jmax is None else jmax
    ds, j0 = [], None
    for j in range(jmax + 1):
        a, b = cx.index(x, j), cx.index(y, j)
        n = chain_length(cx, a, b, j)
        if j0 is None and n >= 3:
            j0 = j
        ds.append(n * float(cx.N) ** -j)
    sh = _shifted(ds, cx.N)
    start = 0 if j0 is None else j0
    # tiny slack for the float subtraction; the integer form is exact
    monotone = all(sh[k + 1] >= sh[k] - 1e-12 for k in range(start, len(sh) - 1))
    bound = uniform_bound(cx.generator)
    return MetricProbe(tuple(ds), j0, monotone, bound, max(ds) <= bound, cx.N)


def random_address(cx: SubdivisionComplex, depth: int, rng: np.random.Generator) -> PointAddress:
    base = int(rng.integers(0, len(cx.quads[0])))
    return PointAddress(base, tuple(int(d) for d in rng.integers(0, cx.M, depth)))


def equivalent_pair(
    cx: SubdivisionComplex, depth: int, rng: np.random.Generator, level: int = 0
) -> tuple[PointAddress, PointAddress]:
    """Two addresses of one point of the snowsphere.

    Pick a ``level``-cylinder, one of its corners ``v`` and another
    cylinder through ``v``; follow the corner child at ``v`` in both down to
    ``depth``. The nested cylinders share ``v`` at every level.
    """
    i = int(rng.integers(0, cx.count(level)))
    v = int(cx.quads[level][i, rng.integers(0, 4)])
    through = np.flatnonzero((cx.quads[level] == v).any(axis=1))
    others = through[through != i]
    k = int(others[rng.integers(0, len(others))]) if len(others) else i
    a, b = i, k
    for j in range(level, depth):
        a = cx.corner_child(a, j, v)
        b = cx.corner_child(b, j, v)
    return cx.address(a, depth), cx.address(b, depth)


def adjacency_edges(cx: SubdivisionComplex, j: int) -> Iterable[tuple[int, int]]:
    indptr, indices = cx.adjacency(j)
    for u in range(len(indptr) - 1):
        for v in indices[indptr[u] : indptr[u + 1]]:
            if u < v:
                yield u, int(v)
