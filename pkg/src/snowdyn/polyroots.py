"""Complex polynomials and a simultaneous root finder with multiplicities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import config
from ._backend import kernels
from .sphere import SpherePoint, as_point, normalize


class NoConvergence(ArithmeticError):
    def __init__(self, iterations: int, worst_residual: float):
        super().__init__(
            f"root finder stalled after {iterations} iterations "
            f"(worst backward error {worst_residual:.3g})"
        )
        self.iterations = iterations
        self.worst_residual = worst_residual


class Polynomial:
    """Ascending complex coefficients with a nonzero leading term.

    The zero polynomial is not representable; a constant is degree 0.
    """

    __slots__ = ("coefficients",)

    def __init__(self, coefficients: Iterable):
        c = np.asarray(list(coefficients), dtype=np.complex128)
        nz = np.flatnonzero(c)
        if nz.size == 0:
            raise ValueError("zero polynomial")
        self.coefficients = c[: nz[-1] + 1].copy()
        self.coefficients.setflags(write=False)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, z: complex) -> complex:
        acc = 0j
        for c in self.coefficients[::-1]:
            acc = acc * z + c
        return acc

    def padded(self, degree: int) -> np.ndarray:
        out = np.zeros(degree + 1, dtype=np.complex128)
        out[: len(self.coefficients)] = self.coefficients
        return out

    def __eq__(self, other):
        return isinstance(other, Polynomial) and np.array_equal(
            self.coefficients, other.coefficients
        )

    def __repr__(self):
        return f"Polynomial(degree={self.degree})"


def poly_eval(p: Polynomial, z) -> SpherePoint:
    """Evaluate in the chart where the argument has modulus at most one."""
    z = as_point(z)
    n = p.degree
    c = p.coefficients
    if abs(z.b) >= abs(z.a):
        t = z.a / z.b
        return normalize(p(t), 1.0)
    # [a : b] with |b| < |a| = 1: p(a/b) = P(1, s) / s^n where s = b/a
    s = z.b / z.a
    acc = 0j
    for k in range(n + 1):
        acc = acc * s + c[k]
    if n == 0:
        return normalize(acc, 1.0)
    return normalize(acc, s**n)


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    return Polynomial(np.convolve(p.coefficients, q.coefficients))


def poly_add(p: Polynomial, q: Polynomial) -> Polynomial:
    n = max(p.degree, q.degree)
    return Polynomial(p.padded(n) + q.padded(n))


def poly_scale(p: Polynomial, k: complex) -> Polynomial:
    return Polynomial(p.coefficients * k)


def poly_derivative(p: Polynomial) -> Polynomial:
    if p.degree == 0:
        raise ValueError("derivative of a constant is the zero polynomial")
    k = np.arange(1, p.degree + 1)
    return Polynomial(p.coefficients[1:] * k)


def poly_pow(p: Polynomial, m: int) -> Polynomial:
    out = Polynomial([1.0])
    for _ in range(m):
        out = poly_mul(out, p)
    return out


def poly_from_factors(
    roots: Sequence[tuple[complex, int]] = (),
    factors: Sequence[tuple[Sequence[complex] | Polynomial, int]] = (),
    constant: complex = 1.0,
) -> Polynomial:
    """``constant * prod (z - r)^m * prod f(z)^m``.

    ``factors`` holds higher-degree factors (ascending coefficients), such
    as ``z^2 - a z + b`` written ``[b, -a, 1]``.
    """
    out = Polynomial([constant])
    for r, m in roots:
        out = poly_mul(out, poly_pow(Polynomial([-complex(r), 1.0]), int(m)))
    for f, m in factors:
        f = f if isinstance(f, Polynomial) else Polynomial(f)
        out = poly_mul(out, poly_pow(f, int(m)))
    return out


@dataclass(frozen=True)
class Root:
    location: complex
    multiplicity: int
    residual: float


@dataclass(frozen=True)
class RootSet:
    roots: tuple[Root, ...]

    @property
    def degree(self) -> int:
        return sum(r.multiplicity for r in self.roots)

    def locations(self) -> np.ndarray:
        return np.array([r.location for r in self.roots], dtype=np.complex128)

    def multiplicities(self) -> list[int]:
        return [r.multiplicity for r in self.roots]

    def expanded(self) -> np.ndarray:
        """Each root repeated by multiplicity."""
        return np.repeat(self.locations(), self.multiplicities())


def backward_error(coeffs: np.ndarray, z: complex) -> float:
    """``|p(z)| / sum |c_k| |z|^k``, evaluated without overflow."""
    c = np.asarray(coeffs)
    if abs(z) <= 1:
        p = 0j
        s = 0.0
        az = abs(z)
        for k in range(len(c) - 1, -1, -1):
            p = p * z + c[k]
            s = s * az + abs(c[k])
        return abs(p) / s if s else 0.0
    u = 1 / z
    p = 0j
    s = 0.0
    au = abs(u)
    for k in range(len(c)):
        p = p * u + c[k]
        s = s * au + abs(c[k])
    return abs(p) / s


def _rel_dist(a: complex, b: complex) -> float:
    return abs(a - b) / max(1.0, abs(a), abs(b))


def _split(group: list[complex]) -> tuple[list[complex], list[complex]]:
    """Cut the longest edge of the group's minimum spanning tree."""
    n = len(group)
    in_tree = [False] * n
    best = [math.inf] * n
    link = [-1] * n
    best[0] = 0.0
    edges = []
    for _ in range(n):
        u = min((i for i in range(n) if not in_tree[i]), key=lambda i: best[i])
        in_tree[u] = True
        if link[u] >= 0:
            edges.append((best[u], link[u], u))
        for v in range(n):
            if not in_tree[v]:
                d = _rel_dist(group[u], group[v])
                if d < best[v]:
                    best[v] = d
                    link[v] = u
    edges.sort()
    edges.pop()  # drop the longest edge
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for _, u, v in edges:
        parent[find(u)] = find(v)
    root0 = find(0)
    left = [group[i] for i in range(n) if find(i) == root0]
    right = [group[i] for i in range(n) if find(i) != root0]
    return left, right


def cluster_roots(
    coeffs: np.ndarray,
    approx: Sequence[complex],
    backward_tol: float = config.CLUSTER_BACKWARD_TOL,
    link_radius: float = config.CLUSTER_LINK_RADIUS,
) -> list[tuple[complex, int]]:
    """Merge numerically split multiple roots.

    Roots within ``link_radius`` (relative) are chained into candidate
    groups. A group is one root of multiplicity ``len(group)`` when the
    polynomial's backward error at the group centroid is below
    ``backward_tol``; the centroid of a split k-fold root is accurate to
    working precision even though the members scatter by ``eps**(1/k)``.
    Failing groups are split along their longest spanning-tree edge.
    """
    approx = list(approx)
    n = len(approx)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if _rel_dist(approx[i], approx[j]) <= link_radius:
                parent[find(i)] = find(j)
    groups: dict[int, list[complex]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(approx[i])

    out: list[tuple[complex, int]] = []
    stack = list(groups.values())
    while stack:
        g = stack.pop()
        if len(g) == 1:
            out.append((g[0], 1))
            continue
        c = complex(np.mean(g))
        if backward_error(coeffs, c) <= backward_tol:
            out.append((_polish_multiple(coeffs, c, len(g), g), len(g)))
        else:
            stack.extend(_split(g))
    return out


def _polish_multiple(coeffs: np.ndarray, c: complex, k: int, group) -> complex:
    """Newton on the (k-1)-th derivative, where a k-fold root is simple.

    Keeps the centroid when the iterate leaves the cluster.
    """
    d = np.asarray(coeffs, dtype=np.complex128)
    for _ in range(k - 1):
        d = d[1:] * np.arange(1, len(d))
    dd = d[1:] * np.arange(1, len(d))
    spread = max(abs(z - c) for z in group)
    z = c
    for _ in range(8):
        p = np.polyval(d[::-1], z)
        q = np.polyval(dd[::-1], z)
        if q == 0:
            break
        step = p / q
        z = z - step
        if abs(step) <= 1e-16 * max(1.0, abs(z)):
            break
    if not np.isfinite(z) or abs(z - c) > spread:
        return c
    return complex(z)


def find_roots(
    p: Polynomial,
    tol: float = config.ROOT_TOL,
    max_iter: int = config.ROOT_MAX_ITER,
    backward_tol: float = config.CLUSTER_BACKWARD_TOL,
    link_radius: float = config.CLUSTER_LINK_RADIUS,
) -> RootSet:
    """All roots of ``p`` with multiplicity.

    Aberth-Ehrlich iteration from Newton-polygon circles, then cluster
    merging (see :func:`cluster_roots`). Raises :class:`NoConvergence` when
    some approximation's backward error stays above ``100 * tol`` after two
    differently rotated starts.
    """
    if p.degree < 1:
        raise ValueError("find_roots needs degree >= 1")
    c = p.coefficients
    low = int(np.flatnonzero(c)[0])
    found: list[tuple[complex, int]] = []
    if low:
        found.append((0j, low))
    rest = c[low:]
    if len(rest) > 1:
        worst = math.inf
        iters = 0
        for phase in (0.4, 1.9):
            approx, errs, iters = kernels.aberth(rest, tol, max_iter, phase)
            worst = float(np.max(errs))
            if worst <= 100 * tol:
                break
        else:
            raise NoConvergence(iters, worst)
        found.extend(cluster_roots(rest, approx, backward_tol, link_radius))
    found.sort(key=lambda rm: (round(rm[0].real, 12), round(rm[0].imag, 12)))
    return RootSet(
        tuple(Root(complex(z), m, backward_error(c, z)) for z, m in found)
    )
