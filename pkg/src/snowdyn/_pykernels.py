"""Pure-Python reference versions of the hot loops.

Same signatures and the same scalar algorithms as ``_kernels.pyx``; used when
the compiled extension is unavailable or ``SNOWDYN_PURE=1`` is set.

Conventions shared with the compiled kernels
--------------------------------------------
* ``num`` and ``den`` are complex128 arrays of equal length ``d + 1``
  (ascending coefficients, zero padded), so the rational map is
  ``[z:w] -> [A(z,w) : B(z,w)]`` with ``A, B`` homogeneous of degree ``d``.
* Sphere points travel as a pair ``(za, zb)`` divided by the larger
  component, so that component is exactly 1.
* Status codes: 0 ok, 1 root finder did not converge, 2 hit a critical
  point (zero spherical derivative).
"""

import math
from collections import deque

import numpy as np

STATUS_OK = 0
STATUS_NO_CONVERGENCE = 1
STATUS_CRITICAL = 2

BACKEND = "python"


def _horner2(c, t):
    """Value and derivative of the polynomial with ascending coefficients c at t."""
    p = 0j
    dp = 0j
    for k in range(len(c) - 1, -1, -1):
        dp = dp * t + p
        p = p * t + c[k]
    return p, dp


def _normalize(a, b):
    if abs(b) >= abs(a):
        return a / b, 1 + 0j
    return 1 + 0j, b / a


def rat_eval(num, den, za, zb):
    """Image and spherical derivative of the map at ``[za:zb]``.

    Returns ``(wa, wb, sharp)`` with ``(wa, wb)`` normalized.
    """
    if abs(zb) >= abs(za):
        t = za / zb
        a, da = _horner2(num, t)
        b, db = _horner2(den, t)
    else:
        t = zb / za
        a, da = _horner2(num[::-1], t)
        b, db = _horner2(den[::-1], t)
    s2 = abs(a) ** 2 + abs(b) ** 2
    sharp = abs(da * b - a * db) * (1.0 + abs(t) ** 2) / s2
    wa, wb = _normalize(a, b)
    return wa, wb, sharp


def _chordal(a, b, c, d):
    return 2.0 * abs(a * d - b * c) / math.sqrt(
        (abs(a) ** 2 + abs(b) ** 2) * (abs(c) ** 2 + abs(d) ** 2)
    )


def lyapunov_orbit(num, den, crit, za, zb, n, guard):
    """Accumulate ``log R#`` along the orbit of ``[za:zb]`` for up to ``n`` steps.

    Stops early, before accumulating, when the current point is within
    ``guard`` (chordal) of a row of ``crit`` or the derivative vanishes.
    Returns ``(log_sum, steps, za, zb, min_dist)``.
    """
    num = [complex(c) for c in num]
    den = [complex(c) for c in den]
    crit = [(complex(c[0]), complex(c[1])) for c in crit]
    total = 0.0
    min_dist = math.inf
    steps = 0
    while steps < n:
        dist = math.inf
        for ca, cb in crit:
            dd = _chordal(za, zb, ca, cb)
            if dd < dist:
                dist = dd
        if dist < min_dist:
            min_dist = dist
        if dist < guard:
            break
        wa, wb, sharp = rat_eval(num, den, za, zb)
        if not (sharp > 0.0) or math.isinf(sharp):
            break
        total += math.log(sharp)
        za, zb = wa, wb
        steps += 1
    return total, steps, za, zb, min_dist


def orbit(num, den, za, zb, n):
    """Orbit points ``z_0 .. z_n`` as an ``(n + 1, 2)`` complex array."""
    num = [complex(c) for c in num]
    den = [complex(c) for c in den]
    out = np.empty((n + 1, 2), dtype=np.complex128)
    out[0] = za, zb
    for k in range(n):
        za, zb, _ = rat_eval(num, den, za, zb)
        out[k + 1] = za, zb
    return out


def newton_polygon_start(coeffs, phase=0.4):
    """Initial approximations on circles read off the Newton polygon.

    Radii come from the upper convex hull of ``(i, log|c_i|)``; each hull
    segment spanning ``k`` indices contributes ``k`` equally spaced points.
    """
    n = len(coeffs) - 1
    pts = [(i, math.log(abs(c))) for i, c in enumerate(coeffs) if c != 0]
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop the middle point when it lies on or below the chord
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    start = []
    for s in range(len(hull) - 1):
        (i0, l0), (i1, l1) = hull[s], hull[s + 1]
        k = i1 - i0
        r = math.exp((l0 - l1) / k)
        for m in range(k):
            ang = 2 * math.pi * m / k + 2 * math.pi * i0 / n + phase
            start.append(r * complex(math.cos(ang), math.sin(ang)))
    return start


def _ratio_and_error(c, abs_c, z):
    """Newton ratio p/p' and relative backward error at z, evaluated in the chart |t| <= 1."""
    n = len(c) - 1
    if abs(z) <= 1.0:
        p, dp = _horner2(c, z)
        scale = 0.0
        az = abs(z)
        for k in range(n, -1, -1):
            scale = scale * az + abs_c[k]
        err = abs(p) / scale
        if dp == 0:
            return None, err
        return p / dp, err
    u = 1.0 / z
    q, dq = _horner2(c[::-1], u)
    scale = 0.0
    au = abs(u)
    for k in range(0, n + 1):
        scale = scale * au + abs_c[k]
    err = abs(q) / scale
    den = n * q - u * dq
    if den == 0:
        return None, err
    return z * q / den, err


def aberth(coeffs, tol, max_iter, phase=0.4):
    """Aberth-Ehrlich iteration with Gauss-Seidel updates.

    ``coeffs`` ascending with nonzero leading and constant terms.
    Returns ``(roots, backward_errors, iterations)``.
    """
    c = [complex(x) for x in coeffs]
    n = len(c) - 1
    if n == 1:
        r = -c[0] / c[1]
        return np.array([r]), np.zeros(1), 0
    abs_c = [abs(x) for x in c]
    z = newton_polygon_start(c, phase)
    err = [math.inf] * n
    done = [False] * n
    it = 0
    while it < max_iter and not all(done):
        it += 1
        for i in range(n):
            if done[i]:
                continue
            ratio, e = _ratio_and_error(c, abs_c, z[i])
            err[i] = e
            if ratio is None:
                z[i] = z[i] * (1 + 1e-8j) + 1e-12
                continue
            s = 0j
            zi = z[i]
            for j in range(n):
                if j != i:
                    s += 1.0 / (zi - z[j])
            corr = ratio / (1.0 - ratio * s)
            z[i] = zi - corr
            if e <= tol:
                done[i] = True
    for i in range(n):
        _, err[i] = _ratio_and_error(c, abs_c, z[i])
    return np.array(z), np.array(err), it


def _solve_fiber(num, den, za, zb, tol, max_iter):
    """Preimages of [za:zb] as normalized pairs; None when the solve fails."""
    d = len(num) - 1
    c = [num[k] * zb - za * den[k] for k in range(d + 1)]
    cmax = max(abs(x) for x in c)
    reverse = abs(c[d]) < 1e-12 * cmax
    if reverse:
        c = c[::-1]
    low = 0
    while c[low] == 0:
        low += 1
    roots = [0j] * low
    if low < d:
        r, err, _ = aberth(c[low:], tol, max_iter)
        if np.any(err > tol * 1e3):
            return None
        roots.extend(r)
    out = []
    for w in roots:
        if reverse:
            w = (1.0, w) if abs(w) <= 1.0 else (1.0 / w, 1.0)
            out.append((complex(w[0]), complex(w[1])))
        elif abs(w) <= 1.0:
            out.append((complex(w), 1 + 0j))
        else:
            out.append((1 + 0j, complex(1.0 / w)))
    return out


def kappa_tree(num, den, za, zb, j, tol, max_iter):
    """Sum of ``(R^j)#(w)^-2`` over the full fiber ``R^-j([za:zb])``.

    Returns ``(kappa, count, status)``; ``count`` is the number of fiber
    points visited (``d**j`` on success).
    """
    num = [complex(x) for x in num]
    den = [complex(x) for x in den]

    def rec(a, b, level, weight):
        if level == 0:
            return weight, 1, STATUS_OK
        fib = _solve_fiber(num, den, a, b, tol, max_iter)
        if fib is None:
            return 0.0, 0, STATUS_NO_CONVERGENCE
        total = 0.0
        count = 0
        for wa, wb in fib:
            _, _, sharp = rat_eval(num, den, wa, wb)
            if not sharp > 0.0:
                return 0.0, count, STATUS_CRITICAL
            k, c, st = rec(wa, wb, level - 1, weight / (sharp * sharp))
            if st != STATUS_OK:
                return 0.0, count + c, st
            total += k
            count += c
        return total, count, STATUS_OK

    return rec(complex(za), complex(zb), j, 1.0)


def bfs_distance(indptr, indices, source, target):
    """Edge count of a shortest path, or -1 when unreachable."""
    if source == target:
        return 0
    n = len(indptr) - 1
    dist = np.full(n, -1, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                if v == target:
                    return int(dist[v])
                queue.append(v)
    return -1


def annulus_min(indptr_j, indices_j, indptr_c, indices_c, m):
    """Shortest child chain crossing each annulus; returns ``(min_len, argmin)``.

    Level-j cylinder ``x`` has children ``x*m .. x*m + m - 1`` in the child
    graph. Chains live in the children of the neighbours of ``x``; they start
    at a child touching a child of ``x`` and end at a child touching a child
    of a cylinder outside ``x`` and its neighbours.
    """
    n = len(indptr_j) - 1
    best = -1
    arg = -1
    for x in range(n):
        ring = set(indices_j[indptr_j[x]:indptr_j[x + 1]].tolist())
        region = set()
        for y in ring:
            region.update(range(y * m, y * m + m))
        dist = {}
        queue = deque()
        targets = set()
        for c in region:
            touches_inner = False
            touches_outer = False
            for k in range(indptr_c[c], indptr_c[c + 1]):
                p = indices_c[k] // m
                if p == x:
                    touches_inner = True
                elif p not in ring:
                    touches_outer = True
            if touches_outer:
                targets.add(c)
            if touches_inner:
                dist[c] = 1
                queue.append(c)
        found = -1
        while queue:
            u = queue.popleft()
            if u in targets:
                found = dist[u]
                break
            for k in range(indptr_c[u], indptr_c[u + 1]):
                v = int(indices_c[k])
                if v in region and v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        if found >= 0 and (best < 0 or found < best):
            best = found
            arg = x
    return best, arg
