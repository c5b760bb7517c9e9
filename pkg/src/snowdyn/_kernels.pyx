# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Semantics mirror ``_pykernels``; see its docstring."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, exp, cos, sin, fabs, INFINITY, M_PI, isinf
from libc.stdlib cimport malloc, free

cnp.import_array()

ctypedef double complex cplx

cdef extern from "complex.h" nogil:
    double cabs(double complex)

BACKEND = "cython"

STATUS_OK = 0
STATUS_NO_CONVERGENCE = 1
STATUS_CRITICAL = 2


cdef inline void horner2(const cplx* c, Py_ssize_t n, cplx t, cplx* p, cplx* dp) noexcept nogil:
    # c has n + 1 ascending coefficients
    cdef cplx pv = 0
    cdef cplx dv = 0
    cdef Py_ssize_t k
    for k in range(n, -1, -1):
        dv = dv * t + pv
        pv = pv * t + c[k]
    p[0] = pv
    dp[0] = dv


cdef inline void horner2_rev(const cplx* c, Py_ssize_t n, cplx t, cplx* p, cplx* dp) noexcept nogil:
    # evaluates the reversed coefficient list c[n], ..., c[0]
    cdef cplx pv = 0
    cdef cplx dv = 0
    cdef Py_ssize_t k
    for k in range(0, n + 1):
        dv = dv * t + pv
        pv = pv * t + c[k]
    p[0] = pv
    dp[0] = dv


cdef inline double abs2(cplx z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline double sharp_eval(const cplx* num, const cplx* den, Py_ssize_t d,
                              cplx za, cplx zb, cplx* wa, cplx* wb) noexcept nogil:
    cdef cplx t, a, da, b, db
    cdef double s2, sharp
    if cabs(zb) >= cabs(za):
        t = za / zb
        horner2(num, d, t, &a, &da)
        horner2(den, d, t, &b, &db)
    else:
        t = zb / za
        horner2_rev(num, d, t, &a, &da)
        horner2_rev(den, d, t, &b, &db)
    s2 = abs2(a) + abs2(b)
    sharp = cabs(da * b - a * db) * (1.0 + abs2(t)) / s2
    if cabs(b) >= cabs(a):
        wa[0] = a / b
        wb[0] = 1.0
    else:
        wa[0] = 1.0
        wb[0] = b / a
    return sharp


cdef inline double chordal(cplx a, cplx b, cplx c, cplx d) noexcept nogil:
    return 2.0 * cabs(a * d - b * c) / sqrt((abs2(a) + abs2(b)) * (abs2(c) + abs2(d)))


def rat_eval(const cplx[::1] num, const cplx[::1] den, cplx za, cplx zb):
    cdef cplx wa, wb
    cdef double s = sharp_eval(&num[0], &den[0], num.shape[0] - 1, za, zb, &wa, &wb)
    return wa, wb, s


def lyapunov_orbit(const cplx[::1] num, const cplx[::1] den, crit, cplx za, cplx zb,
                   Py_ssize_t n, double guard):
    cdef const cplx[:, ::1] cr = np.ascontiguousarray(crit, dtype=np.complex128).reshape(-1, 2)
    cdef Py_ssize_t d = num.shape[0] - 1
    cdef Py_ssize_t k = cr.shape[0]
    cdef Py_ssize_t steps = 0, i
    cdef double total = 0.0, min_dist = INFINITY, dist, dd, sharp
    cdef cplx wa, wb
    with nogil:
        while steps < n:
            dist = INFINITY
            for i in range(k):
                dd = chordal(za, zb, cr[i, 0], cr[i, 1])
                if dd < dist:
                    dist = dd
            if dist < min_dist:
                min_dist = dist
            if dist < guard:
                break
            sharp = sharp_eval(&num[0], &den[0], d, za, zb, &wa, &wb)
            if not (sharp > 0.0) or isinf(sharp):
                break
            total += log(sharp)
            za = wa
            zb = wb
            steps += 1
    return total, steps, za, zb, min_dist


def orbit(const cplx[::1] num, const cplx[::1] den, cplx za, cplx zb, Py_ssize_t n):
    out = np.empty((n + 1, 2), dtype=np.complex128)
    cdef cplx[:, ::1] o = out
    cdef Py_ssize_t d = num.shape[0] - 1, k
    cdef cplx wa, wb
    o[0, 0] = za
    o[0, 1] = zb
    with nogil:
        for k in range(n):
            sharp_eval(&num[0], &den[0], d, za, zb, &wa, &wb)
            za = wa
            zb = wb
            o[k + 1, 0] = za
            o[k + 1, 1] = zb
    return out


cdef void newton_start(const cplx* c, Py_ssize_t n, double phase, cplx* z) noexcept nogil:
    cdef Py_ssize_t* hx = <Py_ssize_t*> malloc((n + 1) * sizeof(Py_ssize_t))
    cdef double* hy = <double*> malloc((n + 1) * sizeof(double))
    cdef Py_ssize_t h = 0, i, s, m, k, pos = 0
    cdef double y, r, ang
    for i in range(n + 1):
        if c[i].real == 0 and c[i].imag == 0:
            continue
        y = log(cabs(c[i]))
        while h >= 2:
            if (hx[h - 1] - hx[h - 2]) * (y - hy[h - 2]) - (hy[h - 1] - hy[h - 2]) * (i - hx[h - 2]) >= 0:
                h -= 1
            else:
                break
        hx[h] = i
        hy[h] = y
        h += 1
    for s in range(h - 1):
        k = hx[s + 1] - hx[s]
        r = exp((hy[s] - hy[s + 1]) / k)
        for m in range(k):
            ang = 2 * M_PI * m / k + 2 * M_PI * hx[s] / n + phase
            z[pos] = r * (cos(ang) + 1j * sin(ang))
            pos += 1
    free(hx)
    free(hy)


cdef inline double ratio_err(const cplx* c, const double* ac, Py_ssize_t n, cplx z,
                             cplx* ratio, bint* ok) noexcept nogil:
    cdef cplx p, dp, u, den
    cdef double scale = 0.0, az, err
    cdef Py_ssize_t k
    if cabs(z) <= 1.0:
        horner2(c, n, z, &p, &dp)
        az = cabs(z)
        for k in range(n, -1, -1):
            scale = scale * az + ac[k]
        err = cabs(p) / scale
        if dp.real == 0 and dp.imag == 0:
            ok[0] = False
        else:
            ok[0] = True
            ratio[0] = p / dp
        return err
    u = 1.0 / z
    horner2_rev(c, n, u, &p, &dp)
    az = cabs(u)
    for k in range(0, n + 1):
        scale = scale * az + ac[k]
    err = cabs(p) / scale
    den = n * p - u * dp
    if den.real == 0 and den.imag == 0:
        ok[0] = False
    else:
        ok[0] = True
        ratio[0] = z * p / den
    return err


cdef Py_ssize_t aberth_core(const cplx* c, Py_ssize_t n, double tol, Py_ssize_t max_iter,
                            double phase, cplx* z, double* err) noexcept nogil:
    cdef double* ac = <double*> malloc((n + 1) * sizeof(double))
    cdef bint* done = <bint*> malloc(n * sizeof(bint))
    cdef Py_ssize_t i, j, it = 0, remaining = n
    cdef cplx s, zi, ratio, corr
    cdef bint ok
    cdef double e
    if n == 1:
        z[0] = -c[0] / c[1]
        err[0] = 0.0
        free(ac)
        free(done)
        return 0
    for i in range(n + 1):
        ac[i] = cabs(c[i])
    newton_start(c, n, phase, z)
    for i in range(n):
        done[i] = False
        err[i] = INFINITY
    while it < max_iter and remaining > 0:
        it += 1
        for i in range(n):
            if done[i]:
                continue
            e = ratio_err(c, ac, n, z[i], &ratio, &ok)
            err[i] = e
            if not ok:
                z[i] = z[i] * (1 + 1e-8j) + 1e-12
                continue
            s = 0
            zi = z[i]
            for j in range(n):
                if j != i:
                    s = s + 1.0 / (zi - z[j])
            corr = ratio / (1.0 - ratio * s)
            z[i] = zi - corr
            if e <= tol:
                done[i] = True
                remaining -= 1
    for i in range(n):
        err[i] = ratio_err(c, ac, n, z[i], &ratio, &ok)
    free(ac)
    free(done)
    return it


def aberth(coeffs, double tol, Py_ssize_t max_iter, double phase=0.4):
    cdef const cplx[::1] c = np.ascontiguousarray(coeffs, dtype=np.complex128)
    cdef Py_ssize_t n = c.shape[0] - 1
    roots = np.empty(n, dtype=np.complex128)
    errs = np.empty(n, dtype=np.float64)
    cdef cplx[::1] z = roots
    cdef double[::1] e = errs
    cdef Py_ssize_t it
    with nogil:
        it = aberth_core(&c[0], n, tol, max_iter, phase, &z[0], &e[0])
    return roots, errs, it


cdef int solve_fiber(const cplx* num, const cplx* den, Py_ssize_t d, cplx za, cplx zb,
                     double tol, Py_ssize_t max_iter, cplx* fa, cplx* fb) noexcept nogil:
    cdef cplx* c = <cplx*> malloc((d + 1) * sizeof(cplx))
    cdef cplx* z = <cplx*> malloc(d * sizeof(cplx))
    cdef double* err = <double*> malloc(d * sizeof(double))
    cdef Py_ssize_t k, low = 0
    cdef double cmax = 0.0
    cdef bint reverse
    cdef cplx tmp, w
    cdef int status = 0
    for k in range(d + 1):
        c[k] = num[k] * zb - za * den[k]
        if cabs(c[k]) > cmax:
            cmax = cabs(c[k])
    reverse = cabs(c[d]) < 1e-12 * cmax
    if reverse:
        for k in range((d + 1) // 2):
            tmp = c[k]
            c[k] = c[d - k]
            c[d - k] = tmp
    while c[low].real == 0 and c[low].imag == 0:
        z[low] = 0
        low += 1
    if low < d:
        aberth_core(c + low, d - low, tol, max_iter, 0.4, z + low, err + low)
        for k in range(low, d):
            if err[k] > tol * 1e3:
                status = 1
    for k in range(d):
        w = z[k]
        if reverse:
            if cabs(w) <= 1.0:
                fa[k] = 1.0
                fb[k] = w
            else:
                fa[k] = 1.0 / w
                fb[k] = 1.0
        elif cabs(w) <= 1.0:
            fa[k] = w
            fb[k] = 1.0
        else:
            fa[k] = 1.0
            fb[k] = 1.0 / w
    free(c)
    free(z)
    free(err)
    return status


cdef int kappa_rec(const cplx* num, const cplx* den, Py_ssize_t d, cplx za, cplx zb,
                   Py_ssize_t level, double weight, double tol, Py_ssize_t max_iter,
                   double* total, long long* count) noexcept nogil:
    cdef cplx* fa
    cdef cplx* fb
    cdef cplx wa, wb
    cdef Py_ssize_t k
    cdef int st
    cdef double sharp
    if level == 0:
        total[0] += weight
        count[0] += 1
        return 0
    fa = <cplx*> malloc(d * sizeof(cplx))
    fb = <cplx*> malloc(d * sizeof(cplx))
    st = solve_fiber(num, den, d, za, zb, tol, max_iter, fa, fb)
    if st == 0:
        for k in range(d):
            sharp = sharp_eval(num, den, d, fa[k], fb[k], &wa, &wb)
            if not (sharp > 0.0):
                st = 2
                break
            st = kappa_rec(num, den, d, fa[k], fb[k], level - 1, weight / (sharp * sharp),
                           tol, max_iter, total, count)
            if st != 0:
                break
    free(fa)
    free(fb)
    return st


def kappa_tree(const cplx[::1] num, const cplx[::1] den, cplx za, cplx zb, Py_ssize_t j,
               double tol, Py_ssize_t max_iter):
    cdef double total = 0.0
    cdef long long count = 0
    cdef int st
    cdef Py_ssize_t d = num.shape[0] - 1
    with nogil:
        st = kappa_rec(&num[0], &den[0], d, za, zb, j, 1.0, tol, max_iter, &total, &count)
    if st != 0:
        total = 0.0
    return total, count, st


def kappa_batch(const cplx[::1] num, const cplx[::1] den, const cplx[:, ::1] pts, Py_ssize_t j,
                double tol, Py_ssize_t max_iter):
    """kappa_tree over the rows of ``pts``; returns (kappa, count, status) arrays."""
    cdef Py_ssize_t m = pts.shape[0], i
    cdef Py_ssize_t d = num.shape[0] - 1
    kap = np.zeros(m, dtype=np.float64)
    cnt = np.zeros(m, dtype=np.int64)
    sts = np.zeros(m, dtype=np.int32)
    cdef double[::1] kv = kap
    cdef long long[::1] cv = cnt
    cdef int[::1] sv = sts
    cdef double total
    cdef long long count
    cdef int st
    with nogil:
        for i in range(m):
            total = 0.0
            count = 0
            st = kappa_rec(&num[0], &den[0], d, pts[i, 0], pts[i, 1], j, 1.0,
                           tol, max_iter, &total, &count)
            kv[i] = total if st == 0 else 0.0
            cv[i] = count
            sv[i] = st
    return kap, cnt, sts


def bfs_distance(const long long[::1] indptr, const long long[::1] indices,
                 Py_ssize_t source, Py_ssize_t target):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    if source == target:
        return 0
    dist_arr = np.full(n, -1, dtype=np.int64)
    queue_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] dist = dist_arr
    cdef long long[::1] queue = queue_arr
    cdef Py_ssize_t head = 0, tail = 0, u, v, k
    cdef long long found = -1
    with nogil:
        dist[source] = 0
        queue[tail] = source
        tail += 1
        while head < tail and found < 0:
            u = queue[head]
            head += 1
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    if v == target:
                        found = dist[v]
                        break
                    queue[tail] = v
                    tail += 1
    return int(found)


def annulus_min(const long long[::1] indptr_j, const long long[::1] indices_j,
                const long long[::1] indptr_c, const long long[::1] indices_c,
                Py_ssize_t m):
    cdef Py_ssize_t n = indptr_j.shape[0] - 1
    cdef Py_ssize_t nc = indptr_c.shape[0] - 1
    ring_arr = np.full(n, -1, dtype=np.int64)
    seen_arr = np.full(nc, -1, dtype=np.int64)
    dist_arr = np.zeros(nc, dtype=np.int64)
    tgt_arr = np.full(nc, -1, dtype=np.int64)
    queue_arr = np.empty(nc, dtype=np.int64)
    cdef long long[::1] ring = ring_arr
    cdef long long[::1] seen = seen_arr
    cdef long long[::1] dist = dist_arr
    cdef long long[::1] tgt = tgt_arr
    cdef long long[::1] queue = queue_arr
    cdef Py_ssize_t x, yk, y, c, k, p, head, tail, u, v
    cdef bint inner, outer
    cdef long long best = -1, found
    cdef Py_ssize_t arg = -1
    with nogil:
        for x in range(n):
            for yk in range(indptr_j[x], indptr_j[x + 1]):
                ring[indices_j[yk]] = x
            head = 0
            tail = 0
            for yk in range(indptr_j[x], indptr_j[x + 1]):
                y = indices_j[yk]
                for c in range(y * m, y * m + m):
                    inner = False
                    outer = False
                    for k in range(indptr_c[c], indptr_c[c + 1]):
                        p = indices_c[k] // m
                        if p == x:
                            inner = True
                        elif ring[p] != x:
                            outer = True
                    if outer:
                        tgt[c] = x
                    if inner:
                        seen[c] = x
                        dist[c] = 1
                        queue[tail] = c
                        tail += 1
            found = -1
            while head < tail:
                u = queue[head]
                head += 1
                if tgt[u] == x:
                    found = dist[u]
                    break
                for k in range(indptr_c[u], indptr_c[u + 1]):
                    v = indices_c[k]
                    if ring[v // m] == x and seen[v] != x:
                        seen[v] = x
                        dist[v] = dist[u] + 1
                        queue[tail] = v
                        tail += 1
            if found >= 0 and (best < 0 or found < best):
                best = found
                arg = x
    return int(best), int(arg)
