# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels; see ``_kernels_py`` for semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp, INFINITY, NAN, isfinite

cnp.import_array()

BACKEND = "cython"

SPLIT_TIE_RTOL = 1e-9
cdef double _TAU = 1e-12


cdef double SPLIT_TIE_RTOL_C = 1e-9


cdef inline double _tie_tol(double parent) noexcept nogil:
    return SPLIT_TIE_RTOL_C * parent + 1e-300


def split_tie_tol(parent_sse):
    return _tie_tol(parent_sse)


cdef inline double _midpoint(double a, double b) noexcept nogil:
    cdef double s = 0.5 * (a + b)
    if s >= b:
        return a
    return s


def best_split(X, y):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0], d = Xv.shape[1]
    cdef Py_ssize_t i, j, k, best_j = -1
    cdef double mean = 0.0, parent = 0.0, v
    cdef double[::1] yc = np.empty(n)
    for i in range(n):
        mean += yv[i]
    mean /= n
    for i in range(n):
        yc[i] = yv[i] - mean
        parent += yc[i] * yc[i]
    cdef double tol = _tie_tol(parent)

    cdef cnp.intp_t[:, ::1] orders = np.ascontiguousarray(
        np.argsort(np.asarray(Xv), axis=0, kind="stable").T)
    cdef double[:, ::1] sse = np.full((d, n), INFINITY)
    cdef double sl, ql, sr, qr, tot_s, tot_q, nl, nr, e, gmin = INFINITY
    cdef double[::1] fmin = np.full(d, INFINITY)
    cdef Py_ssize_t a, b

    with nogil:
        for j in range(d):
            tot_s = 0.0
            tot_q = 0.0
            for k in range(n):
                v = yc[orders[j, k]]
                tot_s += v
                tot_q += v * v
            sl = 0.0
            ql = 0.0
            for k in range(n - 1):
                a = orders[j, k]
                b = orders[j, k + 1]
                v = yc[a]
                sl += v
                ql += v * v
                if not (Xv[a, j] < Xv[b, j]):
                    continue
                nl = k + 1
                nr = n - nl
                sr = tot_s - sl
                qr = tot_q - ql
                e = ql - sl * sl / nl
                if e < 0:
                    e = 0.0
                v = qr - sr * sr / nr
                if v < 0:
                    v = 0.0
                e += v
                sse[j, k] = e
                if e < fmin[j]:
                    fmin[j] = e
            if fmin[j] < gmin:
                gmin = fmin[j]

    if not isfinite(gmin):
        return -1, float("nan"), parent
    # per feature: first threshold within tolerance of that feature's minimum;
    # then the first feature whose chosen error is within tolerance overall
    cdef double[::1] chosen = np.full(d, INFINITY)
    cdef cnp.intp_t[::1] chosen_k = np.full(d, -1, dtype=np.intp)
    cdef double cmin = INFINITY
    for j in range(d):
        if not isfinite(fmin[j]):
            continue
        for k in range(n - 1):
            if sse[j, k] <= fmin[j] + tol:
                chosen[j] = sse[j, k]
                chosen_k[j] = k
                break
        if chosen[j] < cmin:
            cmin = chosen[j]
    for j in range(d):
        if chosen[j] <= cmin + tol:
            best_j = j
            break
    k = chosen_k[best_j]
    a = orders[best_j, k]
    b = orders[best_j, k + 1]
    return int(best_j), float(_midpoint(Xv[a, best_j], Xv[b, best_j])), float(chosen[best_j])


def smo_solve(K, y, double epsilon, double C, double tol, long max_iter):
    cdef const double[:, ::1] Kv = np.ascontiguousarray(K, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = yv.shape[0], m = 2 * n, t, i, j, ti, tj
    cdef double[::1] G = np.empty(m)
    cdef double[::1] alpha = np.zeros(m)
    cdef double[::1] z = np.empty(m)
    cdef double[::1] kd = np.empty(n)
    for t in range(n):
        z[t] = 1.0
        z[t + n] = -1.0
        G[t] = epsilon - yv[t]
        G[t + n] = epsilon + yv[t]
        kd[t] = Kv[t, t]
    cdef long it = 0
    cdef bint converged = False, up, low
    cdef double gmax, gmax2, mzg, bt, at, score, best_score
    cdef double ai, aj, old_i, old_j, di, dj, zi, zj, gi, gj, qij, quad, delta, diff, total

    with nogil:
        while it < max_iter:
            gmax = -INFINITY
            gmax2 = -INFINITY
            i = -1
            for t in range(m):
                mzg = -z[t] * G[t]
                if z[t] > 0:
                    up = alpha[t] < C
                    low = alpha[t] > 0
                else:
                    up = alpha[t] > 0
                    low = alpha[t] < C
                if up and mzg > gmax:
                    gmax = mzg
                    i = t
                if low and -mzg > gmax2:
                    gmax2 = -mzg
            if gmax + gmax2 < tol:
                converged = True
                break
            ti = i % n
            j = -1
            best_score = INFINITY
            for t in range(m):
                if z[t] > 0:
                    low = alpha[t] > 0
                else:
                    low = alpha[t] < C
                if not low:
                    continue
                bt = gmax + z[t] * G[t]
                if bt <= 0:
                    continue
                tj = t % n
                at = kd[ti] + kd[tj] - 2.0 * Kv[ti, tj]
                if at <= 0:
                    at = _TAU
                score = -(bt * bt) / at
                if score < best_score:
                    best_score = score
                    j = t
            if j < 0:
                converged = True
                break
            tj = j % n
            ai = alpha[i]
            aj = alpha[j]
            old_i = ai
            old_j = aj
            zi = z[i]
            zj = z[j]
            gi = G[i]
            gj = G[j]
            qij = zi * zj * Kv[ti, tj]
            if zi != zj:
                quad = kd[ti] + kd[tj] + 2.0 * qij
                if quad <= 0:
                    quad = _TAU
                delta = (-gi - gj) / quad
                diff = ai - aj
                ai += delta
                aj += delta
                if diff > 0:
                    if aj < 0:
                        aj = 0.0
                        ai = diff
                else:
                    if ai < 0:
                        ai = 0.0
                        aj = -diff
                if diff > 0:
                    if ai > C:
                        ai = C
                        aj = C - diff
                else:
                    if aj > C:
                        aj = C
                        ai = C + diff
            else:
                quad = kd[ti] + kd[tj] - 2.0 * qij
                if quad <= 0:
                    quad = _TAU
                delta = (gi - gj) / quad
                total = ai + aj
                ai -= delta
                aj += delta
                if total > C:
                    if ai > C:
                        ai = C
                        aj = total - C
                else:
                    if aj < 0:
                        aj = 0.0
                        ai = total
                if total > C:
                    if aj > C:
                        aj = C
                        ai = total - C
                else:
                    if ai < 0:
                        ai = 0.0
                        aj = total
            alpha[i] = ai
            alpha[j] = aj
            di = ai - old_i
            dj = aj - old_j
            for t in range(m):
                G[t] += z[t] * (zi * di * Kv[t % n, ti] + zj * dj * Kv[t % n, tj])
            it += 1

    a = np.asarray(alpha)
    beta = a[:n] - a[n:]
    from ._kernels_py import _rho
    return beta, -_rho(a, np.asarray(G), np.asarray(z), C), int(it), bool(converged)


cdef struct Env:
    double mu
    double g0
    double R
    double rho0
    double H
    bint uniform


cdef inline void _rhs(const double* s, double drag, const Env* env, double* out) noexcept nogil:
    cdef double r = sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2])
    cdef double gk
    if env.uniform:
        gk = env.g0 / r
    else:
        gk = env.mu / (r * r * r)
    cdef double rho = env.rho0 * exp(-(r - env.R) / env.H)
    cdef double speed = sqrt(s[3] * s[3] + s[4] * s[4] + s[5] * s[5])
    cdef double dk = drag * rho * speed
    out[0] = s[3]
    out[1] = s[4]
    out[2] = s[5]
    out[3] = -gk * s[0] - dk * s[3]
    out[4] = -gk * s[1] - dk * s[4]
    out[5] = -gk * s[2] - dk * s[5]


cdef inline void _rk4(const double* s, double drag, double h, const Env* env,
                      double* res) noexcept nogil:
    cdef double k1[6]
    cdef double k2[6]
    cdef double k3[6]
    cdef double k4[6]
    cdef double tmp[6]
    cdef int q
    _rhs(s, drag, env, k1)
    for q in range(6):
        tmp[q] = s[q] + (0.5 * h) * k1[q]
    _rhs(tmp, drag, env, k2)
    for q in range(6):
        tmp[q] = s[q] + (0.5 * h) * k2[q]
    _rhs(tmp, drag, env, k3)
    for q in range(6):
        tmp[q] = s[q] + h * k3[q]
    _rhs(tmp, drag, env, k4)
    for q in range(6):
        res[q] = s[q] + (h / 6.0) * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q])


cdef inline double _alt(const double* s, double R) noexcept nogil:
    return sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2]) - R


def integrate_landing(states, drag, double mu, double g0, double R, double rho0,
                      double H, uniform, double dt, long max_steps, int bisect_iters=64):
    cdef double[:, ::1] S = np.array(states, dtype=np.float64, order="C", copy=True)
    cdef const double[::1] dv = np.ascontiguousarray(drag, dtype=np.float64)
    cdef Py_ssize_t N = S.shape[0], row
    cdef double[:, ::1] out = np.empty((N, 6))
    status_arr = np.ones(N, dtype=np.int8)
    cdef signed char[::1] status = status_arr
    cdef Env env
    env.mu = mu
    env.g0 = g0
    env.R = R
    env.rho0 = rho0
    env.H = H
    env.uniform = bool(uniform)
    cdef double cur[6]
    cdef double nxt[6]
    cdef double lo, hi, mid
    cdef long step
    cdef int q, b
    with nogil:
        for row in range(N):
            for q in range(6):
                cur[q] = S[row, q]
            for step in range(max_steps):
                _rk4(cur, dv[row], dt, &env, nxt)
                if _alt(nxt, R) <= 0.0:
                    lo = 0.0
                    hi = dt
                    for b in range(bisect_iters):
                        mid = 0.5 * (lo + hi)
                        _rk4(cur, dv[row], mid, &env, nxt)
                        if _alt(nxt, R) > 0.0:
                            lo = mid
                        else:
                            hi = mid
                    _rk4(cur, dv[row], hi, &env, nxt)
                    for q in range(6):
                        cur[q] = nxt[q]
                    status[row] = 0
                    break
                for q in range(6):
                    cur[q] = nxt[q]
            for q in range(6):
                out[row, q] = cur[q]
    return np.asarray(out), status_arr
