"""Pure numpy implementations of the hot kernels.

Used when the compiled ``_kernels`` extension is unavailable; the two
modules expose the same three functions with the same semantics.
"""
import numpy as np

BACKEND = "python"

# Relative slack under which two candidate split errors count as tied.
SPLIT_TIE_RTOL = 1e-9
_TAU = 1e-12


def split_tie_tol(parent_sse):
    return SPLIT_TIE_RTOL * parent_sse + 1e-300


def best_split(X, y):
    """Best axis-aligned split of ``(X, y)`` under summed squared error.

    Candidate thresholds are midpoints between consecutive distinct values
    of each column. Among splits within ``split_tie_tol`` of the minimum the
    lowest feature index, then the lowest threshold, wins.

    Returns ``(feature, threshold, sse)``; ``feature == -1`` when no
    candidate exists, with ``sse`` the unsplit error.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    yc = y - y.mean()
    parent = float(np.dot(yc, yc))
    best_sse = []
    best_thr = []
    for j in range(d):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        ys = yc[order]
        distinct = xs[:-1] < xs[1:]
        if not distinct.any():
            best_sse.append(np.inf)
            best_thr.append(np.nan)
            continue
        cs = np.cumsum(ys)
        cq = np.cumsum(ys * ys)
        nl = np.arange(1, n, dtype=float)
        nr = n - nl
        sl, ql = cs[:-1], cq[:-1]
        sr, qr = cs[-1] - sl, cq[-1] - ql
        sse = np.maximum(ql - sl * sl / nl, 0.0) + np.maximum(qr - sr * sr / nr, 0.0)
        sse = np.where(distinct, sse, np.inf)
        pos = np.flatnonzero(distinct)
        cand = sse[pos]
        m = cand.min()
        first = pos[np.flatnonzero(cand <= m + split_tie_tol(parent))[0]]
        best_sse.append(float(sse[first]))
        best_thr.append(_midpoint(xs[first], xs[first + 1]))
    best_sse = np.array(best_sse)
    if not np.isfinite(best_sse).any():
        return -1, float("nan"), parent
    m = best_sse.min()
    j = int(np.flatnonzero(best_sse <= m + split_tie_tol(parent))[0])
    return j, float(best_thr[j]), float(best_sse[j])


def _midpoint(a, b):
    s = 0.5 * (a + b)
    # adjacent floats can round the midpoint up onto b
    return float(a if s >= b else s)


def smo_solve(K, y, epsilon, C, tol, max_iter):
    """Solve the epsilon-insensitive SVR dual with second-order SMO.

    Works on the doubled problem (alpha, alpha*) with signs z = (+1.., -1..):
    minimize 0.5 a'Qa + p'a subject to z'a = 0, 0 <= a <= C.

    Returns ``(beta, bias, n_iter, converged)`` with
    ``beta = alpha - alpha*`` and ``f(x) = sum beta_i K(x_i, x) + bias``.
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    z = np.concatenate([np.ones(n), -np.ones(n)])
    G = np.concatenate([epsilon - y, epsilon + y])
    alpha = np.zeros(2 * n)
    kd = np.diag(K).copy()
    kdd = np.concatenate([kd, kd])
    it = 0
    converged = False
    while it < max_iter:
        up = np.where(z > 0, alpha < C, alpha > 0)
        low = np.where(z > 0, alpha > 0, alpha < C)
        mzg = -z * G
        cand = np.where(up, mzg, -np.inf)
        i = int(np.argmax(cand))
        gmax = cand[i]
        zg_low = np.where(low, -mzg, -np.inf)
        gmax2 = zg_low.max()
        if gmax + gmax2 < tol:
            converged = True
            break
        ki = K[i % n]
        kii = np.concatenate([ki, ki])
        bt = gmax - mzg
        at = kd[i % n] + kdd - 2.0 * kii
        at = np.where(at > 0, at, _TAU)
        score = np.where(low & (bt > 0), -(bt * bt) / at, np.inf)
        j = int(np.argmin(score))
        if not np.isfinite(score[j]):
            converged = True
            break
        old_i, old_j = alpha[i], alpha[j]
        ai, aj = _pair_update(alpha[i], alpha[j], G[i], G[j], z[i], z[j],
                              kd[i % n], kd[j % n], K[i % n, j % n], C)
        alpha[i], alpha[j] = ai, aj
        di, dj = ai - old_i, aj - old_j
        kj = K[j % n]
        G += z * (z[i] * di * kii + z[j] * dj * np.concatenate([kj, kj]))
        it += 1
    beta = alpha[:n] - alpha[n:]
    return beta, -_rho(alpha, G, z, C), it, converged


def _pair_update(ai, aj, gi, gj, zi, zj, qii, qjj, kij, C):
    qij = zi * zj * kij
    if zi != zj:
        quad = qii + qjj + 2.0 * qij
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
        quad = qii + qjj - 2.0 * qij
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
    return ai, aj


def _rho(alpha, G, z, C):
    zg = z * G
    at_upper = alpha >= C
    at_lower = alpha <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        return float(zg[free].mean())
    ub_mask = (at_upper & (z < 0)) | (at_lower & (z > 0))
    lb_mask = (at_upper & (z > 0)) | (at_lower & (z < 0))
    ub = zg[ub_mask].min() if ub_mask.any() else np.inf
    lb = zg[lb_mask].max() if lb_mask.any() else -np.inf
    return float(0.5 * (ub + lb))


def _rhs(S, drag, mu, g0, R, rho0, H, uniform):
    x, y, z = S[:, 0], S[:, 1], S[:, 2]
    vx, vy, vz = S[:, 3], S[:, 4], S[:, 5]
    r = np.sqrt(x * x + y * y + z * z)
    if uniform:
        gk = g0 / r
    else:
        gk = mu / (r * r * r)
    rho = rho0 * np.exp(-(r - R) / H)
    speed = np.sqrt(vx * vx + vy * vy + vz * vz)
    dk = drag * rho * speed
    out = np.empty_like(S)
    out[:, 0] = vx
    out[:, 1] = vy
    out[:, 2] = vz
    out[:, 3] = -gk * x - dk * vx
    out[:, 4] = -gk * y - dk * vy
    out[:, 5] = -gk * z - dk * vz
    return out


def _rk4(S, drag, h, args):
    k1 = _rhs(S, drag, *args)
    k2 = _rhs(S + (0.5 * h) * k1, drag, *args)
    k3 = _rhs(S + (0.5 * h) * k2, drag, *args)
    k4 = _rhs(S + h * k3, drag, *args)
    return S + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _alt(S, R):
    return np.sqrt(S[:, 0] * S[:, 0] + S[:, 1] * S[:, 1] + S[:, 2] * S[:, 2]) - R


def integrate_landing(states, drag, mu, g0, R, rho0, H, uniform, dt, max_steps,
                      bisect_iters=64):
    """Fixed-step RK4 point-mass propagation until ground contact.

    ``states`` is (N, 6) Earth-centred position/velocity, ``drag`` the
    per-trajectory factor ``0.5 * Cd * A / m``. The contact instant inside
    the final step is located by bisecting on a partial RK4 step.

    Returns ``(final_states, status)``; status 0 means landed, 1 means the
    step budget ran out first.
    """
    S = np.array(states, dtype=float, copy=True)
    drag = np.array(drag, dtype=float, copy=True)
    n = S.shape[0]
    args = (mu, g0, R, rho0, H, bool(uniform))
    out = S.copy()
    status = np.ones(n, dtype=np.int8)
    idx = np.arange(n)
    cur = S
    d = drag
    for _ in range(int(max_steps)):
        if idx.size == 0:
            break
        nxt = _rk4(cur, d, dt, args)
        hit = _alt(nxt, R) <= 0.0
        if hit.any():
            out[idx[hit]] = _refine(cur[hit], d[hit], dt, args, R, bisect_iters)
            status[idx[hit]] = 0
            keep = ~hit
            idx, cur, d = idx[keep], nxt[keep], d[keep]
        else:
            cur = nxt
    out[idx] = cur
    return out, status


def _refine(S, d, dt, args, R, iters):
    lo = np.zeros(S.shape[0])
    hi = np.full(S.shape[0], float(dt))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        above = _alt(_rk4_var(S, d, mid, args), R) > 0.0
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return _rk4_var(S, d, hi, args)


def _rk4_var(S, d, h, args):
    h = h[:, None]
    k1 = _rhs(S, d, *args)
    k2 = _rhs(S + (0.5 * h) * k1, d, *args)
    k3 = _rhs(S + (0.5 * h) * k2, d, *args)
    k4 = _rhs(S + h * k3, d, *args)
    return S + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
