"""Hot numeric kernels for the sup-norm model.

Everything here works on float64 arrays so the same source compiles under
numba.  ``a`` is a segment start, ``d = b - a`` its direction, and the segment
is parameterised by ``t`` in [0, 1].  The conformal weight is described by the
knots ``(kx, ky)`` of the piecewise-linear majorant; it is held constant
outside the knot range.
"""
import math

import numpy as np

from ._jit import USE_NUMBA, kernel

LN2 = math.log(2.0)
_MAX_STACK = 256


@kernel
def norm_at(a, d, t):
    m = 0.0
    for i in range(a.shape[0]):
        v = abs(a[i] + t * d[i])
        if v > m:
            m = v
    return m


@kernel
def norm_breaks(a, d):
    """Parameters in [0, 1] where t -> max_i |a_i + t d_i| changes slope.

    Walks the upper envelope of the 2k lines +-(a_i + t d_i) from left to
    right; every step strictly increases the active slope, so at most 2k
    steps are taken.  Returned array starts with 0 and ends with 1.
    """
    k = a.shape[0]
    c = np.empty(2 * k)
    s = np.empty(2 * k)
    for i in range(k):
        c[2 * i] = a[i]
        s[2 * i] = d[i]
        c[2 * i + 1] = -a[i]
        s[2 * i + 1] = -d[i]
    # active line at t = 0: maximal value, ties to the larger slope
    best = 0
    for j in range(1, 2 * k):
        if c[j] > c[best] or (c[j] == c[best] and s[j] > s[best]):
            best = j
    out = np.empty(2 * k + 2)
    out[0] = 0.0
    n = 1
    t = 0.0
    while True:
        tn = 2.0
        nxt = -1
        for j in range(2 * k):
            if s[j] > s[best]:
                tj = (c[best] - c[j]) / (s[j] - s[best])
                if tj > t and (tj < tn or (tj == tn and s[j] > s[nxt])):
                    tn = tj
                    nxt = j
        if nxt < 0 or tn >= 1.0:
            break
        out[n] = tn
        n += 1
        t = tn
        best = nxt
    out[n] = 1.0
    n += 1
    return out[:n]


@kernel
def ball_interval(a, d, r):
    """Sub-interval [t0, t1] of [0, 1] on which the sup-norm is <= r.

    Returns (t0, t1) with t0 > t1 meaning empty.  The norm is convex and
    piecewise linear with the kinks from ``norm_breaks``, so the sublevel
    set is a single interval whose ends are found by linear interpolation on
    the bracketing piece.
    """
    ts = norm_breaks(a, d)
    m = ts.shape[0]
    vs = np.empty(m)
    for i in range(m):
        vs[i] = norm_at(a, d, ts[i])
    lo = vs[0]
    for i in range(m):
        if vs[i] < lo:
            lo = vs[i]
    if lo > r:
        return 1.0, 0.0
    if vs[0] <= r:
        t0 = 0.0
    else:
        t0 = 0.0
        for i in range(m - 1):
            if vs[i] > r and vs[i + 1] <= r:
                t0 = ts[i] + (vs[i] - r) / (vs[i] - vs[i + 1]) * (ts[i + 1] - ts[i])
                break
    if vs[m - 1] <= r:
        t1 = 1.0
    else:
        t1 = 1.0
        for i in range(m - 1, 0, -1):
            if vs[i] > r and vs[i - 1] <= r:
                t1 = ts[i - 1] + (r - vs[i - 1]) / (vs[i] - vs[i - 1]) * (ts[i] - ts[i - 1])
                break
    return t0, t1


@kernel
def g_at(rho, kx, ky):
    return 1.0 / (np.interp(rho, kx, ky) * math.pow(2.0, rho))


@kernel
def _segment_integrand(a, d, length, kx, ky, t):
    return g_at(norm_at(a, d, t), kx, ky) * length


@kernel
def _simpson_segment(a, d, length, kx, ky, lo, hi, rtol):
    """Adaptive Simpson of g(|a + t d|) * length over [lo, hi], smooth integrand."""
    fa = _segment_integrand(a, d, length, kx, ky, lo)
    fb = _segment_integrand(a, d, length, kx, ky, hi)
    fm = _segment_integrand(a, d, length, kx, ky, 0.5 * (lo + hi))
    whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb)
    tol = rtol * abs(whole) + 1e-300
    st_lo = np.empty(_MAX_STACK)
    st_hi = np.empty(_MAX_STACK)
    st_fa = np.empty(_MAX_STACK)
    st_fm = np.empty(_MAX_STACK)
    st_fb = np.empty(_MAX_STACK)
    st_s = np.empty(_MAX_STACK)
    st_tol = np.empty(_MAX_STACK)
    st_depth = np.empty(_MAX_STACK, dtype=np.int64)
    top = 0
    st_lo[0] = lo
    st_hi[0] = hi
    st_fa[0] = fa
    st_fm[0] = fm
    st_fb[0] = fb
    st_s[0] = whole
    st_tol[0] = tol
    st_depth[0] = 0
    top = 1
    total = 0.0
    while top > 0:
        top -= 1
        x0 = st_lo[top]
        x1 = st_hi[top]
        f0 = st_fa[top]
        fmid = st_fm[top]
        f1 = st_fb[top]
        s = st_s[top]
        tl = st_tol[top]
        dep = st_depth[top]
        xm = 0.5 * (x0 + x1)
        fl = _segment_integrand(a, d, length, kx, ky, 0.5 * (x0 + xm))
        fr = _segment_integrand(a, d, length, kx, ky, 0.5 * (xm + x1))
        sl = (xm - x0) / 6.0 * (f0 + 4.0 * fl + fmid)
        sr = (x1 - xm) / 6.0 * (fmid + 4.0 * fr + f1)
        err = sl + sr - s
        if abs(err) <= 15.0 * tl or dep >= 40 or top + 2 >= _MAX_STACK:
            total += sl + sr + err / 15.0
        else:
            st_lo[top] = x0
            st_hi[top] = xm
            st_fa[top] = f0
            st_fm[top] = fl
            st_fb[top] = fmid
            st_s[top] = sl
            st_tol[top] = 0.5 * tl
            st_depth[top] = dep + 1
            top += 1
            st_lo[top] = xm
            st_hi[top] = x1
            st_fa[top] = fmid
            st_fm[top] = fr
            st_fb[top] = f1
            st_s[top] = sr
            st_tol[top] = 0.5 * tl
            st_depth[top] = dep + 1
            top += 1
    return total


@kernel
def delta_length(a, d, kx, ky, rtol):
    """Conformal length of the segment a -> a + d.

    Integration runs piecewise between the kinks of the sup-norm and the
    parameters where the norm crosses a knot radius, so every piece is smooth.
    """
    length = 0.0
    for i in range(d.shape[0]):
        if abs(d[i]) > length:
            length = abs(d[i])
    if length == 0.0:
        return 0.0
    ts = norm_breaks(a, d)
    cuts = np.empty(ts.shape[0] * (kx.shape[0] + 1) + 1)
    n = 0
    for i in range(ts.shape[0] - 1):
        t0 = ts[i]
        t1 = ts[i + 1]
        cuts[n] = t0
        n += 1
        v0 = norm_at(a, d, t0)
        v1 = norm_at(a, d, t1)
        if v1 != v0:
            for m in range(kx.shape[0]):
                u = (kx[m] - v0) / (v1 - v0)
                if u > 0.0 and u < 1.0:
                    cuts[n] = t0 + u * (t1 - t0)
                    n += 1
    cuts[n] = 1.0
    n += 1
    pts = np.sort(cuts[:n])
    total = 0.0
    for i in range(n - 1):
        if pts[i + 1] > pts[i]:
            total += _simpson_segment(a, d, length, kx, ky, pts[i], pts[i + 1], rtol)
    return total


@kernel
def _simpson_radial(kx, ky, lo, hi, rtol):
    fa = g_at(lo, kx, ky)
    fb = g_at(hi, kx, ky)
    fm = g_at(0.5 * (lo + hi), kx, ky)
    whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb)
    st_lo = np.empty(_MAX_STACK)
    st_hi = np.empty(_MAX_STACK)
    st_fa = np.empty(_MAX_STACK)
    st_fm = np.empty(_MAX_STACK)
    st_fb = np.empty(_MAX_STACK)
    st_s = np.empty(_MAX_STACK)
    st_tol = np.empty(_MAX_STACK)
    st_lo[0] = lo
    st_hi[0] = hi
    st_fa[0] = fa
    st_fm[0] = fm
    st_fb[0] = fb
    st_s[0] = whole
    st_tol[0] = rtol * abs(whole) + 1e-300
    top = 1
    total = 0.0
    while top > 0:
        top -= 1
        x0 = st_lo[top]
        x1 = st_hi[top]
        f0 = st_fa[top]
        fmid = st_fm[top]
        f1 = st_fb[top]
        s = st_s[top]
        tl = st_tol[top]
        xm = 0.5 * (x0 + x1)
        fl = g_at(0.5 * (x0 + xm), kx, ky)
        fr = g_at(0.5 * (xm + x1), kx, ky)
        sl = (xm - x0) / 6.0 * (f0 + 4.0 * fl + fmid)
        sr = (x1 - xm) / 6.0 * (fmid + 4.0 * fr + f1)
        err = sl + sr - s
        if abs(err) <= 15.0 * tl or x1 - x0 < 1e-12 or top + 2 >= _MAX_STACK:
            total += sl + sr + err / 15.0
        else:
            st_lo[top] = x0
            st_hi[top] = xm
            st_fa[top] = f0
            st_fm[top] = fl
            st_fb[top] = fmid
            st_s[top] = sl
            st_tol[top] = 0.5 * tl
            top += 1
            st_lo[top] = xm
            st_hi[top] = x1
            st_fa[top] = fmid
            st_fm[top] = fr
            st_fb[top] = f1
            st_s[top] = sr
            st_tol[top] = 0.5 * tl
            top += 1
    return total


@kernel
def _const_piece(c, lo, hi):
    # integral of 2^-s / c over [lo, hi]; hi may be +inf
    if hi == np.inf:
        return math.pow(2.0, -lo) / (c * LN2)
    return (math.pow(2.0, -lo) - math.pow(2.0, -hi)) / (c * LN2)


@kernel
def g_integral(lo, hi, kx, ky, rtol):
    """Integral of g over [lo, hi] (hi may be inf), split at the knots."""
    if hi <= lo:
        return 0.0
    m = kx.shape[0]
    total = 0.0
    # left of the first knot the majorant is constant
    if lo < kx[0]:
        total += _const_piece(ky[0], lo, min(hi, kx[0]))
    for i in range(m - 1):
        x0 = max(lo, kx[i])
        x1 = min(hi, kx[i + 1])
        if x1 > x0:
            if ky[i] == ky[i + 1]:
                total += _const_piece(ky[i], x0, x1)
            else:
                total += _simpson_radial(kx, ky, x0, x1, rtol)
    if hi > kx[m - 1]:
        total += _const_piece(ky[m - 1], max(lo, kx[m - 1]), hi)
    return total


@kernel
def _interp1(x, kx, ky):
    n = kx.shape[0]
    if x <= kx[0]:
        return ky[0]
    if x >= kx[n - 1]:
        return ky[n - 1]
    lo, hi = 0, n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if kx[mid] <= x:
            lo = mid
        else:
            hi = mid
    return ky[lo] + (ky[hi] - ky[lo]) * (x - kx[lo]) / (kx[hi] - kx[lo])


@kernel
def _trapezoid_loop(a, d, kx, ky, panels):
    length = 0.0
    for i in range(d.shape[0]):
        if abs(d[i]) > length:
            length = abs(d[i])
    h = 1.0 / panels
    acc = 0.0
    for j in range(panels + 1):
        rho = norm_at(a, d, j * h)
        f = 1.0 / (_interp1(rho, kx, ky) * 2.0**rho)
        acc += 0.5 * f if j == 0 or j == panels else f
    return acc * h * length


def _trapezoid_numpy(a, d, kx, ky, panels):
    t = np.linspace(0.0, 1.0, panels + 1)
    rho = np.abs(a[None, :] + t[:, None] * d[None, :]).max(axis=1)
    f = 1.0 / (np.interp(rho, kx, ky) * np.exp2(rho))
    length = float(np.abs(d).max()) if d.size else 0.0
    return float(np.trapezoid(f, t) * length) if hasattr(np, "trapezoid") else float(np.trapz(f, t) * length)


def trapezoid_delta_length(a, d, kx, ky, panels=1_000_000):
    """Uniform trapezoid reference for ``delta_length`` (no kink handling)."""
    a = np.asarray(a, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    kx = np.asarray(kx, dtype=np.float64)
    ky = np.asarray(ky, dtype=np.float64)
    if USE_NUMBA:
        return float(_trapezoid_loop(a, d, kx, ky, panels))
    return _trapezoid_numpy(a, d, kx, ky, panels)


# ---------------------------------------------------------------- cycles


@kernel
def cycle_cancel(n, tail, head, w, tol):
    """DFS cycle cancelling on a digraph whose arcs are sorted by tail.

    ``w`` is modified in place: each cycle found loses its minimum residual,
    and the first arc attaining it is set to exactly zero.  Returns the arc
    sequences of the cancelled cycles as (flat arc ids, offsets).
    """
    m = tail.shape[0]
    start = np.zeros(n + 1, np.int64)
    for a in range(m):
        start[tail[a] + 1] += 1
    for v in range(n):
        start[v + 1] += start[v]
    ptr = start[:n].copy()
    done = np.zeros(n, np.bool_)
    pos = np.full(n, -1, np.int64)
    vstack = np.empty(n + 1, np.int64)
    astack = np.empty(n + 1, np.int64)
    out = np.empty(max(16, 4 * m), np.int64)
    nout = 0
    offs = np.zeros(m + 1, np.int64)
    nc = 0
    for s in range(n):
        if done[s]:
            continue
        top = 0
        vstack[0] = s
        pos[s] = 0
        while top >= 0:
            v = vstack[top]
            a = ptr[v]
            end = start[v + 1]
            while a < end and (w[a] <= tol or done[head[a]]):
                a += 1
            ptr[v] = a
            if a == end:
                done[v] = True
                pos[v] = -1
                top -= 1
                continue
            u = head[a]
            k = pos[u]
            if k < 0:
                astack[top] = a
                top += 1
                vstack[top] = u
                pos[u] = top
                continue
            length = top - k + 1
            if nout + length > out.shape[0]:
                grown = np.empty(max(2 * out.shape[0], nout + length), np.int64)
                grown[:nout] = out[:nout]
                out = grown
            for i in range(k, top):
                out[nout] = astack[i]
                nout += 1
            out[nout] = a
            nout += 1
            first = offs[nc]
            best = out[first]
            mn = w[best]
            for i in range(first + 1, nout):
                if w[out[i]] < mn:
                    mn = w[out[i]]
                    best = out[i]
            for i in range(first, nout):
                w[out[i]] = w[out[i]] - mn
            w[best] = 0 * mn
            nc += 1
            offs[nc] = nout
            for i in range(k + 1, top + 1):
                pos[vstack[i]] = -1
            top = k
    return out[:nout], offs[: nc + 1]
