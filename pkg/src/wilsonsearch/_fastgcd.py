"""Compiled int64 inner loop of the cyclotomic Euclidean algorithm.

Coordinates wrap modulo 2^64 on overflow; callers re-verify the result in
exact arithmetic.  Floating-point embeddings are computed from the wrapped
coordinates, so a wrapped run simply fails to converge or fails the check.
"""

from __future__ import annotations

import numba as nb
import numpy as np

TIE = 1e-9
LOG10 = np.log(10.0)


@nb.njit(cache=True)
def mul(a, b, red):
    d = a.shape[0]
    conv = np.zeros(2 * d - 1, np.int64)
    for i in range(d):
        ai = a[i]
        if ai != 0:
            for j in range(d):
                conv[i + j] += ai * b[j]
    out = conv[:d].copy()
    for t in range(d, 2 * d - 1):
        c = conv[t]
        if c != 0:
            for k in range(d):
                out[k] += c * red[t, k]
    return out


@nb.njit(cache=True)
def embed(x, cre, cim, re, im):
    h, d = cre.shape
    for i in range(h):
        sr = 0.0
        si = 0.0
        for k in range(d):
            v = float(x[k])
            sr += v * cre[i, k]
            si += v * cim[i, k]
        re[i] = sr
        im[i] = si


@nb.njit(cache=True)
def _log_abs(re, im, la):
    s = 0.0
    for i in range(re.shape[0]):
        la[i] = 0.5 * np.log(re[i] * re[i] + im[i] * im[i])
        s += la[i]
    return s


@nb.njit(cache=True)
def _is_zero(x):
    for v in x:
        if v != 0:
            return False
    return True


@nb.njit(cache=True)
def balance(x, red, cre, cim, units, inverses, solver, rounds):
    h, d = cre.shape
    r = units.shape[0]
    if r == 0 or _is_zero(x):
        return x
    re = np.empty(h)
    im = np.empty(h)
    la = np.empty(h)
    for _ in range(rounds):
        embed(x, cre, cim, re, im)
        ln = 2.0 * _log_abs(re, im, la)
        if not np.isfinite(ln):
            return x
        mean = 0.0
        for v in x:
            mean += abs(float(v))
        mean /= d
        if np.log(mean) <= LOG10 + ln / d:
            return x
        moved = False
        for k in range(r):
            s = 0.0
            for i in range(h):
                s += solver[k, i] * (la[i] - ln / d)
            t = int(np.rint(s))
            if t > 0:
                for _ in range(t):
                    x = mul(x, inverses[k], red)
                moved = True
            elif t < 0:
                for _ in range(-t):
                    x = mul(x, units[k], red)
                moved = True
        if not moved:
            return x
    return x


@nb.njit(cache=True)
def _coords_from(rre, rim, inv, q):
    h = rre.shape[0]
    d = inv.shape[0]
    for k in range(d):
        s = 0.0
        for i in range(h):
            s += inv[k, i] * rre[i] + inv[k, h + i] * rim[i]
        q[k] = np.rint(s)


@nb.njit(cache=True)
def euclid(x, y, red, cre, cim, inv, units, inverses, solver, perts, seed, max_iter):
    """Returns (status, element): status 1 on termination, 0 on giving up."""
    h, d = cre.shape
    np.random.seed(seed)
    npert = perts.shape[0]
    pre = np.empty((npert, h))
    pim = np.empty((npert, h))
    tmp_re = np.empty(h)
    tmp_im = np.empty(h)
    for k in range(npert):
        embed(perts[k], cre, cim, tmp_re, tmp_im)
        pre[k] = tmp_re
        pim[k] = tmp_im
    X = balance(x.copy(), red, cre, cim, units, inverses, solver, 6)
    Y = balance(y.copy(), red, cre, cim, units, inverses, solver, 6)
    xre = np.empty(h)
    xim = np.empty(h)
    yre = np.empty(h)
    yim = np.empty(h)
    la = np.empty(h)
    rre = np.empty(h)
    rim = np.empty(h)
    q = np.empty(d)
    qi = np.empty(d, np.int64)
    for _ in range(max_iter):
        if _is_zero(X):
            return 1, Y
        if _is_zero(Y):
            return 1, X
        embed(X, cre, cim, xre, xim)
        embed(Y, cre, cim, yre, yim)
        nx = _log_abs(xre, xim, la)
        ny = _log_abs(yre, yim, la)
        if not (np.isfinite(nx) and np.isfinite(ny)):
            return 0, X
        if nx < ny - TIE:
            X, Y = Y, X
            xre, yre = yre, xre
            xim, yim = yim, xim
        # ratio X / Y in every embedding
        for i in range(h):
            den = yre[i] * yre[i] + yim[i] * yim[i]
            rre[i] = (xre[i] * yre[i] + xim[i] * yim[i]) / den
            rim[i] = (xim[i] * yre[i] - xre[i] * yim[i]) / den
        _coords_from(rre, rim, inv, q)
        # residual ratio - tau(q)
        for i in range(h):
            sr = 0.0
            si = 0.0
            for k in range(d):
                sr += q[k] * cre[i, k]
                si += q[k] * cim[i, k]
            tmp_re[i] = rre[i] - sr
            tmp_im[i] = rim[i] - si
        found = -1
        for c in range(2 * d + 1):
            kk = (c - 1) >> 1
            sgn = 0.0 if c == 0 else (1.0 if c & 1 else -1.0)
            s = 0.0
            for i in range(h):
                a = tmp_re[i]
                b = tmp_im[i]
                if c:
                    a -= sgn * cre[i, kk]
                    b -= sgn * cim[i, kk]
                s += 0.5 * np.log(a * a + b * b)
            if s < -TIE:
                found = c
                break
        if found >= 0:
            if found:
                q[(found - 1) >> 1] += 1.0 if found & 1 else -1.0
            for k in range(d):
                qi[k] = np.int64(q[k])
            X = balance(X - mul(qi, Y, red), red, cre, cim, units, inverses, solver, 6)
            continue
        if npert == 0:
            return 0, X
        k = np.random.randint(0, npert)
        for i in range(h):
            den = pre[k, i] * pre[k, i] + pim[k, i] * pim[k, i]
            rre[i] = (yre[i] * pre[k, i] + yim[i] * pim[k, i]) / den
            rim[i] = (yim[i] * pre[k, i] - yre[i] * pim[k, i]) / den
        _coords_from(rre, rim, inv, q)
        small = True
        for v in q:
            if not abs(v) < 4.5e15:
                small = False
        if small:
            for j in range(d):
                qi[j] = np.int64(q[j])
            back = mul(qi, perts[k], red)
            if np.array_equal(back, Y):
                Y = balance(qi.copy(), red, cre, cim, units, inverses, solver, 6)
                continue
        X = balance(mul(X, perts[k], red), red, cre, cim, units, inverses, solver, 6)
    return 0, X
