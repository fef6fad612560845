"""Loop versions of the numpy kernels, compiled with numba and parallel over the batch."""

import math

import numpy as np
from numba import njit, prange


def polar_collision(x, y, cpsi, spsi, xo, yo, a, b, r, scaled):
    shape = (x.shape[0], xo.shape[0], r.shape[0], x.shape[1])
    out = tuple(np.empty(shape) for _ in range(4))
    polar_collision_into(x, y, cpsi, spsi, xo, yo, a, b, r, scaled, *out)
    return out


@njit(parallel=True, cache=True)
def polar_collision_into(x, y, cpsi, spsi, xo, yo, a, b, r, scaled, alpha, d, cos_a, sin_a):
    L, q = x.shape
    n = xo.shape[0]
    m = r.shape[0]
    for l in prange(L):
        for j in range(n):
            aj = a[j]
            bj = b[j]
            for i in range(m):
                ri = r[i]
                for t in range(q):
                    xt = x[l, t] + ri * cpsi[l, t] - xo[j, t]
                    yt = y[l, t] + ri * spsi[l, t] - yo[j, t]
                    if scaled:
                        u = bj * xt
                        v = aj * yt
                    else:
                        u = xt
                        v = yt
                    rho = math.sqrt(u * u + v * v)
                    if rho > 0.0:
                        ca = u / rho
                        sa = v / rho
                    else:
                        ca = 1.0
                        sa = 0.0
                    dd = (aj * xt * ca + bj * yt * sa) / (aj * aj * ca * ca + bj * bj * sa * sa)
                    alpha[l, j, i, t] = math.atan2(v, u)
                    d[l, j, i, t] = dd if dd > 1.0 else 1.0
                    cos_a[l, j, i, t] = ca
                    sin_a[l, j, i, t] = sa


@njit(parallel=True, cache=True)
def collision_targets(x, y, c, s, cpsi, spsi, xo, yo, a, b, r, cos_a, sin_a, d):
    L, q = x.shape
    n = xo.shape[0]
    m = r.shape[0]
    Sx = np.zeros((L, q))
    Rx = np.zeros((L, q))
    Sy = np.zeros((L, q))
    Ry = np.zeros((L, q))
    res_sq = np.zeros(L)
    res_max_scaled = np.zeros(L)
    for l in prange(L):
        acc = 0.0
        worst = 0.0
        for j in range(n):
            aj = a[j]
            bj = b[j]
            for i in range(m):
                ri = r[i]
                for t in range(q):
                    dd = d[l, j, i, t]
                    gx = xo[j, t] + aj * dd * cos_a[l, j, i, t]
                    gy = yo[j, t] + bj * dd * sin_a[l, j, i, t]
                    Sx[l, t] += gx
                    Sy[l, t] += gy
                    Rx[l, t] += ri * gx
                    Ry[l, t] += ri * gy
                    ex = x[l, t] + ri * c[l, t] - gx
                    ey = y[l, t] + ri * s[l, t] - gy
                    acc += ex * ex + ey * ey
                    hx = (x[l, t] + ri * cpsi[l, t] - gx) / aj
                    hy = (y[l, t] + ri * spsi[l, t] - gy) / bj
                    e_s = hx * hx + hy * hy
                    if e_s > worst:
                        worst = e_s
        res_sq[l] = acc
        res_max_scaled[l] = worst
    return Sx, Rx, Sy, Ry, res_sq, res_max_scaled


@njit(parallel=True, cache=True)
def collision_penalty(x, y, cpsi, spsi, xo, yo, a, b, r):
    L, q = x.shape
    n = xo.shape[0]
    m = r.shape[0]
    out = np.zeros(L)
    for l in prange(L):
        acc = 0.0
        for j in range(n):
            for i in range(m):
                for t in range(q):
                    xt = (x[l, t] + r[i] * cpsi[l, t] - xo[j, t]) / a[j]
                    yt = (y[l, t] + r[i] * spsi[l, t] - yo[j, t]) / b[j]
                    v = 1.0 - xt * xt - yt * yt
                    if v > 0.0:
                        acc += v
        out[l] = acc
    return out
