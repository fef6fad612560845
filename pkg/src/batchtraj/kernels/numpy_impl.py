"""Broadcast implementations of the per-element geometry kernels.

Shapes: trajectories (L, q); obstacle tracks (n, q); semi-axes (n,);
footprint offsets (m,); per-constraint angles and scales (L, n, m, q).
"""

import numpy as np


def _relative(x, y, cpsi, spsi, xo, yo, r):
    xt = x[:, None, None, :] + r[None, None, :, None] * cpsi[:, None, None, :] - xo[None, :, None, :]
    yt = y[:, None, None, :] + r[None, None, :, None] * spsi[:, None, None, :] - yo[None, :, None, :]
    return xt, yt


def polar_collision(x, y, cpsi, spsi, xo, yo, a, b, r, scaled):
    """Line-of-sight angle, clipped scale (>= 1) and the angle's cos/sin for every circle/obstacle/time.

    cos/sin come from the same ratios as the angle, so callers need no extra
    trig; ``arctan2(0, 0)`` is taken as 0.
    """
    xt, yt = _relative(x, y, cpsi, spsi, xo, yo, r)
    A = a[None, :, None, None]
    B = b[None, :, None, None]
    u, v = (B * xt, A * yt) if scaled else (xt, yt)
    alpha = np.arctan2(v, u)
    rho = np.hypot(u, v)
    zero = rho == 0.0
    safe = np.where(zero, 1.0, rho)
    ca = np.where(zero, 1.0, u / safe)
    sa = np.where(zero, 0.0, v / safe)
    d = (A * xt * ca + B * yt * sa) / (A * A * ca * ca + B * B * sa * sa)
    return alpha, np.maximum(d, 1.0), ca, sa


def polar_collision_into(x, y, cpsi, spsi, xo, yo, a, b, r, scaled, alpha, d, cos_a, sin_a):
    for dst, src in zip((alpha, d, cos_a, sin_a), polar_collision(x, y, cpsi, spsi, xo, yo, a, b, r, scaled)):
        dst[...] = src


def collision_targets(x, y, c, s, cpsi, spsi, xo, yo, a, b, r, ca, sa, d):
    """Sums of the collision rows of g (plain and offset-weighted) and their squared residuals.

    ``ca, sa`` are cos/sin of the line-of-sight angles. Returns
    ``(Sx, Rx, Sy, Ry, res_sq, res_max_scaled)``; the first four are (L, q).
    ``res_sq`` is the summed squared residual of the rows of ``F xi1 - g``,
    which use the cos/sin copies ``c, s``. ``res_max_scaled`` is the largest
    squared residual of a single row pair measured with the true heading
    ``cpsi, spsi`` and divided by the semi-axes; it bounds how far the
    footprint circle is from the target point on or outside the ellipse.
    """
    A = a[None, :, None, None]
    B = b[None, :, None, None]
    R = r[None, None, :, None]
    gx = xo[None, :, None, :] + A * d * ca
    gy = yo[None, :, None, :] + B * d * sa
    ex = x[:, None, None, :] + R * c[:, None, None, :] - gx
    ey = y[:, None, None, :] + R * s[:, None, None, :] - gy
    Sx = gx.sum(axis=(1, 2))
    Sy = gy.sum(axis=(1, 2))
    Rx = (R * gx).sum(axis=(1, 2))
    Ry = (R * gy).sum(axis=(1, 2))
    res_sq = (ex * ex + ey * ey).sum(axis=(1, 2, 3))
    hx = (x[:, None, None, :] + R * cpsi[:, None, None, :] - gx) / A
    hy = (y[:, None, None, :] + R * spsi[:, None, None, :] - gy) / B
    scaled = (hx * hx + hy * hy).reshape(ex.shape[0], -1)
    res_max_scaled = scaled.max(axis=1, initial=0.0)
    return Sx, Rx, Sy, Ry, res_sq, res_max_scaled


def collision_penalty(x, y, cpsi, spsi, xo, yo, a, b, r):
    """Sum over circles, obstacles and time of max(0, 1 - ellipse value), per trajectory."""
    xt, yt = _relative(x, y, cpsi, spsi, xo, yo, r)
    val = (xt / a[None, :, None, None]) ** 2 + (yt / b[None, :, None, None]) ** 2
    return np.maximum(0.0, 1.0 - val).sum(axis=(1, 2, 3))
