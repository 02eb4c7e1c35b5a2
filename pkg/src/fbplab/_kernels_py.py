"""Pure numpy stencil kernels (fallback for the compiled ``_kernels``)."""

import numpy as np


def metric_coefficients(h, hp, hpp, L, n, upper):
    """Mapped-Laplacian coefficients on an ``n x n`` block.

    Returns ``(A, B, C)`` of shape ``(n, n)`` (rows = y index) multiplying
    ``u_yy``, ``u_xy`` and ``u_y`` in mapped coordinates; ``u_xx`` has
    coefficient 1.
    """
    h = np.asarray(h, dtype=float)
    hp = np.asarray(hp, dtype=float)
    hpp = np.asarray(hpp, dtype=float)
    t = np.linspace(0.0, 1.0, n)[:, None]
    if upper:
        d = L - h
        z = 1.0 - t  # 2 - y1 with y1 = 1 + t
        A = (1.0 + hp**2 * z**2) / d**2
        B = -2.0 * z * hp / d
        C = -(2.0 * hp**2 + hpp * d) / d**2 * z
    else:
        A = (1.0 + hp**2 * t**2) / h**2
        B = -2.0 * t * hp / h
        C = (2.0 * hp**2 - hpp * h) / h**2 * t
    return A, B, C


def interior_triplets(h, hp, hpp, L, n, upper):
    """COO triplets of the mapped Laplacian on interior rows ``j = 1..n-2``.

    Node ``(j, i)`` has local index ``j*n + i``; ``x`` is periodic with
    spacing ``2 pi / n`` and ``y`` has spacing ``1 / (n - 1)``.
    """
    dx = 2.0 * np.pi / n
    dy = 1.0 / (n - 1)
    A, B, C = metric_coefficients(h, hp, hpp, L, n, upper)
    A, B, C = A[1:-1], B[1:-1], C[1:-1]
    jj, ii = np.meshgrid(np.arange(1, n - 1), np.arange(n), indexing="ij")
    ip = (ii + 1) % n
    im = (ii - 1) % n
    row = jj * n + ii
    ex = 1.0 / dx**2
    ey = A / dy**2
    cy = C / (2.0 * dy)
    cxy = B / (4.0 * dx * dy)
    entries = [
        (jj, ii, -2.0 * ey - 2.0 * ex),
        (jj, ip, np.broadcast_to(ex, ii.shape)),
        (jj, im, np.broadcast_to(ex, ii.shape)),
        (jj + 1, ii, ey + cy),
        (jj - 1, ii, ey - cy),
        (jj + 1, ip, cxy),
        (jj - 1, im, cxy),
        (jj + 1, im, -cxy),
        (jj - 1, ip, -cxy),
    ]
    rows = np.concatenate([row.ravel()] * len(entries))
    cols = np.concatenate([(j * n + i).ravel() for j, i, _ in entries])
    vals = np.concatenate([np.broadcast_to(v, ii.shape).ravel() for _, _, v in entries])
    return rows.astype(np.int64), cols.astype(np.int64), vals.astype(float)
