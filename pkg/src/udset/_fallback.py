"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``."""
from __future__ import annotations

import numpy as np


def seg_dist_matrix(pts: np.ndarray, a: np.ndarray, b: np.ndarray):
    """Distances (n, m) from every point to every segment, plus the rounding scale."""
    u = b - a
    L = np.sqrt(np.einsum("md,md->m", u, u))
    safe = np.where(L > 0, L, 1.0)
    uh = u / safe[:, None]
    rel = pts[:, None, :] - a[None, :, :]
    t = np.einsum("nmd,md->nm", rel, uh)
    t = np.clip(t, 0.0, L[None, :])
    t = np.where(L[None, :] > 0, t, 0.0)
    diff = rel - t[:, :, None] * uh[None, :, :]
    dist = np.sqrt(np.einsum("nmd,nmd->nm", diff, diff))
    seg_mag = np.maximum(np.abs(a).max(axis=1), np.abs(b).max(axis=1))
    scale = np.maximum(np.abs(pts).max(axis=1)[:, None], seg_mag[None, :])
    return dist, scale


def any_within(pts, a, b, thr, cell_start, cell_items, lo, cell, shape,
               closed, tol):
    n, d = pts.shape
    out = np.zeros(n, dtype=np.uint8)
    if n == 0:
        return out
    v = np.floor((pts - lo[None, :]) / cell).astype(np.int64)
    inside = np.all((v >= 0) & (v < shape[None, :]), axis=1)
    flat = np.zeros(n, dtype=np.int64)
    stride = 1
    for i in range(d - 1, -1, -1):
        flat += v[:, i] * stride
        stride *= int(shape[i])
    rows = np.nonzero(inside)[0]
    if rows.size == 0:
        return out
    cells, inv = np.unique(flat[rows], return_inverse=True)
    order = np.argsort(inv, kind="stable")
    bounds = np.searchsorted(inv[order], np.arange(cells.size + 1))
    for ci, c in enumerate(cells):
        items = cell_items[cell_start[c]:cell_start[c + 1]]
        if items.size == 0:
            continue
        sel = rows[order[bounds[ci]:bounds[ci + 1]]]
        for chunk in np.array_split(sel, max(1, sel.size * items.size // 2_000_000 + 1)):
            dist, scale = seg_dist_matrix(pts[chunk], a[items], b[items])
            if closed:
                hit = dist <= thr[items][None, :] + tol * scale
            else:
                hit = dist < thr[items][None, :]
            out[chunk] = hit.any(axis=1)
    return out


def min_dist(pts, a, b):
    n = pts.shape[0]
    dist = np.full(n, np.inf)
    idx = np.full(n, -1, dtype=np.int64)
    if a.shape[0] == 0 or n == 0:
        return dist, idx
    step = max(1, 2_000_000 // a.shape[0])
    for s in range(0, n, step):
        dm, _ = seg_dist_matrix(pts[s:s + step], a, b)
        idx[s:s + step] = dm.argmin(axis=1)
        dist[s:s + step] = dm[np.arange(dm.shape[0]), idx[s:s + step]]
    return dist, idx
