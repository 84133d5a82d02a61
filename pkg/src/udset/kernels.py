"""Batched point-to-segment queries with a uniform bucket grid.

The inner loops live in the compiled ``_kernels`` extension when it was
built; otherwise the numpy versions in ``_fallback`` are used. Setting
``UDSET_BACKEND=numpy`` forces the fallback.
"""
from __future__ import annotations

import itertools
import os

import numpy as np

from . import _fallback
from .geometry import TOL

try:
    if os.environ.get("UDSET_BACKEND", "").lower() == "numpy":
        raise ImportError("numpy backend requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "cython" if _compiled is not None else "numpy"


def _impl(backend: str | None):
    backend = backend or BACKEND
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return _compiled
    return _fallback


class SegmentIndex:
    """Bucket grid over a fixed list of segments.

    A segment is registered in every cell whose centre lies within
    ``pad + half_diagonal`` of it, so a threshold query with per-segment
    thresholds ``<= pad`` only has to inspect the cell containing the point.
    """

    def __init__(self, a, b, pad: float, cell: float | None = None,
                 backend: str | None = None):
        self.a = np.ascontiguousarray(a, dtype=float)
        self.b = np.ascontiguousarray(b, dtype=float)
        if self.a.shape != self.b.shape or self.a.ndim != 2:
            raise ValueError("endpoint arrays must both have shape (m, d)")
        self.m, self.d = self.a.shape
        self.pad = float(pad)
        self.backend = backend
        self._brute = None
        self._build(cell)

    def _build(self, cell):
        m, d = self.m, self.d
        if m == 0:
            self.lo = np.zeros(d)
            self.cell = 1.0
            self.shape = np.ones(d, dtype=np.int64)
            self.cell_start = np.zeros(2, dtype=np.int64)
            self.cell_items = np.zeros(0, dtype=np.int64)
            return
        lo = np.minimum(self.a, self.b).min(axis=0) - self.pad
        hi = np.maximum(self.a, self.b).max(axis=0) + self.pad
        span = float((hi - lo).max())
        if cell is None:
            per_axis = 64 if d <= 2 else (16 if d == 3 else 4)
            cell = max(2.0 * self.pad, span / per_axis, 1e-300)
        slack = 1e-9 * max(1.0, span)
        lo = lo - slack
        shape = np.maximum(1, np.ceil((hi + slack - lo) / cell)).astype(np.int64)
        self.lo, self.cell, self.shape = lo, float(cell), shape
        half_diag = 0.5 * cell * np.sqrt(d)
        reach = self.pad + half_diag + slack
        strides = np.array([int(np.prod(shape[i + 1:])) for i in range(d)], dtype=np.int64)
        buckets: list[list[int]] = [[] for _ in range(int(np.prod(shape)))]
        for j in range(m):
            s_lo = np.minimum(self.a[j], self.b[j]) - reach
            s_hi = np.maximum(self.a[j], self.b[j]) + reach
            i_lo = np.clip(np.floor((s_lo - lo) / cell), 0, shape - 1).astype(int)
            i_hi = np.clip(np.floor((s_hi - lo) / cell), 0, shape - 1).astype(int)
            grids = np.array(list(itertools.product(
                *[range(i_lo[k], i_hi[k] + 1) for k in range(d)])), dtype=np.int64)
            centres = lo + (grids + 0.5) * cell
            dist, _ = _fallback.seg_dist_matrix(centres, self.a[j:j + 1], self.b[j:j + 1])
            for g in grids[dist[:, 0] <= reach]:
                buckets[int(g @ strides)].append(j)
        counts = np.array([len(x) for x in buckets], dtype=np.int64)
        self.cell_start = np.r_[0, np.cumsum(counts)].astype(np.int64)
        self.cell_items = np.fromiter(itertools.chain.from_iterable(buckets),
                                      dtype=np.int64, count=int(counts.sum()))

    def _brute_index(self) -> "SegmentIndex":
        if self._brute is None:
            big = SegmentIndex.__new__(SegmentIndex)
            big.a, big.b, big.m, big.d = self.a, self.b, self.m, self.d
            big.pad, big.backend, big._brute = np.inf, self.backend, None
            big.lo = np.full(self.d, -np.inf)
            big.cell = np.inf
            big.shape = np.ones(self.d, dtype=np.int64)
            big.cell_start = np.array([0, self.m], dtype=np.int64)
            big.cell_items = np.arange(self.m, dtype=np.int64)
            self._brute = big
        return self._brute

    def any_within(self, pts, thr, closed: bool = True, tol: float = TOL) -> np.ndarray:
        """Boolean mask: point lies within ``thr[j]`` of some segment ``j``."""
        pts = np.ascontiguousarray(np.atleast_2d(pts), dtype=float)
        if pts.shape[1] != self.d and self.m:
            raise ValueError(f"points in R^{pts.shape[1]}, segments in R^{self.d}")
        thr = np.broadcast_to(np.asarray(thr, dtype=float), (self.m,)).copy()
        if self.m == 0:
            return np.zeros(pts.shape[0], dtype=bool)
        idx = self
        if thr.max() > self.pad:
            idx = self._brute_index()
        if not np.isfinite(idx.cell):
            # single bucket: the cell lookup must always land in it
            lo, cell, shape = np.full(self.d, -1e300), 1e301, np.ones(self.d, dtype=np.int64)
            pts_q = np.clip(pts, -1e299, 1e299)
        else:
            lo, cell, shape, pts_q = idx.lo, idx.cell, idx.shape, pts
        out = _impl(self.backend).any_within(
            pts_q, self.a, self.b, thr, idx.cell_start, idx.cell_items,
            np.ascontiguousarray(lo, dtype=float), float(cell),
            np.ascontiguousarray(shape, dtype=np.int64), bool(closed), float(tol))
        return np.asarray(out, dtype=bool)

    def min_dist(self, pts) -> tuple[np.ndarray, np.ndarray]:
        pts = np.ascontiguousarray(np.atleast_2d(pts), dtype=float)
        dist, idx = _impl(self.backend).min_dist(pts, self.a, self.b)
        return np.asarray(dist), np.asarray(idx)
