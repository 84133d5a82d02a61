"""Box counting, cover sums and projection lengths."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from itertools import product
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

Oracle = Callable[[np.ndarray], np.ndarray]


def _oracle(handle) -> Oracle:
    f = getattr(handle, "contains", handle)
    return lambda pts: np.asarray(f(pts), dtype=bool)


def _node_range(lo: float, hi: float, eps: float) -> np.ndarray:
    """Integers i with lo <= i*eps < hi."""
    return np.arange(math.ceil(lo / eps - 1e-12), math.ceil(hi / eps - 1e-12))


def _stencil_offsets(d: int) -> np.ndarray:
    """Cell centre plus its 2^d corners, in half-cell units (5 points for d = 2)."""
    corners = np.array(list(product((-1, 1), repeat=d)))
    return np.vstack([np.zeros((1, d), dtype=int), corners])


def _window_nodes(window, eps: float) -> np.ndarray:
    axes = [_node_range(lo, hi, eps) for lo, hi in window]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def box_count(handle, eps: float, window: Sequence[tuple]) -> int:
    """Number of grid cells whose centre-plus-corner stencil meets the set.

    Cells are closed cubes of side ``eps`` centred at the nodes of eps*Z^d that
    lie in the half-open window prod [lo, hi).
    """
    return box_count_series(handle, [eps], window).counts[0]


@dataclass
class BoxCountSeries:
    scales: list
    counts: list
    slope: Optional[float] = None
    residual: Optional[float] = None
    degenerate: bool = False

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eps", "count"])
            for e, c in zip(self.scales, self.counts):
                w.writerow([repr(float(e)), int(c)])

    def to_dict(self) -> dict:
        return {"scales": [float(e) for e in self.scales], "counts": [int(c) for c in self.counts],
                "slope": self.slope, "residual": self.residual, "degenerate": self.degenerate}


def box_count_series(handle, scales: Sequence[float], window: Sequence[tuple]) -> BoxCountSeries:
    """Box counts at dyadic ``scales`` with one membership pass over the shared stencil lattice."""
    oracle = _oracle(handle)
    d = len(window)
    fine = min(scales) / 2.0
    offsets = _stencil_offsets(d)
    sizes, keys = [], []
    for eps in scales:
        ratio = eps / (2.0 * fine)
        r = int(round(ratio))
        if abs(ratio - r) > 1e-9 or r < 1:
            raise ValueError("scales must be power-of-two multiples of the finest scale")
        nodes_h = _window_nodes(window, eps) * 2  # half-cell units at this scale
        sizes.append(len(nodes_h))
        for off in offsets:
            keys.append((nodes_h + off) * r)
    if not keys or sum(sizes) == 0:
        return BoxCountSeries(list(scales), [0] * len(scales))
    K = np.concatenate(keys)
    lo = K.min(axis=0)
    dims = tuple(int(v) for v in K.max(axis=0) - lo + 1)
    flat = np.ravel_multi_index(tuple((K - lo).T), dims)
    uniq, inv = np.unique(flat, return_inverse=True)
    lattice = np.stack(np.unravel_index(uniq, dims), axis=1) + lo
    member = oracle(lattice * fine)[inv]
    counts = []
    pos = 0
    for size in sizes:
        block = member[pos:pos + size * len(offsets)].reshape(len(offsets), size)
        counts.append(int(block.any(axis=0).sum()))
        pos += size * len(offsets)
    return BoxCountSeries(list(scales), counts)


def dimension_fit(series: BoxCountSeries) -> BoxCountSeries:
    """Least-squares slope of log N against log(1/eps)."""
    if len(series.scales) < 4:
        raise ValueError("need at least 4 scales")
    x = np.log(1.0 / np.asarray(series.scales, dtype=float))
    counts = np.asarray(series.counts, dtype=float)
    if np.any(counts <= 0) or np.all(counts == counts[0]):
        series.slope, series.residual, series.degenerate = 0.0, 0.0, True
        return series
    y = np.log(counts)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    series.slope = float(coef[0])
    series.residual = float(res[0]) if len(res) else 0.0
    series.degenerate = False
    return series


def hausdorff_sum(cover: Iterable, r: float) -> float:
    """Sum of diam^r over a cover (objects with ``diameter`` or ``radius``, or raw diameters)."""
    if not r > 0:
        raise ValueError("r must be positive")
    terms = []
    for c in cover:
        if hasattr(c, "diameter"):
            diam = c.diameter
        elif hasattr(c, "radius"):
            diam = 2.0 * c.radius
        else:
            diam = float(c)
        terms.append(diam ** r)
    return math.fsum(terms)


@dataclass
class ProjectionReport:
    v: tuple
    intervals: list
    length: float

    def to_dict(self) -> dict:
        return {"v": list(self.v), "intervals": self.intervals, "length": self.length}


def _tables_of(handle):
    return getattr(handle, "tables", handle)


def projection_intervals(a: np.ndarray, b: np.ndarray, v) -> list:
    v = np.asarray(v, dtype=float)
    pa, pb = a @ v, b @ v
    lo, hi = np.minimum(pa, pb), np.maximum(pa, pb)
    order = np.argsort(lo, kind="stable")
    merged: list = []
    for s, e in zip(lo[order].tolist(), hi[order].tolist()):
        if merged and s <= merged[-1][1]:
            if e > merged[-1][1]:
                merged[-1][1] = e
        else:
            merged.append([s, e])
    return merged


def projection_interval_length(handle, v, samples: int = 0, seed: int = 0) -> ProjectionReport:
    """Length of the union of projections of the R_1 pieces onto direction v.

    Each piece projects to an interval, so the union is computed exactly
    (``samples`` and ``seed`` are accepted for interface symmetry only).
    """
    v = np.asarray(v, dtype=float)
    nv = float(np.linalg.norm(v))
    if not nv > 0:
        raise ValueError("direction must be nonzero")
    v = v / nv
    a, b = _tables_of(handle).pieces(1)
    merged = projection_intervals(a, b, v)
    length = math.fsum(e - s for s, e in merged)
    return ProjectionReport(tuple(v.tolist()), merged, length)


def projection_sweep(handle, directions: int = 360) -> list:
    out = []
    for t in range(directions):
        th = math.pi * t / directions
        out.append(projection_interval_length(handle, (math.cos(th), math.sin(th))).length)
    return out


def slope_report_json(series: BoxCountSeries, **extra) -> str:
    out = series.to_dict()
    out.update(extra)
    return json.dumps(out, sort_keys=True)
