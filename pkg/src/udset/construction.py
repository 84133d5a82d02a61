"""Finite-depth tables (R_k, w_k), the layered sets M_k(lambda), T_lambda and S.

Level 1 uses a net of the whole unit ball. Deeper levels refine only inside
a window around ``focus`` (see ``build_tables``); each level contributes a
finite generation of pieces whose tube radius at level n is 2**-(g + n).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _fallback
from .dense_net import EpsNet, build_net
from .geometry import TOL
from .kernels import SegmentIndex
from .tubes import SegmentTable, in_O_n


class DepthExceeded(ValueError):
    """A query needs levels beyond the built tables."""


class SegmentBudgetExceeded(RuntimeError):
    def __init__(self, k: int, pieces: int, budget: int):
        super().__init__(f"segment budget {budget} exhausted at level k={k} ({pieces} pieces)")
        self.k = k


def window_top(k: int, lam: float) -> int:
    """Largest integer n with n <= (1 + lam) * k."""
    return int(math.floor((1.0 + lam) * k + 1e-9))


@dataclass
class ConstructionTables:
    d: int
    depth: int
    w: list
    nets: list
    table: SegmentTable
    level_end: list
    focus: tuple
    window_cells: int
    chord_a: np.ndarray = None
    chord_b: np.ndarray = None
    chord_end: list = None
    _level_idx: dict = field(default_factory=dict, repr=False)
    evaluations: int = field(default=0, repr=False)

    def pieces(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Endpoint arrays of the pieces making up R_n."""
        e = self.level_end[n]
        return self.table.a[:e], self.table.b[:e]

    def chords(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Unsubdivided chords of R_n (same union as the pieces, each one convex)."""
        e = self.chord_end[n]
        return self.chord_a[:e], self.chord_b[:e]

    def level_index(self, n: int) -> SegmentIndex:
        if n not in self._level_idx:
            a, b = self.pieces(n)
            self._level_idx[n] = SegmentIndex(a, b, pad=self.w[n])
        return self._level_idx[n]

    def require(self, top: int) -> None:
        if top > self.depth:
            raise DepthExceeded(f"query needs level {top}, tables built to depth {self.depth}")

    def to_dict(self, with_pieces: bool = True) -> dict:
        out = {
            "d": self.d,
            "depth": self.depth,
            "focus": list(self.focus),
            "window_cells": self.window_cells,
            "w": [float(x) for x in self.w],
            "nets": [None] + [{"k": k, "eps": n.eps, "grid_exponent": n.j, "size": len(n),
                               "window": None if n.window is None else
                               {"centre": list(n.window[0]), "radius": n.window[1]}}
                              for k, n in enumerate(self.nets) if k > 0],
            "segments": [[0, 0]] + [[self.level_end[k - 1], self.level_end[k]]
                                    for k in range(1, self.depth + 1)],
        }
        if with_pieces:
            out["pieces"] = {"a": self.table.a.tolist(), "b": self.table.b.tolist(),
                             "generation": self.table.exponents.tolist()}
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(**kw), sort_keys=True)


def _chords(points: np.ndarray):
    n = len(points)
    if n == 1:
        return points.copy(), points.copy(), [(0, 0)]
    i, j = np.triu_indices(n, k=1)
    return points[i], points[j], list(zip(i.tolist(), j.tolist()))


def _subdivide(a: np.ndarray, b: np.ndarray):
    lengths = np.sqrt(((b - a) ** 2).sum(axis=1))
    counts = np.maximum(1, np.ceil(lengths - TOL)).astype(int)
    pa, pb, owner, part = [], [], [], []
    for c, (p, q, cnt) in enumerate(zip(a, b, counts)):
        if cnt == 1:
            pa.append(p); pb.append(q); owner.append(c); part.append(0)
            continue
        knots = [p + (q - p) * (t / cnt) for t in range(cnt + 1)]
        knots[0], knots[-1] = p, q
        for t in range(cnt):
            pa.append(knots[t]); pb.append(knots[t + 1]); owner.append(c); part.append(t)
    return np.array(pa), np.array(pb), owner, part


def build_tables(depth: int, w0: float = 1.0, d: int = 2, segment_budget: int = 250_000,
                 window_cells: int = 4, focus: Optional[Sequence[float]] = None) -> ConstructionTables:
    """Build (R_k, w_k) for k = 1..depth.

    net_k = R(w_{k-1}/k); R_k adds every chord of net_k to R_{k-1};
    w_k = min(w_{k-1}/4, tau_k/2, margin_k) where tau_k is the smallest tube
    radius at level k among the pieces of R_k and margin_k keeps the closed
    w_k-neighbourhood of R_k inside the open unit ball.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if not w0 > 0:
        raise ValueError("w0 must be positive")
    focus = tuple(0.0 for _ in range(d)) if focus is None else tuple(float(c) for c in focus)
    if len(focus) != d:
        raise ValueError("focus dimension mismatch")
    w = [float(w0)]
    nets: list[Optional[EpsNet]] = [None]
    A = np.zeros((0, d))
    B = np.zeros((0, d))
    gens = np.zeros(0, dtype=np.int64)
    sources: list = []
    level_end = [0]
    CA, CB, chord_end = [], [], [0]
    for k in range(1, depth + 1):
        eps = min(w[k - 1] / k, 2.0)
        if k == 1:
            net = build_net(eps, d)
        else:
            net = build_net(eps, d, window=(focus, None), window_cells=window_cells)
        ca, cb, pairs = _chords(net.points)
        pa, pb, owner, part = _subdivide(ca, cb)
        if len(A) + len(pa) > segment_budget:
            raise SegmentBudgetExceeded(k, len(A) + len(pa), segment_budget)
        A = np.concatenate([A, pa])
        B = np.concatenate([B, pb])
        gens = np.concatenate([gens, np.full(len(pa), k, dtype=np.int64)])
        sources.extend((k, pairs[o][0], pairs[o][1], p) for o, p in zip(owner, part))
        level_end.append(len(A))
        CA.append(ca); CB.append(cb); chord_end.append(chord_end[-1] + len(ca))
        nets.append(net)
        tau = float(np.ldexp(1.0, -(int(gens.max()) + k)))
        reach = float(max(np.sqrt((A ** 2).sum(axis=1)).max(), np.sqrt((B ** 2).sum(axis=1)).max()))
        margin = (1.0 - reach) / 2.0
        wk = min(w[k - 1] / 4.0, tau / 2.0, margin)
        if not wk > 0:
            raise RuntimeError(f"w_{k} underflowed to {wk}")
        w.append(wk)
    table = SegmentTable(A, B, gens, sources)
    return ConstructionTables(d=d, depth=depth, w=w, nets=nets, table=table,
                              level_end=level_end, focus=focus, window_cells=window_cells,
                              chord_a=np.concatenate(CA), chord_b=np.concatenate(CB),
                              chord_end=chord_end)


def _pts(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    return np.atleast_2d(arr), arr.ndim == 1


def dist_to_R(x, n: int, tables: ConstructionTables) -> np.ndarray:
    tables.require(n)
    pts, single = _pts(x)
    dist, _ = tables.level_index(n).min_dist(pts)
    return dist[0] if single else dist


def in_R(x, n: int, tables: ConstructionTables):
    """Membership in R_n (distance zero up to rounding)."""
    tables.require(n)
    pts, single = _pts(x)
    out = tables.level_index(n).any_within(pts, 0.0, closed=True)
    return bool(out[0]) if single else out


def _in_M_mask(pts: np.ndarray, k: int, lam: float, tables: ConstructionTables) -> np.ndarray:
    top = window_top(k, lam)
    out = np.zeros(len(pts), dtype=bool)
    for n in range(k, top + 1):
        todo = ~out
        if not todo.any():
            break
        tables.evaluations += 1
        out[todo] = tables.level_index(n).any_within(pts[todo], lam * tables.w[n], closed=True)
    return out


def in_M_k(x, k: int, lam: float, tables: ConstructionTables):
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    tables.require(window_top(k, lam))
    pts, single = _pts(x)
    out = _in_M_mask(pts, k, lam, tables)
    return bool(out[0]) if single else out


def in_T_lambda(x, lam: float, K: int, tables: ConstructionTables):
    """Membership in the depth-K truncation of T_lambda (intersection of M_1..M_K)."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    if K < 1:
        raise ValueError("K must be >= 1")
    tables.require(window_top(K, lam))
    pts, single = _pts(x)
    alive = np.ones(len(pts), dtype=bool)
    for k in range(1, K + 1):
        rows = np.nonzero(alive)[0]
        if rows.size == 0:
            break
        alive[rows] = _in_M_mask(pts[rows], k, lam, tables)
    return bool(alive[0]) if single else alive


def in_S(x, K: int, lam_max: float, tables: ConstructionTables):
    """Inner approximation of S by the truncated T_{lam_max}, lam_max < 1."""
    if not 0.0 <= lam_max < 1.0:
        raise ValueError("lam_max must lie in [0, 1)")
    return in_T_lambda(x, lam_max, K, tables)


def in_O_k(x, k: int, tables: ConstructionTables, M: Optional[int] = None):
    """Membership in the construction's tube set O_k (generation-indexed radii)."""
    return in_O_n(x, tables.table, k, M)


# --- segment containment -------------------------------------------------------

def _cover_matrix(pts: np.ndarray, a: np.ndarray, b: np.ndarray, thr: float) -> np.ndarray:
    out = np.zeros((len(pts), len(a)), dtype=bool)
    step = max(1, 4_000_000 // max(1, len(a)))
    for s in range(0, len(pts), step):
        dist, scale = _fallback.seg_dist_matrix(pts[s:s + step], a, b)
        out[s:s + step] = dist <= thr + TOL * scale
    return out


def _single_tube_cover(P: np.ndarray, Q: np.ndarray, k: int, lam: float,
                       tables: ConstructionTables) -> np.ndarray:
    """Segments [P_i, Q_i] lying in one closed tube closure(B(sigma, lam w_n))."""
    ok = np.zeros(len(P), dtype=bool)
    pts, inv = np.unique(np.concatenate([P, Q]), axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    iP, iQ = inv[:len(P)], inv[len(P):]
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    centre = (lo + hi) / 2
    rad = float(np.sqrt(((hi - lo) ** 2).sum())) / 2
    for n in range(k, window_top(k, lam) + 1):
        todo = np.nonzero(~ok)[0]
        if todo.size == 0:
            break
        a, b = tables.chords(n)
        thr = lam * tables.w[n]
        near, _ = _fallback.seg_dist_matrix(centre[None, :], a, b)
        keep = near[0] <= thr + rad + 1e-9 * max(1.0, rad)
        if not keep.any():
            continue
        C = _cover_matrix(pts, a[keep], b[keep], thr)
        step = max(1, 2_000_000 // C.shape[1])
        for s in range(0, todo.size, step):
            rows = todo[s:s + step]
            ok[rows] = (C[iP[rows]] & C[iQ[rows]]).any(axis=1)
    return ok


def _spatial_chunks(P: np.ndarray, Q: np.ndarray, size: int = 256) -> list:
    """Index chunks of nearby segments, so each chunk has a small bounding box."""
    mid = (P + Q) / 2
    span = max(float(np.ptp(mid, axis=0).max()) if len(mid) else 0.0, 1e-300)
    cells = max(1, int(math.sqrt(len(P) / size)))
    q = np.floor((mid - mid.min(axis=0)) / span * cells).astype(np.int64)
    q = np.minimum(q, cells - 1)
    order = np.lexsort(q.T[::-1])
    return [order[s:s + size] for s in range(0, len(order), size)]


def _segments_in_M(P: np.ndarray, Q: np.ndarray, k: int, lam: float,
                   tables: ConstructionTables, max_splits: int) -> np.ndarray:
    result = np.ones(len(P), dtype=bool)
    owner = np.arange(len(P))
    for _ in range(max_splits + 1):
        if len(P) == 0:
            return result
        # a sub-segment endpoint outside M_k settles its owner
        out = ~(_in_M_mask(P, k, lam, tables) & _in_M_mask(Q, k, lam, tables))
        if out.any():
            dead = np.unique(owner[out])
            result[dead] = False
            keep = ~np.isin(owner, dead)
            P, Q, owner = P[keep], Q[keep], owner[keep]
            if len(P) == 0:
                return result
        ok = np.zeros(len(P), dtype=bool)
        for rows in _spatial_chunks(P, Q):
            ok[rows] = _single_tube_cover(P[rows], Q[rows], k, lam, tables)
        bad = ~ok
        if not bad.any():
            return result
        P, Q, owner = P[bad], Q[bad], owner[bad]
        M = P + (Q - P) * 0.5
        P, Q = np.concatenate([P, M]), np.concatenate([M, Q])
        owner = np.concatenate([owner, owner])
    result[np.unique(owner)] = False
    return result


def segments_in_M(P, Q, k: int, lam: float, tables: ConstructionTables,
                  max_splits: int = 12, generation=None) -> np.ndarray:
    """Certified containment of segments [P_i, Q_i] in M_k(lam).

    A segment is accepted once it is cut (by bisection) into pieces that each
    lie in a single convex tube around a chord; unresolved after ``max_splits``
    halvings it is reported as not contained. ``generation[i] = g`` declares
    segment i to lie in R_g, which settles it when g <= floor((1+lam)k).
    """
    top = window_top(k, lam)
    tables.require(top)
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    out = np.ones(len(P), dtype=bool)
    todo = np.arange(len(P))
    if generation is not None:
        todo = np.nonzero(np.asarray(generation) > top)[0]
    if todo.size:
        out[todo] = _segments_in_M(P[todo], Q[todo], k, lam, tables, max_splits)
    return out


def segments_in_T(P, Q, lam: float, K: int, tables: ConstructionTables,
                  generation=None) -> np.ndarray:
    tables.require(window_top(K, lam))
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    gen = None if generation is None else np.asarray(generation)
    alive = np.ones(len(P), dtype=bool)
    for k in range(1, K + 1):
        rows = np.nonzero(alive)[0]
        if rows.size == 0:
            break
        alive[rows] = segments_in_M(P[rows], Q[rows], k, lam, tables,
                                    generation=None if gen is None else gen[rows])
    return alive


# --- sampling ------------------------------------------------------------------

def _points_on_pieces(a, b, rng, count, near=None, radius=None):
    if near is None:
        idx = rng.integers(0, len(a), count)
        t = rng.random(count)
        return a[idx] + t[:, None] * (b[idx] - a[idx])
    near = np.asarray(near, dtype=float)
    u = b - a
    L2 = (u ** 2).sum(axis=1)
    rel = near[None, :] - a
    tc = np.where(L2 > 0, (rel * u).sum(axis=1) / np.where(L2 > 0, L2, 1.0), 0.0)
    foot2 = ((rel - tc[:, None] * u) ** 2).sum(axis=1)
    half = np.sqrt(np.maximum(radius ** 2 - foot2, 0.0) / np.where(L2 > 0, L2, 1.0))
    lo = np.clip(tc - half, 0.0, 1.0)
    hi = np.clip(tc + half, 0.0, 1.0)
    ok = np.nonzero((foot2 < radius ** 2) & (hi > lo))[0]
    if ok.size == 0:
        return np.zeros((0, a.shape[1]))
    idx = ok[rng.integers(0, ok.size, count)]
    t = lo[idx] + rng.random(count) * (hi[idx] - lo[idx])
    pts = a[idx] + t[:, None] * u[idx]
    return pts[np.sqrt(((pts - near) ** 2).sum(axis=1)) < radius]


def sample_T_lambda(lam: float, K: int, count: int, seed: int, tables: ConstructionTables,
                    near=None, radius: Optional[float] = None,
                    max_attempts: int = 1_000_000) -> np.ndarray:
    """Points of the truncated T_lambda drawn from the pieces of R_n, n = floor((1+lam)K).

    Candidates are verified with :func:`in_T_lambda`; rejected ones are redrawn.
    """
    top = window_top(K, lam)
    tables.require(top)
    rng = np.random.default_rng(seed)
    a, b = tables.pieces(top)
    out: list[np.ndarray] = []
    have = 0
    tried = 0
    while have < count:
        if tried >= max_attempts:
            raise RuntimeError(f"only {have} of {count} points of T_{lam} after {tried} attempts")
        batch = min(max(2 * (count - have), 64), max_attempts - tried)
        cand = _points_on_pieces(a, b, rng, batch, near, radius)
        tried += batch
        if len(cand) == 0:
            continue
        keep = cand[in_T_lambda(cand, lam, K, tables)]
        out.append(keep)
        have += len(keep)
    return np.concatenate(out)[:count]


def sample_M_k(k: int, lam: float, count: int, seed: int,
               tables: ConstructionTables) -> np.ndarray:
    """Members of M_k(lam): a point of R_n plus an offset of length <= lam w_n."""
    top = window_top(k, lam)
    tables.require(top)
    rng = np.random.default_rng(seed)
    ns = rng.integers(k, top + 1, count)
    out = np.empty((count, tables.d))
    for n in np.unique(ns):
        rows = np.nonzero(ns == n)[0]
        a, b = tables.pieces(n)
        base = _points_on_pieces(a, b, rng, rows.size)
        g = rng.standard_normal((rows.size, tables.d))
        g /= np.sqrt((g ** 2).sum(axis=1))[:, None]
        r = lam * tables.w[n] * rng.random(rows.size) ** (1.0 / tables.d) * (1 - 1e-9)
        out[rows] = base + g * r[:, None]
    return out


@dataclass
class SetHandle:
    kind: str  # "M", "T" or "S"
    tables: ConstructionTables
    lam: float
    K: int

    def contains(self, x):
        if self.kind == "M":
            return in_M_k(x, self.K, self.lam, self.tables)
        if self.kind == "T":
            return in_T_lambda(x, self.lam, self.K, self.tables)
        if self.kind == "S":
            return in_S(x, self.K, self.lam, self.tables)
        raise ValueError(f"unknown set kind {self.kind!r}")

    def distance(self, x) -> np.ndarray:
        """1-Lipschitz distance function.

        Exact for M_k(lambda): min over n of (dist(x, R_n) - lambda w_n)^+.
        For T and S it is the distance to the skeleton R_n, n = floor((1+lambda)K),
        a subset of the set, so it bounds the true distance from above.
        """
        pts, single = _pts(x)
        if self.kind == "M":
            top = window_top(self.K, self.lam)
            self.tables.require(top)
            best = np.full(len(pts), np.inf)
            for n in range(self.K, top + 1):
                dn = self.tables.level_index(n).min_dist(pts)[0]
                best = np.minimum(best, np.maximum(dn - self.lam * self.tables.w[n], 0.0))
        else:
            best = dist_to_R(pts, window_top(self.K, self.lam), self.tables)
        return best[0] if single else best

    def sample(self, count: int, seed: int) -> np.ndarray:
        if self.kind == "M":
            return sample_M_k(self.K, self.lam, count, seed, self.tables)
        return sample_T_lambda(self.lam, self.K, count, seed, self.tables)

    def raster(self, resolution: int) -> np.ndarray:
        """Membership over pixel centres of [-1, 1]^2; row 0 is y = +1."""
        if self.tables.d != 2:
            raise ValueError("rendering is only defined for d = 2")
        c = -1.0 + (np.arange(resolution) + 0.5) * (2.0 / resolution)
        X, Y = np.meshgrid(c, c[::-1])
        pts = np.column_stack([X.ravel(), Y.ravel()])
        inside = (pts ** 2).sum(axis=1) < 1.0
        mask = np.zeros(len(pts), dtype=bool)
        mask[inside] = self.contains(pts[inside])
        return mask.reshape(resolution, resolution)
