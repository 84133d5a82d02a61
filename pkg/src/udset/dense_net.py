"""The countable dense set R of dyadic points in B(0,1) and finite eps-nets drawn from it.

R is enumerated level by level: level ``j`` holds the points whose coordinates
are ``p / 2**j`` with ``j`` minimal (some numerator odd), sorted
lexicographically, restricted to the open unit ball.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .kernels import SegmentIndex


@lru_cache(maxsize=64)
def _level(d: int, j: int) -> np.ndarray:
    """Integer numerators of the level-``j`` points, lexicographically sorted."""
    r = 2 ** j
    ax = np.arange(-r + 1, r)
    grid = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1).reshape(-1, d)
    keep = (grid.astype(float) ** 2).sum(axis=1) < float(r) ** 2
    if j > 0:
        keep &= (grid % 2 != 0).any(axis=1)
    pts = grid[keep]
    order = np.lexsort(pts.T[::-1])
    out = pts[order]
    out.setflags(write=False)
    return out


def _level_offsets(d: int, upto_index: int) -> list[int]:
    offs = [0]
    j = 0
    while offs[-1] <= upto_index:
        offs.append(offs[-1] + len(_level(d, j)))
        j += 1
    return offs


def enumerate_R(d: int, index: int) -> tuple:
    if index < 0:
        raise ValueError("index must be >= 0")
    if d < 1:
        raise ValueError("dimension must be >= 1")
    offs = _level_offsets(d, index)
    j = next(k for k in range(len(offs) - 1) if offs[k] <= index < offs[k + 1])
    num = _level(d, j)[index - offs[j]]
    return tuple(float(c) / 2 ** j for c in num)


def R_prefix(d: int, size: int) -> np.ndarray:
    """The first ``size`` points of the enumeration as an array."""
    out = []
    j = 0
    while sum(len(x) for x in out) < size:
        out.append(_level(d, j).astype(float) / 2 ** j)
        j += 1
    if not out:
        return np.zeros((0, d))
    return np.concatenate(out)[:size]


def dyadic_exponent(x: float) -> Optional[int]:
    """Smallest j >= 0 with x * 2**j an integer, or None."""
    if not math.isfinite(x):
        return None
    m, e = math.frexp(x)
    if m == 0.0:
        return 0
    # x = m * 2**e with 0.5 <= |m| < 1 and m has at most 53 significant bits
    num = int(m * 2 ** 53)
    j = 53 - e
    while j > 0 and num % 2 == 0:
        num //= 2
        j -= 1
    return max(j, 0)


def in_R(p) -> bool:
    """Exact membership in R: dyadic coordinates and Euclidean norm < 1."""
    if any(dyadic_exponent(c) is None for c in p):
        return False
    return math.fsum(c * c for c in p) < 1.0


def R_index(p) -> int:
    """Position of ``p`` in the enumeration (inverse of :func:`enumerate_R`)."""
    if not in_R(p):
        raise ValueError(f"{p!r} is not a point of R")
    d = len(p)
    j = max(dyadic_exponent(c) for c in p)
    num = np.array([int(round(c * 2 ** j)) for c in p])
    lvl = _level(d, j)
    lo, hi = 0, len(lvl)
    key = tuple(num)
    while lo < hi:
        mid = (lo + hi) // 2
        if tuple(lvl[mid]) < key:
            lo = mid + 1
        else:
            hi = mid
    return sum(len(_level(d, k)) for k in range(j)) + lo


def net_exponent(eps: float, d: int) -> int:
    """Minimal j with 2**-j * sqrt(d) <= eps / 2."""
    j = 0
    while 2.0 ** -j * math.sqrt(d) > eps / 2:
        j += 1
    return j


@dataclass(frozen=True)
class EpsNet:
    eps: float
    points: np.ndarray
    j: int
    d: int
    # None means the net covers all of B(0,1); otherwise (centre, radius)
    window: Optional[tuple] = None
    params: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.points)

    def in_ball(self, x, radius: float) -> np.ndarray:
        """Net points of the open ball B(x, radius)."""
        diff = self.points - np.asarray(x, dtype=float)[None, :]
        return self.points[np.sqrt((diff ** 2).sum(axis=1)) < radius]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(self.d)])
            for p in self.points:
                w.writerow([repr(float(c)) for c in p])


def _grid_nodes(d: int, h: float, centre: np.ndarray, reach: float) -> np.ndarray:
    lo = np.floor((centre - reach) / h).astype(int)
    hi = np.ceil((centre + reach) / h).astype(int)
    axes = [np.arange(lo[i], hi[i] + 1) for i in range(d)]
    g = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d).astype(float) * h
    return g[np.sqrt(((g - centre) ** 2).sum(axis=1)) < reach]


def build_net(eps: float, d: int = 2, window: Optional[tuple] = None,
              window_cells: int = 4) -> EpsNet:
    """Dyadic grid net R(eps).

    Without a window the net covers B(0,1). With ``window=(centre, None)`` it
    covers B(centre, (window_cells - 1) * h) where h is the grid step; the
    centre must be a grid node.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if eps > 2:
        raise ValueError(f"eps must be <= 2, got {eps}")
    j = net_exponent(eps, d)
    h = 2.0 ** -j
    if window is None:
        nodes = _grid_nodes(d, h, np.zeros(d), 1.0 + h * math.sqrt(d) / 2)
        norms = np.sqrt((nodes ** 2).sum(axis=1))
        inner = nodes[norms < 1.0]
        outer = nodes[norms >= 1.0]
        fine = h / 4
        if len(outer):
            shrunk = (1.0 - h) * outer / np.sqrt((outer ** 2).sum(axis=1))[:, None]
            shrunk = np.trunc(shrunk / fine) * fine
            inner = np.concatenate([inner, shrunk])
        pts = np.unique(inner, axis=0)
        win = None
    else:
        centre = np.asarray(window[0], dtype=float)
        if np.any(np.trunc(centre / h) * h != centre):
            raise ValueError("window centre must lie on the net grid")
        pts = _grid_nodes(d, h, centre, window_cells * h)
        pts = pts[(pts ** 2).sum(axis=1) < 1.0]
        pts = np.unique(pts, axis=0)
        win = (tuple(float(c) for c in centre), (window_cells - 1) * h)
    pts.setflags(write=False)
    return EpsNet(eps=float(eps), points=pts, j=j, d=d, window=win,
                  params={"grid_step": h, "window_cells": window_cells})


def uniform_ball(n: int, d: int, rng: np.random.Generator, centre=None,
                 radius: float = 1.0) -> np.ndarray:
    g = rng.standard_normal((n, d))
    g /= np.sqrt((g ** 2).sum(axis=1))[:, None]
    r = radius * rng.random(n) ** (1.0 / d)
    out = g * r[:, None]
    if centre is not None:
        out += np.asarray(centre, dtype=float)[None, :]
    return out


def net_property_check(net: EpsNet, samples: int, seed: int) -> int:
    """Number of uniform samples of the covered ball farther than eps from the net."""
    rng = np.random.default_rng(seed)
    if net.window is None:
        xs = uniform_ball(samples, net.d, rng)
    else:
        xs = uniform_ball(samples, net.d, rng, centre=net.window[0], radius=net.window[1])
    if len(net.points) == 0:
        return samples
    idx = SegmentIndex(net.points, net.points, pad=net.eps)
    covered = idx.any_within(xs, net.eps, closed=False)
    return int(samples - covered.sum())
