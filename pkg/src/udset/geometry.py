"""Euclidean primitives: points, segments, balls and their neighbourhoods."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

TOL = 1e-14

Point = tuple  # tuple of floats, fixed dimension per workspace


class DimensionMismatch(ValueError):
    pass


def as_point(x) -> tuple:
    p = tuple(float(c) for c in x)
    if not p:
        raise DimensionMismatch("points need at least one coordinate")
    if not all(math.isfinite(c) for c in p):
        raise ValueError(f"non-finite coordinate in {p!r}")
    return p


@dataclass(frozen=True)
class Segment:
    a: tuple
    b: tuple

    def __post_init__(self):
        a, b = as_point(self.a), as_point(self.b)
        if len(a) != len(b):
            raise DimensionMismatch(f"segment endpoints in R^{len(a)} and R^{len(b)}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return len(self.a)

    @property
    def length(self) -> float:
        return math.dist(self.a, self.b)

    @property
    def degenerate(self) -> bool:
        return self.a == self.b

    def point_at(self, t: float) -> tuple:
        return tuple(p + t * (q - p) for p, q in zip(self.a, self.b))

    def direction(self) -> tuple:
        n = self.length
        if n == 0.0:
            raise ValueError("degenerate segment has no direction")
        return tuple((q - p) / n for p, q in zip(self.a, self.b))


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float
    closed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not self.radius >= 0:
            raise ValueError(f"ball radius must be >= 0, got {self.radius}")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def contains(self, x, tol: float = TOL) -> bool:
        d = math.dist(as_point(x), self.center)
        if self.closed:
            return d <= self.radius + tol * _mag(x, self.center)
        return d < self.radius


def _mag(*pts) -> float:
    return max(1e-300, max(abs(c) for p in pts for c in p))


def dist_point_segment(x, s: Segment) -> float:
    """Distance from ``x`` to the closed segment ``s``.

    Interior foot point when the projection parameter falls in [0, 1],
    otherwise the nearer endpoint. A degenerate segment is a point.
    """
    x = as_point(x)
    if len(x) != s.dim:
        raise DimensionMismatch(f"point in R^{len(x)}, segment in R^{s.dim}")
    u = [q - p for p, q in zip(s.a, s.b)]
    L = math.hypot(*u)
    if L == 0.0:
        return math.dist(x, s.a)
    uh = [c / L for c in u]
    t = sum((xc - ac) * uc for xc, ac, uc in zip(x, s.a, uh))
    t = min(max(t, 0.0), L)
    foot = [ac + t * uc for ac, uc in zip(s.a, uh)]
    return math.dist(x, foot)


def in_neighborhood(x, segs: Sequence[Segment], radii: Sequence[float],
                    closed: bool = False, tol: float = TOL) -> bool:
    if len(segs) != len(radii):
        raise ValueError("segs and radii must have the same length")
    x = as_point(x)
    for s, r in zip(segs, radii):
        d = dist_point_segment(x, s)
        if closed:
            if d <= r + tol * _mag(x, s.a, s.b):
                return True
        elif d < r:
            return True
    return False


def subdivide_to_unit_length(s: Segment) -> list[Segment]:
    n = max(1, math.ceil(s.length - TOL))
    if n == 1:
        return [s]
    a = np.asarray(s.a)
    b = np.asarray(s.b)
    knots = [a + (b - a) * (i / n) for i in range(n + 1)]
    knots[0], knots[-1] = a, b
    return [Segment(tuple(knots[i]), tuple(knots[i + 1])) for i in range(n)]


def segments_to_arrays(segs: Sequence[Segment]) -> tuple[np.ndarray, np.ndarray]:
    if not segs:
        return np.zeros((0, 0)), np.zeros((0, 0))
    a = np.array([s.a for s in segs], dtype=float)
    b = np.array([s.b for s in segs], dtype=float)
    return a, b
