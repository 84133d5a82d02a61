"""Shrinking tube sets around countably many segments and their Hausdorff cover certificates.

A :class:`SegmentTable` lists pieces L_1, L_2, ... of length at most one,
each with an integer exponent e_m. At level n the tube around L_m has
radius 2**-(e_m + n); the tube set O_n is the union of those open tubes.
For the segment enumeration of R the exponent is the index m itself.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dense_net import R_prefix
from .geometry import TOL, Ball, Segment, subdivide_to_unit_length
from .kernels import SegmentIndex


class ContractViolation(ValueError):
    pass


@dataclass
class SegmentTable:
    a: np.ndarray
    b: np.ndarray
    exponents: np.ndarray
    # per piece: (source tag, i, j, piece number within its chord)
    sources: list = field(default_factory=list)
    _indexes: dict = field(default_factory=dict, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.a)

    @property
    def d(self) -> int:
        return self.a.shape[1]

    def segment(self, m: int) -> Segment:
        """The piece L_m, 1-based."""
        return Segment(tuple(self.a[m - 1]), tuple(self.b[m - 1]))

    def lengths(self) -> np.ndarray:
        return np.sqrt(((self.b - self.a) ** 2).sum(axis=1))

    def radii(self, n: int, M: Optional[int] = None) -> np.ndarray:
        M = len(self) if M is None else M
        return np.ldexp(1.0, -(self.exponents[:M] + n))

    def tube_index(self, M: int, pad: float) -> SegmentIndex:
        key = (M, pad)
        if key not in self._indexes:
            self._indexes[key] = SegmentIndex(self.a[:M], self.b[:M], pad=pad)
        return self._indexes[key]


def _cantor_pairs(size: int):
    """Unordered index pairs (i, j), i < j < size, in Cantor diagonal order."""
    for s in range(1, 2 * size - 2):
        for i in range(max(0, s - size + 1), s // 2 + 1):
            j = s - i
            if i < j < size:
                yield i, j


def build_segment_table(R_prefix_size: int, d: int = 2) -> SegmentTable:
    if R_prefix_size < 2:
        raise ContractViolation("need at least two points of R")
    pts = R_prefix(d, R_prefix_size)
    a, b, src = [], [], []
    for i, j in _cantor_pairs(R_prefix_size):
        for p, piece in enumerate(subdivide_to_unit_length(Segment(tuple(pts[i]), tuple(pts[j])))):
            a.append(piece.a)
            b.append(piece.b)
            src.append(("R", i, j, p))
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    return SegmentTable(a, b, np.arange(1, len(a) + 1, dtype=np.int64), src)


def in_O_n(x, table: SegmentTable, n: int, M: Optional[int] = None) -> np.ndarray | bool:
    """Membership in the truncated tube set O_n, clipped to the open unit ball."""
    M = len(table) if M is None else M
    if M > len(table):
        raise ContractViolation(f"truncation M={M} exceeds table size {len(table)}")
    if n < 1:
        raise ContractViolation("n must be a positive integer")
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if M == 0:
        out = np.zeros(len(pts), dtype=bool)
    else:
        radii = table.radii(n, M)
        pad = float(np.ldexp(1.0, -(int(table.exponents[:M].min()) + 1)))
        idx = table.tube_index(M, pad)
        out = idx.any_within(pts, radii, closed=False)
        out &= (pts ** 2).sum(axis=1) < 1.0
    return bool(out[0]) if np.ndim(x) == 1 else out


def cover_tube(I: Segment, k: int) -> list[Ball]:
    """k open balls of radius 2/k whose union contains B(I, 1/k)."""
    if I.length > 1 + TOL:
        raise ContractViolation(f"segment length {I.length} exceeds 1")
    if k < 1:
        raise ContractViolation("k must be a positive integer")
    a = np.asarray(I.a)
    u = np.asarray(I.b) - a
    return [Ball(tuple(a + (i + 0.5) * u / k), 2.0 / k) for i in range(k)]


def tube_cover_sum(k: int, r: float) -> float:
    """Sum of diam**r over the k balls of :func:`cover_tube`, i.e. k * (4/k)**r."""
    return 4.0 ** r * float(k) ** (1.0 - r)


def lemma_bound(n: int, r: float) -> float:
    """4^r 2^{-(n+1)(r-1)} / (1 - 2^{-(r-1)})."""
    return 4.0 ** r * 2.0 ** (-(n + 1) * (r - 1)) / (1.0 - 2.0 ** (-(r - 1)))


@dataclass
class CoverReport:
    n: int
    r: float
    delta: float
    M: int
    sum: float
    bound: float
    partial_bound: float
    ball_counts: list
    max_diameter: float
    ok: bool

    def balls(self, table: SegmentTable, limit: int = 100_000) -> list[Ball]:
        total = sum(self.ball_counts)
        if total > limit:
            raise ValueError(f"cover has {total} balls; refusing to materialise more than {limit}")
        out = []
        for m, k in enumerate(self.ball_counts, start=1):
            out.extend(cover_tube(table.segment(m), k))
        return out

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "r": self.r, "delta": self.delta, "M": self.M,
                           "sum": self.sum, "bound": self.bound, "ok": self.ok})


def cover_sum_certificate(table: SegmentTable, M: int, n: int, r: float,
                          delta: float) -> CoverReport:
    if not r > 1:
        raise ContractViolation(f"exponent r must exceed 1, got {r}")
    if not delta > 0:
        raise ContractViolation("delta must be positive")
    if 2.0 ** (n + 1) < 4.0 / delta:
        raise ContractViolation(f"need 2^(n+1) >= 4/delta; got n={n}, delta={delta}")
    if not 1 <= M <= len(table):
        raise ContractViolation(f"truncation M={M} outside 1..{len(table)}")
    lengths = table.lengths()[:M]
    if np.any(lengths > 1 + TOL):
        raise ContractViolation("table pieces must have length <= 1")
    e = table.exponents[:M].astype(np.int64)
    counts = [1 << int(ei + n) for ei in e]
    terms = [tube_cover_sum(k, r) for k in counts]
    total = math.fsum(terms)
    partial = math.fsum(4.0 ** r * 2.0 ** (-(float(ei) + n) * (r - 1)) for ei in e)
    closed = lemma_bound(n, r)
    distinct = bool(np.all(e == np.arange(1, M + 1)))
    max_diam = max(4.0 / k for k in counts)
    ok = (total <= partial * (1 + 1e-12) + 1e-300 and max_diam <= delta
          and (not distinct or partial <= closed))
    return CoverReport(n=n, r=r, delta=delta, M=M, sum=total,
                       bound=closed if distinct else partial, partial_bound=partial,
                       ball_counts=counts, max_diameter=max_diam, ok=bool(ok))
