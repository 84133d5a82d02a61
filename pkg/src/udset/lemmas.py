"""Executable checks for the shift, critical-scale and main lemmas."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .construction import (ConstructionTables, DepthExceeded, in_M_k, in_T_lambda,
                           segments_in_M, segments_in_T, window_top)
from .dense_net import uniform_ball


class HypothesisViolation(ValueError):
    """A lemma's hypothesis fails for the given instance; nothing is certified."""

    def __init__(self, msg: str, n: Optional[int] = None):
        super().__init__(msg)
        self.n = n


class InsufficientDepth(DepthExceeded):
    def __init__(self, required: int, depth: int):
        super().__init__(f"tables built to depth {depth}, need depth {required}")
        self.required = required


class CertificateRejected(RuntimeError):
    def __init__(self, pair, msg: str = ""):
        super().__init__(msg or f"segment {pair} is not contained in the target set")
        self.pair = pair


def _w(tables) -> Sequence[float]:
    return tables.w if isinstance(tables, ConstructionTables) else tables


@dataclass(frozen=True)
class ShiftInstance:
    k: int
    lam: float
    psi: float
    x: tuple
    delta: float


def validate_shift(inst: ShiftInstance, tables: ConstructionTables) -> None:
    if not inst.delta > 0:
        raise HypothesisViolation(f"delta must be positive, got {inst.delta}")
    if inst.k < 1:
        raise HypothesisViolation("k must be >= 1")
    if not (0.0 <= inst.lam < inst.lam + inst.psi <= 1.0):
        raise HypothesisViolation(f"need 0 <= lambda < lambda+psi <= 1 (lambda={inst.lam}, psi={inst.psi})")
    top = window_top(inst.k, inst.lam)
    tables.require(window_top(inst.k, inst.lam + inst.psi))
    for n in range(1, top + 1):
        if inst.delta > inst.psi * tables.w[n]:
            raise HypothesisViolation(
                f"delta={inst.delta!r} exceeds psi*w_{n}={inst.psi * tables.w[n]!r}", n=n)
    if not in_M_k(np.asarray(inst.x, dtype=float), inst.k, inst.lam, tables):
        raise HypothesisViolation(f"x is not in M_{inst.k}({inst.lam})")


def shift_check(inst: ShiftInstance, samples: int, seed: int,
                tables: ConstructionTables) -> int:
    """Count sampled points of B(x, delta) falling outside M_k(lambda + psi)."""
    validate_shift(inst, tables)
    rng = np.random.default_rng(seed)
    pts = uniform_ball(samples, tables.d, rng, centre=np.asarray(inst.x, float), radius=inst.delta)
    inside = in_M_k(pts, inst.k, inst.lam + inst.psi, tables)
    return int((~inside).sum())


def crit_alpha(k: int, n: int, lam: float, psi: float, eta: float, tables) -> float:
    """alpha = w_n / (n + 1); below eta*Delta whenever Delta > psi*w_n and k*psi*eta >= 1."""
    w = _w(tables)
    if not (psi > 0 and eta > 0):
        raise ValueError("psi and eta must be positive")
    if k * psi * eta < 1.0 - 1e-12:
        raise ValueError(f"k={k} is below 1/(psi*eta)={1.0 / (psi * eta)!r}")
    if n < k:
        raise ValueError(f"n={n} is below k={k}")
    if n > window_top(k, lam):
        raise ValueError(f"n={n} exceeds (1+lambda)k={(1 + lam) * k!r}")
    if n >= len(w):
        raise InsufficientDepth(n, len(w) - 1)
    return w[n] / (n + 1)


def crit_segment_check(k: int, n: int, lam: float, psi: float, tables: ConstructionTables,
                       K: int, pairs: int = 200, seed: int = 0) -> dict:
    """Sampled chords of R(alpha) (= net_{n+1}) checked in M_l(lambda+psi), l = k..K."""
    tables.require(n + 1)
    net = tables.nets[n + 1].points
    rng = np.random.default_rng(seed)
    if len(net) < 2:
        i = j = np.zeros(1, dtype=int)
    else:
        i = rng.integers(0, len(net), pairs)
        j = rng.integers(0, len(net), pairs)
    P, Q = net[i], net[j]
    failures = {}
    ls = [l for l in range(k, K + 1) if window_top(l, lam + psi) <= tables.depth
          and l <= n + 1 <= window_top(l, lam + psi)]
    for l in ls:
        ok = segments_in_M(P, Q, l, lam + psi, tables)
        failures[l] = int((~ok).sum())
    return {"l_verified": ls, "pairs": len(P), "failures": failures}


def delta0_index(eta: float, psi: float) -> int:
    """N = floor(2 / (psi * eta)), at least 1."""
    return max(1, int(math.floor(2.0 / (psi * eta) + 1e-9)))


def delta0(eta: float, psi: float, tables) -> float:
    """Delta_0 = (psi / 2) * w_N, strictly below psi*w_n for every n <= N."""
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    if not 0.0 < psi <= 1.0:
        raise ValueError(f"psi must lie in (0, 1], got {psi}")
    w = _w(tables)
    N = delta0_index(eta, psi)
    if N >= len(w):
        raise InsufficientDepth(N, len(w) - 1)
    return 0.5 * psi * w[N]


@dataclass
class MainLemmaCertificate:
    eta: float
    psi: float
    delta0: float
    delta: float
    lam: float
    x: tuple
    K: int
    k: int
    n: int
    alpha: float
    net_points: np.ndarray
    pairs: list
    total_pairs: int
    l_range: tuple = field(default=(0, 0))

    @property
    def verified(self) -> int:
        return len(self.pairs)

    def to_dict(self) -> dict:
        return {"eta": self.eta, "psi": self.psi, "delta0": self.delta0, "delta": self.delta,
                "lambda": self.lam, "x": list(self.x), "K": self.K, "k": self.k, "n": self.n,
                "alpha": self.alpha, "total_pairs": self.total_pairs,
                "verified_pairs": self.verified, "l_range": list(self.l_range),
                "segments": [[self.net_points[i].tolist(), self.net_points[j].tolist()]
                             for i, j in self.pairs]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def minimal_k(delta: float, lam: float, psi: float, tables) -> tuple[int, int]:
    """Smallest k with delta > psi*w_n for some n <= (1+lam)k; returns (k, n)."""
    w = _w(tables)
    k = 1
    while True:
        n = window_top(k, lam)
        if n >= len(w):
            raise InsufficientDepth(n + 1, len(w) - 1)
        if delta > psi * w[n]:
            return k, n
        k += 1


def main_lemma_certify(x, lam: float, psi: float, eta: float, delta: float, K: int,
                       tables: ConstructionTables, max_pairs: int = 5000,
                       seed: int = 0) -> MainLemmaCertificate:
    """Find alpha in (0, eta*delta) and verify [r, s] in T_{lam+psi} for r, s in R(alpha) ∩ B(x, delta)."""
    x = np.asarray(x, dtype=float)
    if not lam + psi <= 1.0:
        raise HypothesisViolation(f"lambda+psi={lam + psi!r} exceeds 1")
    d0 = delta0(eta, psi, tables)
    if not 0.0 < delta < d0:
        raise HypothesisViolation(f"delta={delta!r} must lie in (0, delta0={d0!r})")
    tables.require(window_top(K, lam + psi))
    if not in_T_lambda(x, lam, K, tables):
        raise HypothesisViolation(f"x is not in T_{lam} at depth {K}")
    k, n = minimal_k(delta, lam, psi, tables)
    alpha = crit_alpha(k, n, lam, psi, eta, tables)
    if not alpha < eta * delta:
        raise CertificateRejected(None, f"alpha={alpha!r} is not below eta*delta={eta * delta!r}")
    tables.require(n + 1)
    net = tables.nets[n + 1]
    pts = net.in_ball(x, delta)
    if len(pts) == 0:
        raise CertificateRejected(None, "R(alpha) ∩ B(x, delta) is empty")
    if len(pts) == 1:
        pairs = [(0, 0)]
    else:
        i, j = np.triu_indices(len(pts), k=1)
        pairs = list(zip(i.tolist(), j.tolist()))
    total = len(pairs)
    if total > max_pairs:
        pick = np.random.default_rng(seed).choice(total, max_pairs, replace=False)
        pairs = [pairs[t] for t in np.sort(pick)]
    idx = np.array(pairs)
    ok = segments_in_T(pts[idx[:, 0]], pts[idx[:, 1]], lam + psi, K, tables)
    if not ok.all():
        bad = pairs[int(np.argmin(ok))]
        raise CertificateRejected((pts[bad[0]].tolist(), pts[bad[1]].tolist()))
    return MainLemmaCertificate(eta=eta, psi=psi, delta0=d0, delta=delta, lam=lam,
                                x=tuple(x.tolist()), K=K, k=k, n=n, alpha=alpha,
                                net_points=pts, pairs=pairs, total_pairs=total,
                                l_range=(1, K))
