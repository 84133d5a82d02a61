"""Directional derivatives, Frechet-error profiles and the almost-maximal search."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .construction import (ConstructionTables, SetHandle, build_tables, in_T_lambda,
                           segments_in_T, window_top)
from .lemmas import (CertificateRejected, InsufficientDepth, MainLemmaCertificate,
                     delta0, main_lemma_certify)


@dataclass
class LipschitzFunction:
    """Vectorised evaluator f: (n, d) -> (n,), with a declared Lipschitz constant."""
    evaluate: Callable[[np.ndarray], np.ndarray]
    lip: float
    name: str

    def __call__(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        out = np.asarray(self.evaluate(np.atleast_2d(arr)), dtype=float)
        return out[0] if arr.ndim == 1 else out

    def lipschitz_ratio(self, pairs: int = 10_000, seed: int = 0, d: int = 2,
                        radius: float = 1.0) -> float:
        """Largest sampled |f(x)-f(y)|/|x-y| over random pairs in B(0, radius)."""
        rng = np.random.default_rng(seed)
        x = rng.uniform(-radius, radius, (pairs, d))
        y = x + rng.standard_normal((pairs, d)) * rng.choice([1e-3, 1e-1, 1.0], (pairs, 1))
        dist = np.sqrt(((x - y) ** 2).sum(axis=1))
        return float(np.max(np.abs(self(x) - self(y)) / dist))


def linear(g) -> LipschitzFunction:
    g = np.asarray(g, dtype=float)
    return LipschitzFunction(lambda p: p @ g, float(np.linalg.norm(g)), f"linear{tuple(g.tolist())}")


def norm_from(p) -> LipschitzFunction:
    p = np.asarray(p, dtype=float)
    return LipschitzFunction(lambda x: np.sqrt(((x - p) ** 2).sum(axis=1)), 1.0,
                             f"dist_to_point{tuple(p.tolist())}")


def max_affine(pieces: Sequence[tuple]) -> LipschitzFunction:
    G = np.array([np.asarray(g, dtype=float) for g, _ in pieces])
    c = np.array([float(c) for _, c in pieces])
    lip = float(np.sqrt((G ** 2).sum(axis=1)).max())
    return LipschitzFunction(lambda x: (x @ G.T + c).max(axis=1), lip, f"max_affine[{len(c)}]")


def abs_linear(v) -> LipschitzFunction:
    v = np.asarray(v, dtype=float)
    return LipschitzFunction(lambda x: np.abs(x @ v), float(np.linalg.norm(v)),
                             f"abs_linear{tuple(v.tolist())}")


def dist_to_set(handle: SetHandle) -> LipschitzFunction:
    return LipschitzFunction(lambda x: np.asarray(handle.distance(x)), 1.0,
                             f"dist_to_{handle.kind}(lambda={handle.lam}, K={handle.K})")


def test_function_library(handle: Optional[SetHandle] = None) -> dict:
    lib = {
        "linear": linear((0.6, 0.8)),
        "linear_e1": linear((1.0, 0.0)),
        "norm": norm_from((2.5, 1.0)),
        "max_affine": max_affine([((1.0, 0.0), 0.0), ((-0.5, 0.5), 0.1), ((0.0, -1.0), -0.2)]),
        "abs": abs_linear((1.0, 0.0)),
    }
    if handle is not None:
        lib["dist_set"] = dist_to_set(handle)
    return lib


# --- derivative estimates ------------------------------------------------------

@dataclass
class DirectionalDerivEstimate:
    x: tuple
    e: tuple
    t: float
    value: float
    symmetric: float
    richardson: float
    forward: float
    backward: float
    kink: bool


def _quotients(f: LipschitzFunction, X: np.ndarray, E: np.ndarray, t: float):
    n = len(X)
    pts = np.concatenate([X, X + t * E, X - t * E, X + 0.5 * t * E, X - 0.5 * t * E])
    v = f(pts)
    f0, fp, fm, fp2, fm2 = (v[i * n:(i + 1) * n] for i in range(5))
    sym = (fp - fm) / (2 * t)
    sym2 = (fp2 - fm2) / t
    rich = (4 * sym2 - sym) / 3
    fwd = (fp - f0) / t
    bwd = (f0 - fm) / t
    kink = np.abs(fwd - bwd) > 10 * math.sqrt(t) * f.lip
    # extrapolation is only meaningful where f is smooth along the line
    bound = f.lip * (1 + 1e-9)
    value = np.where(kink | (np.abs(rich) > bound), sym, rich)
    return value, sym, rich, fwd, bwd, kink


def directional_quotient(f: LipschitzFunction, x, e, t: float) -> DirectionalDerivEstimate:
    """Symmetric quotient (f(x+te) - f(x-te)) / 2t, Richardson-extrapolated from t and t/2."""
    if not t > 0:
        raise ValueError("t must be positive")
    X = np.atleast_2d(np.asarray(x, dtype=float))
    E = np.atleast_2d(np.asarray(e, dtype=float))
    value, sym, rich, fwd, bwd, kink = _quotients(f, X, E, t)
    return DirectionalDerivEstimate(tuple(X[0].tolist()), tuple(E[0].tolist()), t,
                                    float(value[0]), float(sym[0]), float(rich[0]),
                                    float(fwd[0]), float(bwd[0]), bool(kink[0]))


def directional_values(f: LipschitzFunction, X, E, t: float) -> np.ndarray:
    """Batched version of ``directional_quotient(...).value``."""
    return _quotients(f, np.atleast_2d(X), np.atleast_2d(E), t)[0]


def gateaux_gradient(f: LipschitzFunction, x, t: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    eye = np.eye(len(x))
    return directional_values(f, np.repeat(x[None, :], len(x), axis=0), eye, t)


@dataclass
class FrechetProfile:
    x: tuple
    e: tuple
    D: float
    scales: list
    errors: list
    directions_per_scale: int
    linear_map: Optional[tuple] = None

    def decays(self, slack: float = 1e-6) -> bool:
        return all(b <= a + slack for a, b in zip(self.errors, self.errors[1:]))

    def to_dict(self) -> dict:
        return {"x": list(self.x), "e": list(self.e), "D": self.D, "scales": self.scales,
                "errors": self.errors, "directions_per_scale": self.directions_per_scale,
                "linear_map": None if self.linear_map is None else list(self.linear_map)}


def _unit_directions(count: int, d: int, seed: int) -> np.ndarray:
    if d == 2:
        th = 2 * math.pi * (np.arange(count) + np.random.default_rng(seed).random()) / count
        return np.column_stack([np.cos(th), np.sin(th)])
    g = np.random.default_rng(seed).standard_normal((count, d))
    return g / np.sqrt((g ** 2).sum(axis=1))[:, None]


def frechet_profile(f: LipschitzFunction, x, e, D: float, scales: Sequence[float],
                    directions_per_scale: int = 256, seed: int = 0,
                    linear_map=None) -> FrechetProfile:
    """E(rho) = max_h |f(x+h) - f(x) - L(h)| / rho over sampled |h| = rho.

    L(h) = D<h, e> by default; ``linear_map`` (a vector G) gives L(h) = <G, h>.
    The same h directions are reused at every scale.
    """
    if len(scales) < 4:
        raise ValueError("need at least 4 scales")
    if any(b >= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be strictly decreasing")
    x = np.asarray(x, dtype=float)
    e = np.asarray(e, dtype=float)
    G = D * e if linear_map is None else np.asarray(linear_map, dtype=float)
    U = _unit_directions(directions_per_scale, len(x), seed)
    fx = float(f(x))
    errors = []
    for rho in scales:
        H = rho * U
        err = np.abs(f(x[None, :] + H) - fx - H @ G) / rho
        errors.append(float(err.max()))
    return FrechetProfile(tuple(x.tolist()), tuple(e.tolist()), float(D), [float(s) for s in scales],
                          errors, directions_per_scale,
                          None if linear_map is None else tuple(G.tolist()))


@dataclass
class ConditionMargin:
    applicable: bool
    margin: Optional[float]
    K_const: float
    worst_t: Optional[float] = None


def condition_ii_margin(f: LipschitzFunction, x, e, x2, e2, t_samples: Sequence[float],
                        dx: Optional[float] = None, dx2: Optional[float] = None,
                        t_est: float = 1e-6) -> ConditionMargin:
    """min over t of K sqrt(f'(x2,e2) - f'(x,e)) |t| - |(f(x2+te)-f(x2)) - (f(x+te)-f(x))|."""
    K = 25.0 * math.sqrt(2.0 * f.lip)
    if dx is None:
        dx = directional_quotient(f, x, e, t_est).value
    if dx2 is None:
        dx2 = directional_quotient(f, x2, e2, t_est).value
    gap = dx2 - dx
    if gap < 0:
        return ConditionMargin(False, None, K)
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    e = np.asarray(e, dtype=float)
    ts = np.array([s * t for t in t_samples for s in (1.0, -1.0)])
    A = f(x2[None, :] + ts[:, None] * e) - float(f(x2))
    B = f(x[None, :] + ts[:, None] * e) - float(f(x))
    lhs = np.abs(A - B)
    rhs = K * math.sqrt(gap) * np.abs(ts)
    m = rhs - lhs
    i = int(np.argmin(m))
    return ConditionMargin(True, float(m[i]), K, float(ts[i]))


# --- search --------------------------------------------------------------------

@dataclass
class SearchStep:
    x: tuple
    e: tuple
    lam: float
    estimate: float
    psi: float = 0.0
    delta: float = 0.0
    certificate: Optional[MainLemmaCertificate] = None

    def to_dict(self) -> dict:
        return {"x": list(self.x), "e": list(self.e), "lambda": self.lam,
                "estimate": self.estimate, "psi": self.psi, "delta": self.delta,
                "certificate": None if self.certificate is None else self.certificate.to_dict()}


@dataclass
class DiffReport:
    function: str
    lip: float
    K_const: float
    mu: float
    eta: float
    lam_start: float
    K: int
    focus: tuple
    steps: list
    visited: list
    profile: FrechetProfile
    profile_direction: FrechetProfile
    margins: list
    stop_reason: str
    budget_exhausted: bool
    rejected_moves: int = 0

    @property
    def best(self) -> SearchStep:
        return self.steps[-1]

    def to_dict(self) -> dict:
        return {"function": self.function, "lip": self.lip, "K_const": self.K_const,
                "mu": self.mu, "eta": self.eta, "lambda_start": self.lam_start, "K": self.K,
                "focus": list(self.focus), "stop_reason": self.stop_reason,
                "budget_exhausted": self.budget_exhausted, "rejected_moves": self.rejected_moves,
                "steps": [s.to_dict() for s in self.steps],
                "visited": [list(v) for v in self.visited],
                "profile": self.profile.to_dict(),
                "profile_direction": self.profile_direction.to_dict(),
                "margins": [{"against": i, "applicable": m.applicable, "margin": m.margin,
                             "worst_t": m.worst_t} for i, m in self.margins]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def profile_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rho", "error", "error_direction"])
            for r, a, b in zip(self.profile.scales, self.profile.errors,
                               self.profile_direction.errors):
                w.writerow([repr(r), repr(a), repr(b)])


def _seed_scan(f, tables, lam, K, t):
    """Best (chord endpoint, chord direction) over chords of R_1..R_K certified inside T_lam."""
    ends = tables.chord_end
    a, b = tables.chords(K)
    gen = np.repeat(np.arange(1, K + 1), np.diff(ends[:K + 1]))
    ok = segments_in_T(a, b, lam, K, tables, generation=gen)
    a, b = a[ok], b[ok]
    u = b - a
    L = np.sqrt((u ** 2).sum(axis=1))
    keep = L > 0
    a, b, u, L = a[keep], b[keep], u[keep], L[keep]
    u = u / L[:, None]
    X = np.concatenate([a, a, b, b])
    E = np.concatenate([u, -u, u, -u])
    vals = directional_values(f, X, E, t)
    i = int(np.argmax(vals))
    return X[i], E[i], float(vals[i]), int(ok.sum())


def _refocus(tables: ConstructionTables, node, depth: int) -> ConstructionTables:
    node = tuple(float(c) for c in node)
    if node == tuple(tables.focus) and tables.depth >= depth:
        return tables
    try:
        return build_tables(max(depth, tables.depth), w0=tables.w[0], d=tables.d,
                            window_cells=tables.window_cells, focus=node)
    except ValueError:
        # not a node of every refinement grid: keep the original window
        if tables.depth >= depth:
            return tables
        return build_tables(depth, w0=tables.w[0], d=tables.d,
                            window_cells=tables.window_cells, focus=tables.focus)


def search_almost_max(f: LipschitzFunction, lam_start: float, K: int, budget: int, seed: int,
                      tables: ConstructionTables, eta: float = 0.9, delta_eps: float = 1e-3,
                      t: float = 1e-6, move_depth: int = 20,
                      profile_scales: Optional[Sequence[float]] = None,
                      directions_per_scale: int = 256, t_samples: Optional[Sequence[float]] = None,
                      max_pairs: int = 2000) -> DiffReport:
    """Hill-climb the directional derivative inside the nested family T_lambda.

    The seed is the best (endpoint, direction) over certified chords of R_1..R_K.
    Step j uses psi_j = (1 - lam_start) 2^-(j+1), Delta = delta_* =
    0.5 min(Delta_0(eta/2, psi_j), delta_eps, 1 - |x|), and candidate moves are
    the certified chords of R(alpha) ∩ B(x, Delta); a move is accepted when its
    estimate does not decrease. Refinement windows are re-centred at the seed.
    """
    if not 0.0 <= lam_start < 1.0:
        raise ValueError("lam_start must lie in [0, 1)")
    if profile_scales is None:
        profile_scales = [2.0 ** -j for j in range(2, 13)]
    if t_samples is None:
        t_samples = [2.0 ** -j for j in range(1, 21)]
    tables.require(window_top(K, lam_start))
    x, e, D, _ = _seed_scan(f, tables, lam_start, K, t)
    work = _refocus(tables, x, move_depth)
    lam = lam_start
    if not in_T_lambda(x, lam, K, work):
        raise RuntimeError("seed point failed the membership check")
    steps = [SearchStep(tuple(x.tolist()), tuple(e.tolist()), lam, D)]
    visited = [(tuple(x.tolist()), tuple(e.tolist()), D)]
    stop, rejected = "budget", 0
    rng = np.random.default_rng(seed)
    for j in range(budget):
        psi = (1.0 - lam_start) * 2.0 ** -(j + 1)
        if window_top(K, lam + psi) > work.depth:
            stop = "depth"
            break
        try:
            d0 = delta0(eta / 2, psi, work)
        except InsufficientDepth:
            stop = "depth"
            break
        delta = 0.5 * min(d0, delta_eps, 1.0 - float(np.linalg.norm(x)))
        try:
            cert = main_lemma_certify(x, lam, psi, eta / 2, delta, K, work,
                                      max_pairs=max_pairs, seed=int(rng.integers(2 ** 31)))
        except InsufficientDepth:
            stop = "depth"
            break
        except CertificateRejected as exc:
            stop = f"certificate rejected: {exc}"
            break
        idx = np.array(cert.pairs)
        R, S = cert.net_points[idx[:, 0]], cert.net_points[idx[:, 1]]
        u = S - R
        L = np.sqrt((u ** 2).sum(axis=1))
        nz = L > 0
        R, u, L = R[nz], u[nz], L[nz]
        if len(R) == 0:
            rejected += 1
            continue
        u = u / L[:, None]
        s = np.clip(((x[None, :] - R) * u).sum(axis=1), 0.0, L)
        Xc = R + s[:, None] * u
        Xc = np.concatenate([Xc, Xc])
        Ec = np.concatenate([u, -u])
        vals = directional_values(f, Xc, Ec, t)
        i = int(np.argmax(vals))
        visited.append((tuple(Xc[i].tolist()), tuple(Ec[i].tolist()), float(vals[i])))
        lam_new = lam + psi
        if vals[i] >= D and in_T_lambda(Xc[i], lam_new, K, work):
            x, e, D, lam = Xc[i], Ec[i], float(vals[i]), lam_new
            steps.append(SearchStep(tuple(x.tolist()), tuple(e.tolist()), lam, D, psi, delta, cert))
        else:
            rejected += 1
    G = gateaux_gradient(f, x, t)
    prof = frechet_profile(f, x, e, D, profile_scales, directions_per_scale, seed, linear_map=G)
    prof_dir = frechet_profile(f, x, e, D, profile_scales, directions_per_scale, seed)
    margins = [(i, condition_ii_margin(f, x, e, vx, ve, t_samples, dx=D, dx2=vd))
               for i, (vx, ve, vd) in enumerate(visited)]
    return DiffReport(function=f.name, lip=f.lip, K_const=25.0 * math.sqrt(2.0 * f.lip),
                      mu=f.lip, eta=eta, lam_start=lam_start, K=K, focus=work.focus,
                      steps=steps, visited=visited, profile=prof, profile_direction=prof_dir,
                      margins=margins, stop_reason=stop, budget_exhausted=(stop == "budget"),
                      rejected_moves=rejected)


test_function_library.__test__ = False  # library constructor, not a pytest test
