"""udset command line: build | render | verify | dim | search."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import io
from .construction import (SegmentBudgetExceeded, SetHandle, build_tables, in_M_k, in_O_k,
                           in_T_lambda, sample_M_k, sample_T_lambda, window_top)
from .dimension import box_count_series, dimension_fit, projection_sweep
from .diffsearch import search_almost_max, test_function_library
from .lemmas import (ShiftInstance, crit_alpha, delta0, main_lemma_certify, minimal_k,
                     shift_check)
from .tubes import build_segment_table, cover_sum_certificate

log = logging.getLogger("udset")


class ConfigError(ValueError):
    def __init__(self, fieldname: str, msg: str):
        super().__init__(f"invalid config field '{fieldname}': {msg}")
        self.field = fieldname


@dataclass
class WorkspaceConfig:
    d: int = 2
    N_max: int = 8
    K: int = 4
    lambdas: list = field(default_factory=lambda: [0.0, 0.25, 0.5])
    lam: float = 0.5
    psi: float = 0.5
    eta: float = 0.9
    seed: int = 0
    out: str = "udset_out"
    segment_budget: int = 250_000
    w0: float = 1.0
    window_cells: int = 4
    resolution: int = 256
    function: str = "linear"
    samples: int = 2000
    budget: int = 5
    dim_scales: list = field(default_factory=lambda: [4, 5, 6, 7, 8])

    def validate(self) -> "WorkspaceConfig":
        def need(ok, name, msg):
            if not ok:
                raise ConfigError(name, msg)

        for name in ("d", "N_max", "K", "seed", "segment_budget", "window_cells",
                     "resolution", "samples", "budget"):
            v = getattr(self, name)
            need(isinstance(v, int) and not isinstance(v, bool), name, f"expected an integer, got {v!r}")
        for name in ("lam", "psi", "eta", "w0"):
            v = getattr(self, name)
            need(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v),
                 name, f"expected a finite number, got {v!r}")
        need(self.d >= 1, "d", "must be >= 1")
        need(self.N_max >= 1, "N_max", "must be >= 1")
        need(self.K >= 1, "K", "must be >= 1")
        need(isinstance(self.lambdas, list) and len(self.lambdas) > 0, "lambdas", "must be a non-empty list")
        for v in self.lambdas:
            need(isinstance(v, (int, float)) and 0.0 <= v <= 1.0, "lambdas", f"{v!r} is outside [0, 1]")
        need(0.0 <= self.lam <= 1.0, "lam", f"{self.lam!r} is outside [0, 1]")
        need(0.0 < self.psi <= 1.0, "psi", f"{self.psi!r} is outside (0, 1]")
        need(0.0 < self.eta < 1.0, "eta", f"{self.eta!r} is outside (0, 1)")
        need(0.0 < self.w0 <= 2.0, "w0", f"{self.w0!r} is outside (0, 2]")
        need(self.window_cells >= 2, "window_cells", "must be >= 2")
        need(self.segment_budget >= 1, "segment_budget", "must be >= 1")
        need(self.resolution >= 1, "resolution", "must be >= 1")
        need(self.samples >= 1, "samples", "must be >= 1")
        need(self.budget >= 0, "budget", "must be >= 0")
        lam_hi = max(list(self.lambdas) + [self.lam])
        need(window_top(self.K, lam_hi) <= self.N_max, "K",
             f"(1 + max lambda) * K = {(1 + lam_hi) * self.K!r} exceeds N_max={self.N_max}")
        need(isinstance(self.dim_scales, list) and len(self.dim_scales) >= 4
             and all(isinstance(j, int) and j >= 0 for j in self.dim_scales),
             "dim_scales", "need at least 4 non-negative integer exponents")
        need(isinstance(self.function, str), "function", "must be a string")
        need(isinstance(self.out, str) and self.out != "", "out", "must be a path")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "WorkspaceConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        for key in data:
            if key not in names:
                raise ConfigError(key, "unknown field")
        return cls(**data)


def threads_cap() -> Optional[int]:
    raw = os.environ.get("UDSET_THREADS")
    if raw is None:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError("UDSET_THREADS", f"expected a positive integer, got {raw!r}")
    if n < 1:
        raise ConfigError("UDSET_THREADS", "must be >= 1")
    return n


def _tables(cfg: WorkspaceConfig, depth: Optional[int] = None):
    return build_tables(depth or cfg.N_max, w0=cfg.w0, d=cfg.d,
                        segment_budget=cfg.segment_budget, window_cells=cfg.window_cells)


# --- commands ------------------------------------------------------------------

def cmd_build(cfg: WorkspaceConfig) -> int:
    t0 = time.perf_counter()
    T = _tables(cfg)
    out = Path(cfg.out)
    io.atomic_write_text(out / "tables.json", T.to_json() + "\n")
    ws = T.w
    build_log = {
        "config": dataclasses.asdict(cfg),
        "levels": [{"k": k, "w": ws[k], "net_size": len(T.nets[k]), "net_eps": T.nets[k].eps,
                    "pieces": T.level_end[k]} for k in range(1, T.depth + 1)],
        "w_strictly_decreasing": all(b < a for a, b in zip(ws, ws[1:])),
        "halving": all(b < a / 2 for a, b in zip(ws[1:], ws[2:])),
    }
    io.write_json(out / "build_log.json", build_log)
    log.info("built depth %d in %.2fs", T.depth, time.perf_counter() - t0)
    return 0 if build_log["w_strictly_decreasing"] and build_log["halving"] else 1


def cmd_render(cfg: WorkspaceConfig) -> int:
    if cfg.d != 2:
        raise ConfigError("d", "render needs d = 2")
    T = _tables(cfg)
    mask = SetHandle("T", T, cfg.lam, cfg.K).raster(cfg.resolution)
    out = Path(cfg.out)
    stem = f"render_lambda{cfg.lam:g}_K{cfg.K}_res{cfg.resolution}"
    io.write_pgm(out / f"{stem}.pgm", mask)
    res = cfg.resolution
    c = -1.0 + (np.arange(res) + 0.5) * (2.0 / res)
    rows = ((c[j], c[res - 1 - i], int(mask[i, j])) for i in range(res) for j in range(res))
    io.write_csv(out / f"{stem}.csv", ["x", "y", "member"], rows)
    return 0


def run_verify(cfg: WorkspaceConfig) -> dict:
    """Lemma suite plus cover certificates at CLI scale; returns named verdicts."""
    T = _tables(cfg)
    rng = np.random.default_rng(cfg.seed)
    n = cfg.samples
    res: dict = {}

    bad = 0
    for i in range(10):
        k = int(rng.integers(1, cfg.K + 1))
        lam = float(rng.uniform(0, 0.5))
        psi = float(rng.uniform(0.05, 1 - lam))
        if window_top(k, lam + psi) > T.depth:
            continue
        x = sample_M_k(k, lam, 1, cfg.seed + i, T)[0]
        inst = ShiftInstance(k, lam, psi, tuple(x), psi * T.w[window_top(k, lam)])
        bad += shift_check(inst, n, cfg.seed + i, T)
    res["shift"] = {"violations": bad, "pass": bad == 0}

    bad = 0
    for psi in (0.25, 0.5, 1.0):
        for eta in (0.3, 0.6, 0.9):
            for lam in (0.0, 0.5):
                for n_ in range(1, T.depth + 1):
                    k = max(1, math.ceil(1 / (psi * eta) - 1e-12))
                    if not k <= n_ <= window_top(k, lam):
                        continue
                    alpha = crit_alpha(k, n_, lam, psi, eta, T)
                    for delta in (psi * T.w[n_] * 1.0000001, 2 * psi * T.w[n_]):
                        bad += not alpha < eta * delta
    res["crit"] = {"violations": bad, "pass": bad == 0}

    accepted, errors = 0, []
    psi, eta, lam = cfg.psi, cfg.eta, min(cfg.lam, 1 - cfg.psi)
    trials = 5
    try:
        d0 = delta0(eta, psi, T)
        for i in range(trials):
            delta = d0 * float(rng.uniform(0.5, 0.99))
            x = sample_T_lambda(lam, cfg.K, 1, cfg.seed + i, T, near=np.zeros(cfg.d),
                                radius=delta / 2)[0]
            try:
                main_lemma_certify(x, lam, psi, eta, delta, cfg.K, T, seed=cfg.seed + i)
                accepted += 1
            except Exception as exc:  # noqa: BLE001 - every failure is reported
                errors.append(str(exc))
    except Exception as exc:  # noqa: BLE001
        errors.append(str(exc))
    res["main"] = {"accepted": accepted, "trials": trials, "errors": errors,
                   "pass": accepted == trials}

    pts = sample_T_lambda(1.0, cfg.K, n, cfg.seed, T) if window_top(cfg.K, 1.0) <= T.depth else None
    lams = sorted(cfg.lambdas)
    x = np.random.default_rng(cfg.seed).uniform(-1, 1, (n, cfg.d))
    if pts is not None:
        x = np.concatenate([x, pts])
    mono = 0
    prev = None
    for lam_ in lams:
        cur = in_T_lambda(x, lam_, cfg.K, T)
        if prev is not None:
            mono += int((prev & ~cur).sum())
        prev = cur
    res["monotonicity"] = {"violations": mono, "pass": mono == 0}

    cont = 0
    for k in range(1, cfg.K + 1):
        lam_ = max(lams)
        if window_top(k, lam_) > T.depth:
            continue
        m = sample_M_k(k, lam_, n, cfg.seed + k, T)
        ok = in_M_k(m, k, lam_, T)
        cont += int((ok & ~in_O_k(m, k, T)).sum())
    res["containment"] = {"violations": cont, "pass": cont == 0}

    table = build_segment_table(60, d=cfg.d)
    certs = [cover_sum_certificate(table, 50, nn, 1.5, 4.0 / 2 ** (nn + 1)) for nn in (6, 10, 14)]
    sums = [c.sum for c in certs]
    res["cover"] = {"certificates": [json.loads(c.to_json()) for c in certs],
                    "pass": all(c.ok for c in certs) and sums[0] > sums[1] > sums[2]}
    res["pass"] = all(v["pass"] for v in res.values())
    return res


def cmd_verify(cfg: WorkspaceConfig) -> int:
    res = run_verify(cfg)
    io.write_json(Path(cfg.out) / "verify.json", res)
    return 0 if res["pass"] else 1


def cmd_dim(cfg: WorkspaceConfig) -> int:
    T = _tables(cfg)
    scales = [2.0 ** -j for j in cfg.dim_scales]
    handle = SetHandle("T", T, cfg.lam, cfg.K)
    window = [(-1.0, 1.0)] * cfg.d
    series = dimension_fit(box_count_series(handle, sorted(scales, reverse=True), window))
    table = build_segment_table(60, d=cfg.d)
    certs = [cover_sum_certificate(table, 50, n, r, 4.0 / 2 ** (n + 1))
             for r in (1.2, 1.5, 2.0) for n in (6, 10, 14)]
    sweep = projection_sweep(T, 360) if cfg.d == 2 else []
    out = Path(cfg.out)
    io.write_csv(out / "boxcount.csv", ["eps", "count"], zip(series.scales, series.counts))
    report = {"series": series.to_dict(), "lambda": cfg.lam, "K": cfg.K,
              "certificates": [json.loads(c.to_json()) for c in certs],
              "projection_min": min(sweep) if sweep else None}
    ok = all(c.ok for c in certs) and (not sweep or min(sweep) > 0)
    report["pass"] = ok
    io.write_json(out / "dim.json", report)
    return 0 if ok else 1


def cmd_search(cfg: WorkspaceConfig) -> int:
    T = _tables(cfg)
    lib = test_function_library(SetHandle("T", T, cfg.lam, cfg.K))
    if cfg.function not in lib:
        raise ConfigError("function", f"unknown function {cfg.function!r}; choose from {sorted(lib)}")
    rep = search_almost_max(lib[cfg.function], cfg.lam if cfg.lam < 1 else 0.5, cfg.K,
                            cfg.budget, cfg.seed, T, eta=cfg.eta)
    out = Path(cfg.out)
    io.atomic_write_text(out / f"search_{cfg.function}.json", rep.to_json() + "\n")
    rows = zip(rep.profile.scales, rep.profile.errors, rep.profile_direction.errors)
    io.write_csv(out / f"search_{cfg.function}_profile.csv", ["rho", "error", "error_direction"], rows)
    est = [s.estimate for s in rep.steps]
    ok = all(b >= a for a, b in zip(est, est[1:])) and all(s.certificate is not None for s in rep.steps[1:])
    return 0 if ok else 1


COMMANDS = {"build": cmd_build, "render": cmd_render, "verify": cmd_verify,
            "dim": cmd_dim, "search": cmd_search}


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="udset", description=__doc__)
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, help="JSON config file")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--depth", dest="K", type=int, help="query depth K")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=str)
    p.add_argument("--resolution", type=int)
    p.add_argument("--function", type=str)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config(args) -> WorkspaceConfig:
    data = {}
    if args.config is not None:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", str(exc))
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be a JSON object")
    cfg = WorkspaceConfig.from_dict(data)
    for name in ("lam", "K", "seed", "out", "resolution", "function"):
        v = getattr(args, name)
        if v is not None:
            setattr(cfg, name, v)
    return cfg.validate()


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        threads = threads_cap()
        if threads is not None:
            log.info("UDSET_THREADS=%d (all kernels run single-threaded)", threads)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"udset: {exc}", file=sys.stderr)
        return 2
    except SegmentBudgetExceeded as exc:
        print(f"udset: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
