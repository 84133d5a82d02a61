"""Atomic artifact writers (temp file in the target directory, then rename)."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def atomic_write_bytes(path, data: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def write_json(path, obj, **kw) -> Path:
    kw.setdefault("sort_keys", True)
    return atomic_write_text(path, json.dumps(obj, **kw) + "\n")


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return atomic_write_text(path, buf.getvalue())


def pgm_text(mask: np.ndarray) -> str:
    """ASCII P2 image: members black (0), the rest white (255)."""
    h, w = mask.shape
    lines = ["P2", f"{w} {h}", "255"]
    for row in mask:
        lines.append(" ".join("0" if v else "255" for v in row))
    return "\n".join(lines) + "\n"


def read_pgm(path) -> np.ndarray:
    tokens = [t for line in Path(path).read_text().splitlines()
              if not line.startswith("#") for t in line.split()]
    if tokens[0] != "P2":
        raise ValueError("not an ASCII PGM file")
    w, h = int(tokens[1]), int(tokens[2])
    vals = np.array(tokens[4:4 + w * h], dtype=int)
    return vals.reshape(h, w)


def write_pgm(path, mask: np.ndarray) -> Path:
    return atomic_write_text(path, pgm_text(np.asarray(mask, dtype=bool)))
