"""Atomic CSV/JSON writers, run manifests and the named-stream seed splitter."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
import zlib
from pathlib import Path

import numpy as np

__all__ = ["SeedSplitter", "atomic_write", "write_csv", "read_csv", "write_json", "write_manifest",
           "to_jsonable"]


class SeedSplitter:
    """Independent, reproducible generators keyed by consumer name.

    ``SeedSplitter(7).generator("fields")`` always yields the same stream, and
    streams with different names do not overlap.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)

    def sequence(self, name: str) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.seed, spawn_key=(zlib.crc32(name.encode("utf-8")),))

    def generator(self, name: str) -> np.random.Generator:
        return np.random.default_rng(self.sequence(name))

    def integer_seed(self, name: str) -> int:
        return int(self.sequence(name).generate_state(1, dtype=np.uint32)[0])


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # JSON has no infinities; keep them readable and round-trippable via float()
        return v if math.isfinite(v) else str(v)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def atomic_write(path, data: str) -> Path:
    """Write text via a temp file in the same directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, columns) -> Path:
    """``columns`` is a sequence of (name, values); floats use repr for exact round trips."""
    names = [name for name, _ in columns]
    rows = zip(*[list(values) for _, values in columns])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return atomic_write(path, buf.getvalue())


def read_csv(path) -> dict:
    """Read a CSV written by ``write_csv`` back into name -> list of floats (or strings)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = {h: [] for h in header}
        for row in reader:
            for h, v in zip(header, row):
                try:
                    cols[h].append(float(v))
                except ValueError:
                    cols[h].append(v)
    return cols


def write_json(path, obj) -> Path:
    return atomic_write(path, json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n")


def write_manifest(out_dir, command: str, config: dict, outputs) -> Path:
    """Echo of the resolved config and the files written.

    ``created`` is the only field that varies between identical runs.
    """
    return write_json(Path(out_dir) / "manifest.json", {
        "command": command,
        "config": config,
        "outputs": sorted(str(Path(p).name) for p in outputs),
        "created": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    })
