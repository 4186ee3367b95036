"""Output files: hash-stamped CSV tables and the run manifest.

Every file is written to a temporary sibling first and moved into place with
``os.replace`` so a reader never sees a half-written table.
"""
from __future__ import annotations

import hashlib
import json
import os
import platform
import tempfile
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy

from .config import as_plain

__all__ = ["atomic_write", "write_table", "read_table", "file_sha256", "RunManifest",
           "StageRecord", "versions"]


def atomic_write(path: str, data: bytes) -> None:
    """Write ``data`` to ``path`` through a temporary file and an atomic rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
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


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    if v is None:
        return ""
    s = str(v)
    if any(c in s for c in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def write_table(path: str, columns: Sequence[str], rows: Iterable[Sequence],
                config_hash: str) -> None:
    """CSV with a ``# config_hash=...`` comment line, a header and ``%.17g`` floats."""
    lines = [f"# config_hash={config_hash}", ",".join(columns)]
    for row in rows:
        row = list(row)
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} cells, expected {len(columns)}")
        lines.append(",".join(_cell(v) for v in row))
    atomic_write(path, ("\n".join(lines) + "\n").encode())


def read_table(path: str):
    """Return ``(config_hash, columns, rows)`` with cells as strings."""
    import csv
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        chash = first.split("=", 1)[1] if first.startswith("# config_hash=") else None
        reader = csv.reader(fh)
        columns = next(reader)
        rows = [r for r in reader]
    return chash, columns, rows


def file_sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def versions() -> dict:
    from . import __version__
    return {"levyhom": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


@dataclass
class StageRecord:
    """Outcome of one pipeline stage."""

    name: str
    status: str                  # PASS | FAIL | ERROR | SKIPPED
    seconds: float = 0.0
    checks: list = field(default_factory=list)   # [name, passed, detail]
    files: list = field(default_factory=list)
    message: str = ""
    exit_code: int = 0

    @property
    def passed(self) -> bool:
        return self.status == "PASS"


@dataclass
class RunManifest:
    """Summary of a pipeline run, written as ``manifest.json``."""

    config_hash: str
    seed: int
    output: str
    stages: list = field(default_factory=list)
    versions: dict = field(default_factory=versions)
    files: dict = field(default_factory=dict)     # relative path -> sha256

    @property
    def status(self) -> str:
        return "PASS" if self.stages and all(s.passed for s in self.stages) else "FAILED"

    @property
    def exit_code(self) -> int:
        codes = [s.exit_code for s in self.stages if s.exit_code]
        if not codes:
            return 0
        # configuration problems dominate, then numerical failures, then invariants
        for c in (2, 3, 1):
            if c in codes:
                return c
        return max(codes)

    def stage(self, name: str) -> Optional[StageRecord]:
        for s in self.stages:
            if s.name == name:
                return s
        return None

    def to_dict(self) -> dict:
        return as_plain({
            "config_hash": self.config_hash, "seed": self.seed, "status": self.status,
            "versions": self.versions,
            "stages": [asdict(s) for s in self.stages],
            "files": dict(sorted(self.files.items())),
        })

    def inventory(self, paths: Iterable[str]) -> None:
        for p in paths:
            rel = os.path.relpath(p, self.output)
            self.files[rel] = file_sha256(p)

    def write(self, path: Optional[str] = None) -> str:
        path = path or os.path.join(self.output, "manifest.json")
        atomic_write(path, (json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n").encode())
        return path
