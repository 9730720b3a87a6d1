"""Deterministic result persistence.

Reports serialize to JSON with sorted keys and fixed float formatting, bulk
numeric data to CSV with fixed headers.  Wall-clock timestamps live only in
the run manifest, so every other output of a rerun with the same config and
seed is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field

from . import __version__
from .topology import label_to_str

CSV_SCHEMA_VERSION = 1


def dumps_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: str, obj) -> None:
    _atomic_write(path, dumps_json(obj))


def write_csv(path: str, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_csv_cell(c) for c in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _csv_cell(c) -> str:
    if isinstance(c, float):
        return repr(c)
    return str(c)


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def trajectory_rows(trajectory):
    """CSV rows time,vertex_label,value of replica 0 of a trajectory."""
    topo = trajectory.topology
    for k, t in enumerate(trajectory.times):
        for i, v in enumerate(topo.vertices):
            yield (float(t), label_to_str(v), float(trajectory.states[k, 0, i]))


def write_trajectory(path: str, trajectory) -> None:
    write_csv(path, ["time", "vertex_label", "value"],
              trajectory_rows(trajectory))
    meta = {
        "d": trajectory.topology.d,
        "depth": trajectory.topology.depth,
        "beta": trajectory.couplings.interior,
        "gamma": trajectory.couplings.boundary,
        "dt": trajectory.dt,
        "seed": trajectory.metadata.get("seed"),
    }
    write_json(os.path.splitext(path)[0] + ".json", meta)


def sha256_of(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Reproducibility record written after a run completes.

    The only file allowed to contain nondeterministic content (the
    wall-clock duration and timestamp).
    """

    config: dict
    outputs: dict = field(default_factory=dict)
    started_at: float = field(default_factory=time.time)

    def record(self, path: str) -> None:
        self.outputs[os.path.basename(path)] = sha256_of(path)

    def write(self, path: str) -> None:
        body = {
            "version": __version__,
            "csv_schema_version": CSV_SCHEMA_VERSION,
            "config": self.config,
            "outputs": self.outputs,
            "started_at": self.started_at,
            "duration_seconds": time.time() - self.started_at,
        }
        _atomic_write(path, json.dumps(body, sort_keys=True, indent=2) + "\n")
