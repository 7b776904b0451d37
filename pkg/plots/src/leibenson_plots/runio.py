"""Loading of simulation run directories (schema ``leibenson-run/1``)."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

RUN_SCHEMA = "leibenson-run/1"


class SchemaMismatch(RuntimeError):
    """Raised when a run or report carries an unsupported schema version."""


@dataclass(frozen=True)
class Snapshot:
    t: float
    radii: np.ndarray


@dataclass(frozen=True)
class RunData:
    """Run metadata plus per-snapshot radii (all the figures need)."""

    config: dict
    constants: dict
    snapshots: tuple[Snapshot, ...]

    def radial_density(self, t: float, r: np.ndarray) -> np.ndarray:
        """Analytic radial density omega * w(t+delta, r) * r^(d-1), evaluated
        from the echoed constants (no recomputation of the mass constant)."""
        c = self.constants
        d = int(c["d"])
        p = float(c["p"])
        beta = float(c["beta"])
        gamma = float(c["gamma"])
        kappa = float(c["kappa"])
        cnorm = float(c["c_norm"])
        delta = float(self.config["delta"])
        s = p / (p - 1.0)
        tau = t + delta
        omega = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
        r = np.asarray(r, dtype=float)
        f = np.maximum(cnorm - kappa * tau ** (-s / beta) * r ** s, 0.0)
        return omega * tau ** (-d / beta) * f ** gamma * r ** (d - 1)

    def support_radius(self, t: float) -> float:
        c = self.constants
        p = float(c["p"])
        tau = t + float(self.config["delta"])
        return (float(c["c_norm"]) / float(c["kappa"])) ** ((p - 1.0) / p) \
            * tau ** (1.0 / float(c["beta"]))


def load_run(run_dir: str) -> RunData:
    meta_path = os.path.join(run_dir, "metadata.json")
    with open(meta_path) as fh:
        meta = json.load(fh)
    if meta.get("schema") != RUN_SCHEMA:
        raise SchemaMismatch(
            f"expected run schema {RUN_SCHEMA!r}, found {meta.get('schema')!r}")
    cfg = meta["config"]
    d = int(cfg["d"])
    snaps = []
    for entry in meta["snapshots"]:
        path = os.path.join(run_dir, entry["file"])
        data = np.genfromtxt(path, delimiter=",", names=True)
        cols = data.dtype.names
        needed = ["t", "particle_id"] + [f"x{i+1}" for i in range(d)]
        if cols is None or any(name not in cols for name in needed):
            raise ValueError(f"snapshot {entry['file']} is missing columns "
                             f"{needed} (found {cols})")
        pos = np.column_stack([data[f"x{i+1}"] for i in range(d)])
        snaps.append(Snapshot(t=float(entry["t"]),
                              radii=np.linalg.norm(pos, axis=1)))
    return RunData(config=cfg, constants=meta["derived_constants"],
                   snapshots=tuple(snaps))
