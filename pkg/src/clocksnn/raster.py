"""Binary neuron x time spike rasters and their CSV/JSON exchange format.

A raster is the common currency of the package: encoded motion spikes,
network activity and gated outputs all use it.  On disk a raster is a CSV
file with header ``neuron,step,spike`` listing only the 1-entries, plus a
JSON sidecar ``{n_neurons, timesteps, dt_ms}`` next to it.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True, eq=False)
class SpikeRaster:
    """Binary activity matrix of shape ``(n_neurons, timesteps)``.

    ``dt`` is the step length in milliseconds.
    """

    activity: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        a = np.asarray(self.activity)
        if a.ndim != 2:
            raise ValueError(f"activity must be 2-D (neurons x steps), got shape {a.shape}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"raster dimensions must be positive, got {a.shape}")
        if a.dtype != np.bool_:
            if not np.isin(a, (0, 1)).all():
                raise ValueError("raster entries must be 0 or 1")
            a = a.astype(np.bool_)
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "activity", a)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n_neurons(self) -> int:
        return self.activity.shape[0]

    @property
    def timesteps(self) -> int:
        return self.activity.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.activity.shape

    def count(self) -> int:
        """Number of 1-entries."""
        return int(np.count_nonzero(self.activity))

    def population_count(self) -> np.ndarray:
        """Spikes per time step, summed over neurons."""
        return self.activity.sum(axis=0)

    @classmethod
    def zeros(cls, n_neurons: int, timesteps: int, dt: float = 1.0) -> "SpikeRaster":
        return cls(np.zeros((n_neurons, timesteps), dtype=np.bool_), dt)

    def __eq__(self, other):
        if not isinstance(other, SpikeRaster):
            return NotImplemented
        return self.dt == other.dt and np.array_equal(self.activity, other.activity)

    def __hash__(self):
        return hash((self.shape, self.dt, self.activity.tobytes()))


def sidecar_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".json")


def write_raster(raster: SpikeRaster, path: str | Path) -> tuple[Path, Path]:
    """Write ``raster`` as ``path`` (CSV) plus its JSON sidecar.

    Returns the two paths written.
    """
    path = Path(path)
    neurons, steps = np.nonzero(raster.activity)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["neuron", "step", "spike"])
        for n, s in zip(neurons.tolist(), steps.tolist()):
            w.writerow([n, s, 1])
    meta = {"n_neurons": raster.n_neurons, "timesteps": raster.timesteps, "dt_ms": raster.dt}
    side = sidecar_path(path)
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path, side


def read_raster(path: str | Path) -> SpikeRaster:
    """Load a raster written by :func:`write_raster`."""
    path = Path(path)
    meta = json.loads(sidecar_path(path).read_text())
    try:
        n, t, dt = int(meta["n_neurons"]), int(meta["timesteps"]), float(meta["dt_ms"])
    except KeyError as exc:
        raise ValueError(f"{sidecar_path(path)}: missing field {exc}") from None
    activity = np.zeros((n, t), dtype=np.bool_)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["neuron", "step", "spike"]:
            raise ValueError(f"{path}: expected header neuron,step,spike, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            i, s, v = (int(x) for x in row)
            if not (0 <= i < n and 0 <= s < t):
                raise ValueError(f"{path}:{lineno}: entry ({i}, {s}) outside {n}x{t} raster")
            if v not in (0, 1):
                raise ValueError(f"{path}:{lineno}: spike value must be 0 or 1, got {v}")
            activity[i, s] = bool(v)
    return SpikeRaster(activity, dt)
