"""Internal-clock analysis: pattern similarity and repetition counting."""
from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import find_peaks

from .raster import SpikeRaster

DEFAULT_THETA_REP = 0.9
DEFAULT_MIN_SEPARATION = 20


class ClockBand(enum.Enum):
    """Clock-frequency band; the value is its multiple of the base frequency."""

    SLOW = 1
    MIDDLE = 2
    FAST = 3
    ULTRAFAST = 4

    @property
    def multiplier(self) -> int:
        return self.value

    @property
    def label(self) -> str:
        return {1: "Slow", 2: "Middle", 3: "Fast", 4: "UltraFast"}[self.value]

    @classmethod
    def parse(cls, name: str) -> "ClockBand":
        key = name.strip().upper().replace("_", "").replace("-", "")
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown clock band {name!r}") from None


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("similarity matrix must be square")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def timesteps(self) -> int:
        return self.values.shape[0]


def _column_norms(a: np.ndarray) -> np.ndarray:
    return a.sum(axis=0, dtype=np.float64)  # binary: squared norm == count


def similarity_index(z: SpikeRaster, t1: int, t2: int) -> float:
    """Cosine similarity of the population vectors at steps ``t1`` and ``t2``.

    A silent step is orthogonal to everything, including itself.
    """
    T = z.timesteps
    if not (0 <= t1 < T and 0 <= t2 < T):
        raise IndexError(f"steps ({t1}, {t2}) outside 0..{T - 1}")
    a, b = z.activity[:, t1], z.activity[:, t2]
    n1, n2 = int(a.sum()), int(b.sum())
    if n1 == 0 or n2 == 0:
        return 0.0
    return float(np.count_nonzero(a & b) / np.sqrt(n1 * n2))


def similarity_matrix(z: SpikeRaster) -> SimilarityMatrix:
    a = z.activity.astype(np.float64)
    gram = a.T @ a
    sq = _column_norms(z.activity)
    # sqrt of the product keeps the diagonal at exactly 1
    den = np.sqrt(np.outer(sq, sq))
    values = np.divide(gram, den, out=np.zeros_like(gram), where=den > 0)
    return SimilarityMatrix(values)


def repetition_profile(M: SimilarityMatrix) -> np.ndarray:
    """Mean similarity along each diagonal offset, ``p[d]`` for ``d = 0..T-1``."""
    v = M.values
    return np.array([np.diagonal(v, d).mean() for d in range(M.timesteps)])


def estimate_clock_repetitions(
    M: SimilarityMatrix,
    theta_rep: float = DEFAULT_THETA_REP,
    min_separation: int = DEFAULT_MIN_SEPARATION,
) -> int:
    """Number of times the population pattern occurs, counting the original.

    Peaks of the diagonal profile at offsets ``>= min_separation`` that exceed
    ``theta_rep`` count as recurrences.
    """
    if not 0 < theta_rep < 1:
        raise ValueError("theta_rep must lie in (0, 1)")
    if min_separation < 1:
        raise ValueError("min_separation must be >= 1")
    if M.timesteps <= min_separation:
        return 1
    p = repetition_profile(M)
    peaks, _ = find_peaks(p, distance=min_separation)
    peaks = peaks[(peaks >= min_separation) & (p[peaks] > theta_rep)]
    return 1 + len(peaks)


def assign_band(repetitions: int) -> ClockBand:
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    return ClockBand(min(repetitions, 4))


def write_similarity(
    M: SimilarityMatrix,
    path: str | Path,
    theta_rep: float = DEFAULT_THETA_REP,
    min_separation: int = DEFAULT_MIN_SEPARATION,
) -> tuple[Path, Path]:
    """Write the matrix as a CSV grid and a JSON summary next to it."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in M.values:
            w.writerow([f"{x:.12g}" for x in row])
    reps = estimate_clock_repetitions(M, theta_rep, min_separation)
    meta = {
        "timesteps": M.timesteps,
        "theta_rep": theta_rep,
        "min_separation": min_separation,
        "repetitions": reps,
        "band": assign_band(reps).label,
    }
    side = path.with_suffix(".json")
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path, side
