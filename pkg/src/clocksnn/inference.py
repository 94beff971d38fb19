"""Speed classes from trained firing rates."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .network import MotionMeasurement, Network, respond_all
from .raster import SpikeRaster
from .training import TeachingSignal, rates_by_id

_DEFAULT_LABELS = {1: ("all",), 2: ("fast", "slow"), 3: ("fast", "medium", "slow")}


@dataclass(frozen=True)
class ClassBoundaries:
    """``thresholds[i]`` separates ``labels[i]`` (faster) from ``labels[i + 1]``."""

    thresholds: tuple[float, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        th, lab = tuple(float(x) for x in self.thresholds), tuple(self.labels)
        if len(lab) != len(th) + 1:
            raise ValueError("need exactly one more label than thresholds")
        if any(a <= b for a, b in zip(th, th[1:])):
            raise ValueError(f"thresholds must be strictly descending, got {th}")
        object.__setattr__(self, "thresholds", th)
        object.__setattr__(self, "labels", lab)

    def to_dict(self) -> dict:
        return {"thresholds": list(self.thresholds), "labels": list(self.labels)}


def default_labels(n_groups: int) -> tuple[str, ...]:
    return _DEFAULT_LABELS.get(n_groups, tuple(f"class{i}" for i in range(n_groups)))


def derive_boundaries(
    ts: TeachingSignal,
    trained: Sequence[MotionMeasurement],
    labels: Sequence[str] | None = None,
) -> ClassBoundaries:
    """Midpoints between neighbouring rank groups' closest trained rates.

    Raises ValueError if any motion of a faster group is not strictly above
    every motion of the next slower group.
    """
    rates = rates_by_id(ts, trained)
    groups = ts.groups()
    labels = tuple(labels) if labels is not None else default_labels(len(groups))
    thresholds = []
    for hi, lo in zip(groups, groups[1:]):
        floor_hi = min(rates[i] for i in hi)
        ceil_lo = max(rates[i] for i in lo)
        if not floor_hi > ceil_lo:
            raise ValueError(
                f"trained rates do not separate rank groups {ts.entries[hi[0]].rank_weight} "
                f"and {ts.entries[lo[0]].rank_weight} ({floor_hi:g} Hz <= {ceil_lo:g} Hz)"
            )
        thresholds.append((floor_hi + ceil_lo) / 2)
    return ClassBoundaries(tuple(thresholds), labels)


def classify(rate: float, b: ClassBoundaries) -> str:
    """Fastest label whose lower threshold is at or below ``rate``."""
    for thr, label in zip(b.thresholds, b.labels):
        if rate >= thr:
            return label
    return b.labels[-1]


@dataclass(frozen=True)
class LabelledMotion:
    motion_id: str
    raster: SpikeRaster
    truth: str


@dataclass(frozen=True)
class EvaluationReport:
    boundaries: ClassBoundaries
    per_motion: tuple[dict, ...]
    accuracy: float

    def to_dict(self) -> dict:
        return {
            "boundaries": self.boundaries.to_dict(),
            "per_motion": [dict(r) for r in self.per_motion],
            "accuracy": self.accuracy,
        }


def evaluate(net: Network, boundaries: ClassBoundaries, tests: Sequence[LabelledMotion]) -> EvaluationReport:
    if not tests:
        raise ValueError("empty test set")
    ids = [t.motion_id for t in tests]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate test motion ids")
    # one simulation per distinct motion length
    rates: dict[str, float] = {}
    by_len: dict[int, dict[str, SpikeRaster]] = {}
    for t in tests:
        by_len.setdefault(t.raster.timesteps, {})[t.motion_id] = t.raster
    for group in by_len.values():
        for m in respond_all(net, group):
            rates[m.motion_id] = m.mean_rate
    rows = []
    for t in tests:
        pred = classify(rates[t.motion_id], boundaries)
        rows.append({"id": t.motion_id, "rate_hz": rates[t.motion_id], "predicted": pred, "truth": t.truth})
    acc = sum(r["predicted"] == r["truth"] for r in rows) / len(rows)
    return EvaluationReport(boundaries, tuple(rows), acc)


def write_report(report: EvaluationReport, path: str | Path) -> tuple[Path, Path]:
    """JSON report at ``path`` plus a per-motion CSV beside it."""
    path = Path(path)
    path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    csv_path = path.with_suffix(".csv")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "rate_hz", "predicted", "truth"])
        for r in report.per_motion:
            w.writerow([r["id"], repr(r["rate_hz"]), r["predicted"], r["truth"]])
    return path, csv_path
