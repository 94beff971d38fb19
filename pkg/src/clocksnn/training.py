"""Two-stage training: clock-band selection, then tuning of the global
excitatory weight ``k`` from the trial-over-trial change in rank/gap error.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from .clock import ClockBand
from .network import (
    K_CEILING,
    MotionMeasurement,
    NetworkConfig,
    build_network,
    respond_all,
)
from .raster import SpikeRaster


@dataclass(frozen=True)
class TeachingEntry:
    motion_id: str
    frequency: float
    rank_weight: int


@dataclass(frozen=True)
class TeachingSignal:
    """Motions listed fastest first; equal ``rank_weight`` means the same group."""

    entries: tuple[TeachingEntry, ...]
    f_base: float

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    @classmethod
    def from_lists(cls, ids, freqs, weights, f_base) -> "TeachingSignal":
        if not len(ids) == len(freqs) == len(weights):
            raise ValueError("ids, frequencies and weights must have equal length")
        return cls(tuple(TeachingEntry(str(i), float(f), int(w)) for i, f, w in zip(ids, freqs, weights)), float(f_base))

    @property
    def motion_ids(self) -> list[str]:
        return [e.motion_id for e in self.entries]

    @property
    def weights(self) -> list[int]:
        return [e.rank_weight for e in self.entries]

    def groups(self) -> list[list[int]]:
        """Entry indices grouped by rank weight, in list order."""
        out: list[list[int]] = []
        for i, e in enumerate(self.entries):
            if out and self.entries[out[-1][0]].rank_weight == e.rank_weight:
                out[-1].append(i)
            else:
                out.append([i])
        return out


def validate_teaching(ts: TeachingSignal) -> list[str]:
    """All invariant violations of ``ts``; an empty list means valid."""
    problems = []
    e = ts.entries
    if not e:
        problems.append("teaching signal has no entries")
    if not ts.f_base > 0:
        problems.append(f"f_base must be positive, got {ts.f_base}")
    ids = [x.motion_id for x in e]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        problems.append(f"duplicate motion ids: {dupes}")
    for x in e:
        if int(x.rank_weight) != x.rank_weight or x.rank_weight < 1:
            problems.append(f"{x.motion_id}: rank weight must be a positive integer, got {x.rank_weight}")
        if x.frequency < 0:
            problems.append(f"{x.motion_id}: negative frequency {x.frequency}")
    seen_weights = set()
    for a, b in zip(e, e[1:]):
        if b.frequency > a.frequency:
            problems.append(
                f"ordering: {b.motion_id} ({b.frequency} Hz) follows slower {a.motion_id} ({a.frequency} Hz)"
            )
        if b.rank_weight > a.rank_weight:
            problems.append(f"ordering: rank weight rises from {a.rank_weight} to {b.rank_weight} at {b.motion_id}")
        if b.rank_weight != a.rank_weight:
            seen_weights.add(a.rank_weight)
            if b.rank_weight in seen_weights:
                problems.append(f"rank group {b.rank_weight} is not contiguous")
            gap = a.frequency - b.frequency
            if gap < ts.f_base:
                problems.append(
                    f"separation: {a.motion_id} -> {b.motion_id} gap {gap:g} Hz < f_base {ts.f_base:g} Hz"
                )
    return problems


def rates_by_id(ts: TeachingSignal, rates: Sequence[MotionMeasurement]) -> list[float]:
    by_id: dict[str, float] = {}
    for m in rates:
        if m.motion_id in by_id:
            raise ValueError(f"duplicate measurement for motion {m.motion_id!r}")
        by_id[m.motion_id] = m.mean_rate
    wanted = set(ts.motion_ids)
    missing, extra = wanted - by_id.keys(), by_id.keys() - wanted
    if missing or extra:
        raise ValueError(f"measurements do not match teaching motions (missing {sorted(missing)}, extra {sorted(extra)})")
    return [by_id[i] for i in ts.motion_ids]


def measured_order(ts: TeachingSignal, rates: Sequence[MotionMeasurement]) -> list[int]:
    """Teaching indices sorted by rate, fastest first; ties keep teaching order."""
    r = rates_by_id(ts, rates)
    return sorted(range(len(r)), key=lambda i: (-r[i], i))


def rank_error(ts: TeachingSignal, rates: Sequence[MotionMeasurement]) -> float:
    """Rank-weight mismatch plus the number of too-close cross-group neighbours."""
    r = rates_by_id(ts, rates)
    w = ts.weights
    order = sorted(range(len(r)), key=lambda i: (-r[i], i))
    mismatch = sum(abs(w[i] - w[pos]) for pos, i in enumerate(order))
    close = sum(
        1
        for a, b in zip(order, order[1:])
        if w[a] != w[b] and r[a] - r[b] < ts.f_base
    )
    return float(mismatch + close)


@dataclass(frozen=True)
class TrainingConfig:
    delta: float = 0.05
    max_trials: int = 200
    k_max: float = K_CEILING
    k_min: float = 0.01

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.max_trials < 1:
            raise ValueError("max_trials must be >= 1")
        if not 0 < self.k_min <= self.k_max <= K_CEILING:
            raise ValueError(f"need 0 < k_min <= k_max <= {K_CEILING}")


def nddp_step(k: float, e_c: float, e_p: float, cfg: TrainingConfig) -> float:
    """Shrink ``k`` by ``delta`` when the error grew, otherwise grow it."""
    if not cfg.k_min <= k <= cfg.k_max:
        raise ValueError(f"k={k} outside [{cfg.k_min}, {cfg.k_max}]")
    k_new = k * (1 - cfg.delta) if e_c > e_p else k * (1 + cfg.delta)
    return min(max(k_new, cfg.k_min), cfg.k_max)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    k: float
    error: float


@dataclass
class TrainingTrace:
    band: ClockBand
    trials: list[TrialRecord]
    final_k: float
    converged: bool
    stage1_errors: dict[str, float]
    final_rates: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "band": self.band.label,
            "stage1_errors": dict(self.stage1_errors),
            "trials": [{"trial": t.trial, "k": t.k, "error": t.error} for t in self.trials],
            "final_k": self.final_k,
            "converged": self.converged,
            "final_rates": dict(self.final_rates),
        }


def _check_alignment(ts: TeachingSignal, motions: Sequence[SpikeRaster]) -> None:
    if len(motions) != len(ts.entries):
        raise ValueError(f"{len(motions)} motions for {len(ts.entries)} teaching entries")


def _measure(cfg: NetworkConfig, ts: TeachingSignal, motions: Sequence[SpikeRaster]) -> list[MotionMeasurement]:
    net = build_network(cfg)
    return respond_all(net, dict(zip(ts.motion_ids, motions)))


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def classify_band(
    ts: TeachingSignal,
    motions: Sequence[SpikeRaster],
    base_cfg: NetworkConfig,
    threads: int = 1,
) -> tuple[list[ClockBand], dict[ClockBand, float]]:
    """Evaluate every preset band; return the minimal-error bands and all errors."""
    _check_alignment(ts, motions)
    bands = list(ClockBand)
    errs = _map(lambda b: rank_error(ts, _measure(base_cfg.with_band(b), ts, motions)), bands, threads)
    errors = dict(zip(bands, errs))
    best = min(errors.values())
    return [b for b in bands if errors[b] == best], errors


def tune_band(
    band: ClockBand,
    ts: TeachingSignal,
    motions: Sequence[SpikeRaster],
    base_cfg: NetworkConfig,
    tcfg: TrainingConfig,
    stage1_errors: dict[str, float] | None = None,
) -> TrainingTrace:
    """Trial loop for one band; only ``k_exc`` changes between trials."""
    cfg = base_cfg.with_band(band)
    k = min(max(cfg.k_exc, tcfg.k_min), tcfg.k_max)
    trials: list[TrialRecord] = []
    e_prev = math.inf
    converged = False
    rates: list[MotionMeasurement] = []
    for trial in range(1, tcfg.max_trials + 1):
        rates = _measure(replace(cfg, k_exc=k), ts, motions)
        e = rank_error(ts, rates)
        trials.append(TrialRecord(trial, k, e))
        if e == 0:
            converged = True
            break
        if trial == tcfg.max_trials:
            break
        if trial > 1:
            k = nddp_step(k, e, e_prev, tcfg)
        e_prev = e
    return TrainingTrace(
        band=band,
        trials=trials,
        final_k=k,
        converged=converged,
        stage1_errors=dict(stage1_errors or {}),
        final_rates={m.motion_id: m.mean_rate for m in rates},
    )


def train(
    ts: TeachingSignal,
    motions: Sequence[SpikeRaster],
    base_cfg: NetworkConfig,
    tcfg: TrainingConfig = TrainingConfig(),
    threads: int = 1,
) -> list[TrainingTrace]:
    """Select bands, then tune ``k`` in each; one trace per selected band."""
    problems = validate_teaching(ts)
    if problems:
        raise ValueError("invalid teaching signal: " + "; ".join(problems))
    _check_alignment(ts, motions)
    selected, errors = classify_band(ts, motions, base_cfg, threads)
    labelled = {b.label: e for b, e in errors.items()}
    return _map(lambda b: tune_band(b, ts, motions, base_cfg, tcfg, labelled), selected, threads)


def write_trace(trace: TrainingTrace, path: str | Path) -> tuple[Path, Path]:
    """JSON trace at ``path`` plus a per-trial CSV beside it."""
    path = Path(path)
    path.write_text(json.dumps(trace.to_dict(), indent=2, sort_keys=True) + "\n")
    csv_path = path.with_suffix(".csv")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "k", "error"])
        for t in trace.trials:
            w.writerow([t.trial, repr(t.k), repr(t.error)])
    return path, csv_path
