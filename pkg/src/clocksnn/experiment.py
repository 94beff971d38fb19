"""Experiment configuration and the end-to-end pipelines behind the CLI.

A configuration is one JSON document.  Every key is optional; missing keys
take the defaults of the corresponding dataclass.  A ``manifest.json`` written
by a previous run is also accepted as a configuration.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import shutil
import tempfile
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator

import numpy as np

from . import __version__
from .clock import (
    DEFAULT_MIN_SEPARATION,
    DEFAULT_THETA_REP,
    ClockBand,
    estimate_clock_repetitions,
    similarity_matrix,
    write_similarity,
)
from .datasets import MotionSpec, load_frames, n_steps, synthesize_motion
from .encoder import EncoderConfig, encode
from .inference import (
    ClassBoundaries,
    LabelledMotion,
    derive_boundaries,
    evaluate,
    write_report,
)
from .network import MotionMeasurement, Network, NetworkConfig, build_network, simulate
from .raster import SpikeRaster, read_raster, write_raster
from .seeding import derive_seed
from .training import (
    TeachingSignal,
    TrainingConfig,
    TrainingTrace,
    train,
    validate_teaching,
    write_trace,
)


class ConfigError(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


@dataclass(frozen=True)
class SpeedGroup:
    label: str
    frequency: float
    rank_weight: int


DEFAULT_GROUPS = (
    SpeedGroup("fast", 15.0, 6),
    SpeedGroup("medium", 10.0, 3),
    SpeedGroup("slow", 5.0, 1),
)


@dataclass(frozen=True)
class SyntheticSet:
    """Synthetic stand-ins for motion videos.

    Training motions use the nominal duty cycle; held-out motions cycle the
    duty cycle through ``-duty_step, 0, +duty_step`` around it and use jitter
    ``0..test_max_jitter`` ms.
    """

    groups: tuple[SpeedGroup, ...] = DEFAULT_GROUPS
    train_per_group: int = 2
    test_per_group: int = 6
    duty_cycle: float = 0.5
    active_fraction: float = 1.0
    train_jitter: float = 1.0
    duty_step: float = 0.005
    test_max_jitter: float = 2.0


@dataclass(frozen=True)
class MotionSource:
    """One explicitly listed motion: a raster file, a frame file, or a synthetic spec."""

    motion_id: str
    frequency: float = 0.0
    rank_weight: int = 1
    label: str = ""
    raster: str | None = None
    frames: str | None = None
    synthetic: MotionSpec | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    synthetic: SyntheticSet = field(default_factory=SyntheticSet)
    seed: int = 0
    duration_ms: float = 500.0
    f_base: float = 5.0
    theta_rep: float = DEFAULT_THETA_REP
    min_separation: int = DEFAULT_MIN_SEPARATION
    motions: tuple[MotionSource, ...] = ()
    tests: tuple[MotionSource, ...] = ()

    @property
    def timesteps(self) -> int:
        return n_steps(self.duration_ms, self.network.dt)


# ---------------------------------------------------------------- config I/O


def _build(cls, data: Any, where: str, errors: list[str], convert=None):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        errors.append(f"{where}: expected an object")
        return None
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        errors.append(f"{where}: unknown keys {unknown}")
        return None
    kwargs = dict(data)
    if convert:
        try:
            kwargs = convert(kwargs)
        except (TypeError, ValueError, KeyError) as exc:
            errors.append(f"{where}: {exc}")
            return None
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        errors.append(f"{where}: {exc}")
        return None


def _motion_source(data: Any, where: str, base: Path, errors: list[str]) -> MotionSource | None:
    def convert(kw):
        if kw.get("synthetic") is not None:
            spec = dict(kw["synthetic"])
            spec.setdefault("motion_id", kw.get("motion_id", ""))
            spec.setdefault("motion_frequency", kw.get("frequency", 0.0))
            kw["synthetic"] = MotionSpec(**spec)
        for key in ("raster", "frames"):
            if kw.get(key) is not None:
                p = Path(kw[key])
                p = p if p.is_absolute() else base / p
                if not p.exists():
                    raise ValueError(f"{key} file {p} does not exist")
                kw[key] = str(p)
        if sum(kw.get(k) is not None for k in ("raster", "frames", "synthetic")) != 1:
            raise ValueError("exactly one of raster, frames, synthetic is required")
        return kw

    return _build(MotionSource, data, where, errors, convert)


def config_from_dict(data: dict, base_dir: str | Path = ".") -> ExperimentConfig:
    """Validate ``data`` and build a config; raises ConfigError listing every problem."""
    if not isinstance(data, dict):
        raise ConfigError(["configuration must be a JSON object"])
    if "config" in data and "artifacts" in data:  # a manifest
        data = data["config"]
    base = Path(base_dir)
    errors: list[str] = []
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        errors.append(f"unknown top-level keys {unknown}")
    kw: dict[str, Any] = {}
    kw["network"] = _build(NetworkConfig, data.get("network"), "network", errors)
    kw["encoder"] = _build(EncoderConfig, data.get("encoder"), "encoder", errors)
    kw["training"] = _build(TrainingConfig, data.get("training"), "training", errors)

    def groups(k):
        if "groups" in k:
            k["groups"] = tuple(SpeedGroup(**g) for g in k["groups"])
        return k

    kw["synthetic"] = _build(SyntheticSet, data.get("synthetic"), "synthetic", errors, groups)
    for key in ("motions", "tests"):
        items = data.get(key, [])
        if not isinstance(items, list):
            errors.append(f"{key}: expected a list")
            continue
        kw[key] = tuple(_motion_source(m, f"{key}[{i}]", base, errors) for i, m in enumerate(items))
    for key in ("seed", "duration_ms", "f_base", "theta_rep", "min_separation"):
        if key in data:
            kw[key] = data[key]
    if errors:
        raise ConfigError(errors)
    try:
        cfg = ExperimentConfig(**kw)
        cfg.timesteps
    except (TypeError, ValueError) as exc:
        raise ConfigError([str(exc)]) from None
    if not 0 < cfg.theta_rep < 1:
        errors.append("theta_rep must lie in (0, 1)")
    if cfg.min_separation < 1:
        errors.append("min_separation must be >= 1")
    if cfg.encoder.dt != cfg.network.dt:
        errors.append("encoder.dt and network.dt must agree")
    uses_frames = any(s.frames for s in cfg.motions + cfg.tests)
    if uses_frames and cfg.encoder.n_neurons != cfg.network.n_neurons:
        errors.append(
            f"encoder grid ({cfg.encoder.n_neurons} cells) does not match network.n_neurons ({cfg.network.n_neurons})"
        )
    if cfg.motions:
        errors.extend(f"teaching: {p}" for p in validate_teaching(teaching_from_sources(cfg.motions, cfg.f_base)))
    if errors:
        raise ConfigError(errors)
    return cfg


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError([f"config file {path} not found"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON ({exc})"]) from None
    return config_from_dict(data, path.parent)


def _plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [_plain(x) for x in obj]
    return obj


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return _plain(cfg)


# ---------------------------------------------------------- motion assembly


def teaching_from_sources(sources, f_base: float) -> TeachingSignal:
    return TeachingSignal.from_lists(
        [s.motion_id for s in sources],
        [s.frequency for s in sources],
        [s.rank_weight for s in sources],
        f_base,
    )


def load_motion(src: MotionSource, cfg: ExperimentConfig) -> SpikeRaster:
    if src.synthetic is not None:
        r = synthesize_motion(src.synthetic, cfg.network.n_neurons, cfg.duration_ms, cfg.network.dt)
    elif src.frames is not None:
        r = encode(load_frames(src.frames), cfg.encoder, cfg.duration_ms).raster
    else:
        r = read_raster(src.raster)
    if r.shape != (cfg.network.n_neurons, cfg.timesteps) or r.dt != cfg.network.dt:
        raise ValueError(
            f"motion {src.motion_id}: raster {r.shape} @ {r.dt} ms does not match "
            f"network ({cfg.network.n_neurons}, {cfg.timesteps}) @ {cfg.network.dt} ms"
        )
    return r


def synthetic_training_sources(cfg: ExperimentConfig) -> tuple[MotionSource, ...]:
    s = cfg.synthetic
    out = []
    for g in s.groups:
        for r in range(s.train_per_group):
            mid = f"train-{g.label}-{r}"
            spec = MotionSpec(
                mid, g.frequency, s.duty_cycle, s.active_fraction, s.train_jitter,
                derive_seed(cfg.seed, "train", g.label, r),
            )
            out.append(MotionSource(mid, g.frequency, g.rank_weight, g.label, synthetic=spec))
    return tuple(out)


def synthetic_test_sources(cfg: ExperimentConfig) -> tuple[MotionSource, ...]:
    s = cfg.synthetic
    out = []
    for g in s.groups:
        for r in range(s.test_per_group):
            duty = min(max(s.duty_cycle + s.duty_step * (r % 3 - 1), 1e-6), 1.0)
            jitter = s.test_max_jitter * (r // 3) / max((s.test_per_group - 1) // 3, 1)
            mid = f"test-{g.label}-{r}"
            spec = MotionSpec(
                mid, g.frequency, duty, s.active_fraction, jitter,
                derive_seed(cfg.seed, "test", g.label, r),
            )
            out.append(MotionSource(mid, g.frequency, g.rank_weight, g.label, synthetic=spec))
    return tuple(out)


def network_config(cfg: ExperimentConfig) -> NetworkConfig:
    """The configured network with its seed split off the master seed."""
    return dataclasses.replace(cfg.network, seed=derive_seed(cfg.seed, "network"))


# ------------------------------------------------------------- atomic output


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


@contextmanager
def atomic_output(out: str | Path) -> Iterator[Path]:
    """Yield a scratch directory whose contents replace ``out`` only on success."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.tmp-", dir=out.parent))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if out.exists():
        shutil.rmtree(out)
    os.replace(tmp, out)


def write_manifest(root: Path, command: str, cfg: ExperimentConfig, extra: dict | None = None) -> Path:
    """Record the resolved configuration and a checksum of every artifact under ``root``."""
    artifacts = {
        p.relative_to(root).as_posix(): _sha256(p)
        for p in sorted(root.rglob("*"))
        if p.is_file() and p.name != "manifest.json"
    }
    manifest = {
        "command": command,
        "seed": cfg.seed,
        "version": __version__,
        "config": config_to_dict(cfg),
        "artifacts": artifacts,
    }
    if extra:
        manifest.update(extra)
    return write_json(root / "manifest.json", manifest)


# ----------------------------------------------------------------- pipelines


def run_encode(cfg: ExperimentConfig, frames_path: str | Path, root: Path) -> dict:
    report = encode(load_frames(frames_path), cfg.encoder, cfg.duration_ms)
    write_raster(report.raster, root / "raster.csv")
    summary = {"total_bits": report.total_bits, "spikes_per_frame": report.spikes_per_frame}
    write_json(root / "encoding.json", summary)
    return summary


def run_similarity(cfg: ExperimentConfig, raster: SpikeRaster, root: Path, stem: str = "similarity") -> int:
    M = similarity_matrix(raster)
    write_similarity(M, root / f"{stem}.csv", cfg.theta_rep, cfg.min_separation)
    return estimate_clock_repetitions(M, cfg.theta_rep, cfg.min_separation)


def run_simulate(cfg: ExperimentConfig, root: Path, band: ClockBand | None = None) -> dict:
    ncfg = network_config(cfg)
    if band is not None:
        ncfg = ncfg.with_band(band)
    z = simulate(build_network(ncfg), cfg.timesteps)
    write_raster(z, root / "raster.csv")
    reps = run_similarity(cfg, z, root)
    return {"repetitions": reps, "mean_activity": float(z.activity.mean())}


def _separation(trace: TrainingTrace, ts: TeachingSignal) -> float:
    # smallest cross-group gap relative to the mean rate
    r = trace.final_rates
    groups = [[r[ts.entries[i].motion_id] for i in g] for g in ts.groups()]
    if len(groups) < 2:
        return 0.0
    gap = min(min(a) - max(b) for a, b in zip(groups, groups[1:]))
    mean = float(np.mean(list(r.values())))
    return gap / mean if mean > 0 else 0.0


def pick_trace(traces: list[TrainingTrace], ts: TeachingSignal) -> TrainingTrace | None:
    """Converged trace whose groups are furthest apart; earlier band wins ties."""
    conv = [t for t in traces if t.converged]
    if not conv:
        return None
    return max(conv, key=lambda t: (_separation(t, ts), -t.band.value))


def trained_network(cfg: ExperimentConfig, trace: TrainingTrace) -> Network:
    ncfg = network_config(cfg).with_band(trace.band)
    return build_network(dataclasses.replace(ncfg, k_exc=trace.final_k))


def run_train(cfg: ExperimentConfig, root: Path, threads: int = 1) -> dict:
    sources = cfg.motions or synthetic_training_sources(cfg)
    ts = teaching_from_sources(sources, cfg.f_base)
    motions = _map_threads(lambda s: load_motion(s, cfg), sources, threads)
    traces = train(ts, motions, network_config(cfg), cfg.training, threads)
    (root / "traces").mkdir()
    for t in traces:
        write_trace(t, root / "traces" / f"{t.band.label.lower()}.json")
    chosen = pick_trace(traces, ts)
    model: dict[str, Any] = {
        "selected_bands": [t.band.label for t in traces],
        "stage1_errors": traces[0].stage1_errors,
        "converged_bands": [t.band.label for t in traces if t.converged],
        "band": None,
        "k_exc": None,
        "network_seed": network_config(cfg).seed,
        "boundaries": None,
    }
    if chosen is not None:
        measured = [MotionMeasurement(k, v) for k, v in chosen.final_rates.items()]
        labels = _group_labels(sources)
        bounds = derive_boundaries(ts, measured, labels)
        model.update(band=chosen.band.label, k_exc=chosen.final_k, boundaries=bounds.to_dict())
    write_json(root / "model.json", model)
    return model


def _group_labels(sources) -> list[str] | None:
    labels = []
    for s in sources:
        if not labels or labels[-1][0] != s.rank_weight:
            labels.append((s.rank_weight, s.label))
    names = [lab for _, lab in labels]
    return names if all(names) and len(set(names)) == len(names) else None


def run_infer(cfg: ExperimentConfig, model: dict, root: Path, threads: int = 1) -> dict:
    if not model.get("band") or model.get("boundaries") is None:
        raise ValueError("model has no converged band; nothing to infer with")
    bounds = ClassBoundaries(tuple(model["boundaries"]["thresholds"]), tuple(model["boundaries"]["labels"]))
    ncfg = dataclasses.replace(network_config(cfg), seed=model["network_seed"])
    ncfg = dataclasses.replace(ncfg.with_band(ClockBand.parse(model["band"])), k_exc=model["k_exc"])
    net = build_network(ncfg)
    sources = cfg.tests or synthetic_test_sources(cfg)
    rasters = _map_threads(lambda s: load_motion(s, cfg), sources, threads)
    tests = [LabelledMotion(s.motion_id, r, s.label) for s, r in zip(sources, rasters)]
    report = evaluate(net, bounds, tests)
    write_report(report, root / "evaluation.json")
    return report.to_dict()


def run_repro(cfg: ExperimentConfig, root: Path, threads: int = 1) -> dict:
    """Synthetic training, band selection, tuning, boundaries and held-out evaluation."""
    cfg = dataclasses.replace(cfg, motions=(), tests=())
    model = run_train(cfg, root, threads)
    summary: dict[str, Any] = {
        "seed": cfg.seed,
        "selected_bands": model["selected_bands"],
        "stage1_errors": model["stage1_errors"],
        "converged": model["band"] is not None,
        "band": model["band"],
        "final_k": model["k_exc"],
        "boundaries": model["boundaries"],
        "accuracy": None,
    }
    if model["band"] is not None:
        report = run_infer(cfg, model, root, threads)
        summary["accuracy"] = report["accuracy"]
    ncfg = network_config(cfg)
    reps = {}
    for band in ClockBand:
        z = simulate(build_network(ncfg.with_band(band)), cfg.timesteps)
        reps[band.label] = estimate_clock_repetitions(similarity_matrix(z), cfg.theta_rep, cfg.min_separation)
    summary["clock_repetitions"] = reps
    write_json(root / "summary.json", summary)
    return summary


def _map_threads(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
