"""Frame-difference event encoding.

A frame sequence becomes a motion raster in three steps: two-stage spatial
pooling onto the neuron grid, thresholded absolute temporal difference, and
expansion of each frame's events over the time steps that frame occupies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .datasets import FrameSequence, n_steps
from .raster import SpikeRaster


@dataclass(frozen=True)
class EncoderConfig:
    delta_s: int = 4
    delta_t: int = 1
    pixel_threshold: float = 16.0
    grid_rows: int = 30
    grid_cols: int = 30
    dt: float = 1.0

    def __post_init__(self):
        if self.delta_s < 1 or self.delta_t < 1:
            raise ValueError("delta_s and delta_t must be >= 1")
        if self.grid_rows < 1 or self.grid_cols < 1:
            raise ValueError("grid must have at least one cell")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 <= self.pixel_threshold <= 255:
            raise ValueError("pixel_threshold must lie in 0..255")

    @property
    def n_neurons(self) -> int:
        return self.grid_rows * self.grid_cols


@dataclass(frozen=True)
class EncodingReport:
    total_bits: int
    spikes_per_frame: list[int] = field(repr=False)
    raster: SpikeRaster = field(repr=False)


def _partition(length: int, parts: int) -> list[tuple[int, int]]:
    # equal chunks, remainder goes to the last one
    size = length // parts
    bounds = [(i * size, (i + 1) * size) for i in range(parts)]
    bounds[-1] = (bounds[-1][0], length)
    return bounds


def pool(frames: np.ndarray, cfg: EncoderConfig) -> np.ndarray:
    """Pool ``(n, H, W)`` frames onto ``(n, grid_rows, grid_cols)`` float cells."""
    frames = np.asarray(frames, dtype=np.float64)
    _, H, W = frames.shape
    # stage 1: delta_s blocks (a short trailing block absorbs the remainder)
    rows1, cols1 = H // cfg.delta_s or 1, W // cfg.delta_s or 1
    rb, cb = _partition(H, rows1), _partition(W, cols1)
    stage1 = np.empty((frames.shape[0], rows1, cols1))
    for r, (r0, r1) in enumerate(rb):
        for c, (c0, c1) in enumerate(cb):
            stage1[:, r, c] = frames[:, r0:r1, c0:c1].mean(axis=(1, 2))
    if cfg.grid_rows > rows1 or cfg.grid_cols > cols1:
        raise ValueError(
            f"grid {cfg.grid_rows}x{cfg.grid_cols} exceeds pooled source {rows1}x{cols1}"
        )
    # stage 2: equal rectangles onto the grid
    out = np.empty((frames.shape[0], cfg.grid_rows, cfg.grid_cols))
    for r, (r0, r1) in enumerate(_partition(rows1, cfg.grid_rows)):
        for c, (c0, c1) in enumerate(_partition(cols1, cfg.grid_cols)):
            out[:, r, c] = stage1[:, r0:r1, c0:c1].mean(axis=(1, 2))
    return out


def frame_windows(n_frames: int, fps: Fraction, dt: float, timesteps: int) -> list[tuple[int, int]]:
    """Step range ``[start, stop)`` of each frame, clipped to ``timesteps``."""
    ms_per_frame = Fraction(1000) / fps
    dt_f = Fraction(dt).limit_denominator(10**9)
    out = []
    for i in range(n_frames):
        start = math.floor(i * ms_per_frame / dt_f)
        stop = math.floor((i + 1) * ms_per_frame / dt_f)
        out.append((min(start, timesteps), min(stop, timesteps)))
    return out


def encode(seq: FrameSequence, cfg: EncoderConfig, duration: float) -> EncodingReport:
    if not duration > 0:
        raise ValueError("duration must be positive")
    T = n_steps(duration, cfg.dt)
    cells = pool(seq.frames, cfg).reshape(seq.n_frames, -1)
    activity = np.zeros((cfg.n_neurons, T), dtype=np.bool_)
    windows = frame_windows(seq.n_frames, Fraction(seq.fps_num, seq.fps_den), cfg.dt, T)
    per_frame = []
    for i, (start, stop) in enumerate(windows):
        if i < cfg.delta_t or start >= stop:
            per_frame.append(0)
            continue
        fired = np.abs(cells[i] - cells[i - cfg.delta_t]) > cfg.pixel_threshold
        activity[fired, start:stop] = True
        per_frame.append(int(fired.sum()) * (stop - start))
    raster = SpikeRaster(activity, cfg.dt)
    return EncodingReport(information_content(raster), per_frame, raster)


def information_content(raster: SpikeRaster) -> int:
    """Total number of spikes in ``raster``."""
    return raster.count()
