"""Frame-sequence input and synthetic periodic motion rasters.

Raw videos enter the package as pre-extracted 8-bit grayscale frames stored in
a small little-endian container::

    b"SPKV" | version u8 (=1) | width u32 | height u32 | frame_count u32
    | fps_numerator u32 | fps_denominator u32 | frame_count*width*height bytes

Frames are stored frame-major, each frame row-major.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .raster import SpikeRaster

MAGIC = b"SPKV"
VERSION = 1
_HEADER = struct.Struct("<4sBIIIII")


class FrameFormatError(ValueError):
    """Base class for malformed frame containers."""


class BadMagicError(FrameFormatError):
    pass


class UnsupportedVersionError(FrameFormatError):
    pass


class TruncatedPayloadError(FrameFormatError):
    pass


class ZeroDimensionError(FrameFormatError):
    pass


@dataclass(frozen=True, eq=False)
class FrameSequence:
    """Grayscale video: ``frames`` has shape ``(n_frames, height, width)``.

    The frame rate is kept as the rational ``fps_num / fps_den`` so that a
    stored file round-trips byte for byte.
    """

    width: int
    height: int
    frames: np.ndarray
    fps_num: int = 30
    fps_den: int = 1

    def __post_init__(self):
        frames = np.asarray(self.frames)
        if frames.ndim != 3 or frames.shape[0] < 1:
            raise ValueError("a frame sequence needs at least one frame (n_frames, height, width)")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"frame dimensions must be positive, got {self.width}x{self.height}")
        if frames.shape[1:] != (self.height, self.width):
            raise ValueError(
                f"every frame must be {self.height}x{self.width}, got {frames.shape[1:]}"
            )
        if frames.dtype != np.uint8:
            if frames.size and (frames.min() < 0 or frames.max() > 255):
                raise ValueError("pixel values must lie in 0..255")
            frames = frames.astype(np.uint8)
        if self.fps_num < 1 or self.fps_den < 1:
            raise ValueError("fps must be positive")
        frames = np.ascontiguousarray(frames).copy()
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def fps(self) -> float:
        return self.fps_num / self.fps_den

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    def __eq__(self, other):
        if not isinstance(other, FrameSequence):
            return NotImplemented
        return (
            (self.width, self.height, self.fps_num, self.fps_den)
            == (other.width, other.height, other.fps_num, other.fps_den)
            and np.array_equal(self.frames, other.frames)
        )


def rgb_to_gray(rgb: np.ndarray) -> np.ndarray:
    """Integer luma approximation ``(77 R + 150 G + 29 B) >> 8`` on ``(..., 3)`` uint8 input."""
    rgb = np.asarray(rgb, dtype=np.uint32)
    if rgb.shape[-1] != 3:
        raise ValueError("expected a trailing RGB axis of length 3")
    y = (77 * rgb[..., 0] + 150 * rgb[..., 1] + 29 * rgb[..., 2]) >> 8
    return y.astype(np.uint8)


def load_frames(path: str | Path) -> FrameSequence:
    """Read a frame container.

    Raises FileNotFoundError for a missing file and a distinct
    FrameFormatError subclass for bad magic, unknown version, zero
    dimensions or a truncated payload.
    """
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagicError(f"{path}: not a frame container (magic {data[:4]!r})")
    if len(data) < _HEADER.size:
        raise TruncatedPayloadError(f"{path}: header truncated ({len(data)} bytes)")
    _, version, width, height, count, fps_num, fps_den = _HEADER.unpack_from(data)
    if version != VERSION:
        raise UnsupportedVersionError(f"{path}: unsupported container version {version}")
    if width == 0 or height == 0 or count == 0:
        raise ZeroDimensionError(f"{path}: zero dimension (w={width}, h={height}, frames={count})")
    if fps_num == 0 or fps_den == 0:
        raise ZeroDimensionError(f"{path}: zero frame rate {fps_num}/{fps_den}")
    expected = count * width * height
    payload = data[_HEADER.size:]
    if len(payload) < expected:
        raise TruncatedPayloadError(
            f"{path}: payload holds {len(payload)} bytes, header declares {expected}"
        )
    if len(payload) > expected:
        raise FrameFormatError(f"{path}: {len(payload) - expected} trailing bytes after payload")
    frames = np.frombuffer(payload, dtype=np.uint8).reshape(count, height, width)
    return FrameSequence(width, height, frames, fps_num, fps_den)


def store_frames(seq: FrameSequence, path: str | Path) -> None:
    if not isinstance(seq, FrameSequence):
        raise TypeError("store_frames expects a FrameSequence")
    header = _HEADER.pack(
        MAGIC, VERSION, seq.width, seq.height, seq.n_frames, seq.fps_num, seq.fps_den
    )
    Path(path).write_bytes(header + seq.frames.tobytes(order="C"))


@dataclass(frozen=True)
class MotionSpec:
    """Parameters of a synthetic periodic motion.

    ``motion_frequency`` is the limb-movement rate in Hz, ``duty_cycle`` the
    active fraction of each period, ``active_fraction`` the share of neurons
    recruited by each burst and ``jitter`` the largest per-neuron timing shift
    in ms.
    """

    motion_id: str
    motion_frequency: float
    duty_cycle: float = 0.5
    active_fraction: float = 0.5
    jitter: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.motion_frequency < 0:
            raise ValueError("motion_frequency must be >= 0")
        if not 0 < self.duty_cycle <= 1:
            raise ValueError("duty_cycle must lie in (0, 1]")
        if not 0 < self.active_fraction <= 1:
            raise ValueError("active_fraction must lie in (0, 1]")
        if self.jitter < 0:
            raise ValueError("jitter must be >= 0")


def n_steps(duration: float, dt: float) -> int:
    """Whole number of steps of length ``dt`` covering ``duration`` (both in ms)."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not duration >= dt:
        raise ValueError(f"duration ({duration} ms) must be at least one step ({dt} ms)")
    return int(math.floor(duration / dt + 1e-9))


def burst_windows(spec: MotionSpec, duration: float, dt: float) -> list[tuple[int, int]]:
    """Step ranges ``[start, stop)`` of the bursts of ``spec``, before jitter.

    ``round(f * duration)`` bursts are emitted (halves round up), each centred
    in its period so that partial periods at the end carry at most a
    proportional share of activity.
    """
    if spec.motion_frequency == 0:
        return []
    T = n_steps(duration, dt)
    period = 1000.0 / spec.motion_frequency
    n_bursts = int(math.floor(spec.motion_frequency * duration / 1000.0 + 0.5))
    width = spec.duty_cycle * period
    windows = []
    for k in range(n_bursts):
        onset = k * period + 0.5 * (period - width)
        start = int(math.floor(onset / dt + 0.5))
        stop = max(start + 1, int(math.floor((onset + width) / dt + 0.5)))
        start, stop = min(start, T - 1), min(stop, T)
        windows.append((start, stop))
    return windows


def synthesize_motion(spec: MotionSpec, n_neurons: int, duration: float, dt: float = 1.0) -> SpikeRaster:
    """Population-burst raster standing in for an encoded motion video.

    Each burst switches on ``floor(active_fraction * n_neurons)`` neurons,
    drawn afresh per burst, for the whole burst window; each recruited
    neuron's window is shifted by an integer number of steps no larger than
    ``jitter``.
    """
    if n_neurons < 1:
        raise ValueError("n_neurons must be positive")
    T = n_steps(duration, dt)
    activity = np.zeros((n_neurons, T), dtype=np.bool_)
    rng = np.random.default_rng(spec.seed)
    n_active = int(math.floor(spec.active_fraction * n_neurons))
    max_shift = int(math.floor(spec.jitter / dt + 1e-9))
    for start, stop in burst_windows(spec, duration, dt):
        chosen = rng.choice(n_neurons, size=n_active, replace=False)
        if max_shift:
            shifts = rng.integers(-max_shift, max_shift + 1, size=n_active)
        else:
            shifts = np.zeros(n_active, dtype=np.int64)
        for neuron, shift in zip(chosen, shifts):
            lo = min(max(start + shift, 0), T)
            hi = min(max(stop + shift, 0), T)
            activity[neuron, lo:hi] = True
    return SpikeRaster(activity, dt)
