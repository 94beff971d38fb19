"""Recurrent threshold-neuron network with exponentially decaying synaptic traces.

Membrane update, for every neuron ``i`` at step ``t``::

    trace_j(t) = exp(-dt/tau) * trace_j(t-1) + A_j(t-1)
    u_i(t)     = I - sum_j W_ij * trace_j(t)
    A_i(t)     = u_i(t) >= 0

with ``A(-1) = 0``.  Inhibitory synapses carry ``+w_inh`` and excitatory ones
``-k_exc * g_exc``, so raising ``k_exc`` raises activity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .clock import ClockBand
from .raster import SpikeRaster

K_CEILING = 2.5

# (module_size, tau_ms, k_exc)
BAND_PRESETS: dict[ClockBand, tuple[int, float, float]] = {
    ClockBand.SLOW: (1, 100.0, 1.0),
    ClockBand.MIDDLE: (5, 100.0, 1.0),
    ClockBand.FAST: (10, 50.0, 2.5),
    ClockBand.ULTRAFAST: (15, 50.0, 2.5),
}


@dataclass(frozen=True)
class NetworkConfig:
    """Network constants.

    ``w_inh`` defaults to ``0.1 / (p_conn * n_neurons)`` and ``g_exc`` (the
    excitatory conductance scaled by ``k_exc``) to ``0.1 * w_inh``.  ``k_exc``
    above the 2.5 ceiling is clamped on construction.
    """

    n_neurons: int = 900
    module_size: int = 1
    tau: float = 100.0
    k_exc: float = 1.0
    w_inh: float | None = None
    g_exc: float | None = None
    external_input: float = 1.0
    p_conn: float = 0.2
    p_exc: float = 0.5
    seed: int = 0
    dt: float = 1.0

    def __post_init__(self):
        if self.n_neurons < 1:
            raise ValueError("n_neurons must be positive")
        if not 1 <= self.module_size <= self.n_neurons:
            raise ValueError("module_size must lie in 1..n_neurons")
        if self.n_neurons % self.module_size:
            raise ValueError(
                f"n_neurons ({self.n_neurons}) is not divisible by module_size ({self.module_size})"
            )
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 <= self.p_conn <= 1 or not 0 <= self.p_exc <= 1:
            raise ValueError("p_conn and p_exc must lie in [0, 1]")
        if not self.k_exc > 0:
            raise ValueError("k_exc must be positive")
        if self.k_exc > K_CEILING:
            object.__setattr__(self, "k_exc", K_CEILING)
        if self.w_inh is None:
            w = 0.1 / (self.p_conn * self.n_neurons) if self.p_conn > 0 else 0.1 / self.n_neurons
            object.__setattr__(self, "w_inh", w)
        if not self.w_inh > 0:
            raise ValueError("w_inh must be positive")
        if self.g_exc is None:
            object.__setattr__(self, "g_exc", 0.1 * self.w_inh)
        if self.g_exc < 0:
            raise ValueError("g_exc must be >= 0")

    def with_band(self, band: ClockBand) -> "NetworkConfig":
        b, tau, k = configure_band(band)
        return replace(self, module_size=b, tau=tau, k_exc=k)


def configure_band(band: ClockBand) -> tuple[int, float, float]:
    """``(module_size, tau, k_exc)`` preset of a clock band."""
    return BAND_PRESETS[ClockBand(band)]


@dataclass(frozen=True, eq=False)
class Network:
    """Built network.  ``signs[i, j]`` is +1 for an inhibitory synapse j->i,
    -1 for an excitatory one and 0 when absent."""

    config: NetworkConfig
    signs: np.ndarray = field(repr=False)

    @property
    def n_neurons(self) -> int:
        return self.config.n_neurons

    @property
    def weights(self) -> np.ndarray:
        c = self.config
        w = np.zeros(self.signs.shape)
        w[self.signs > 0] = c.w_inh
        w[self.signs < 0] = -c.k_exc * c.g_exc
        return w

    def with_k(self, k_exc: float) -> "Network":
        """Same connectivity, different global excitatory weight."""
        return Network(replace(self.config, k_exc=k_exc), self.signs)


def build_network(cfg: NetworkConfig) -> Network:
    N, b = cfg.n_neurons, cfg.module_size
    rng = np.random.default_rng(cfg.seed)
    n_modules = N // b
    connected = rng.random((n_modules, N)) < cfg.p_conn
    excitatory = rng.random((n_modules, N)) < cfg.p_exc
    pattern = np.where(connected, np.where(excitatory, -1, 1), 0).astype(np.int8)
    signs = np.repeat(pattern, b, axis=0)
    np.fill_diagonal(signs, 0)
    signs.setflags(write=False)
    return Network(cfg, signs)


def simulate(net: Network, timesteps: int, return_membrane: bool = False):
    """Run the network from rest for ``timesteps`` steps.

    Returns the spike raster, or ``(raster, membrane)`` with the
    ``(n_neurons, timesteps)`` membrane values when ``return_membrane``.
    """
    if timesteps < 1:
        raise ValueError("timesteps must be >= 1")
    c = net.config
    W = net.weights
    decay = math.exp(-c.dt / c.tau)
    trace = np.zeros(c.n_neurons)
    spikes = np.zeros(c.n_neurons)
    out = np.zeros((c.n_neurons, timesteps), dtype=np.bool_)
    membrane = np.empty((c.n_neurons, timesteps)) if return_membrane else None
    for t in range(timesteps):
        trace = decay * trace + spikes
        u = c.external_input - W @ trace
        fired = u >= 0
        out[:, t] = fired
        spikes = fired.astype(np.float64)
        if return_membrane:
            membrane[:, t] = u
    raster = SpikeRaster(out, c.dt)
    return (raster, membrane) if return_membrane else raster


def gate(z: SpikeRaster, m: SpikeRaster) -> SpikeRaster:
    """Element-wise AND of network and motion spikes."""
    if z.shape != m.shape:
        raise ValueError(f"raster shapes differ: {z.shape} vs {m.shape}")
    if z.dt != m.dt:
        raise ValueError(f"raster steps differ: {z.dt} vs {m.dt} ms")
    return SpikeRaster(z.activity & m.activity, z.dt)


def mean_firing_rate(r: SpikeRaster) -> float:
    """Per-neuron average rate in Hz."""
    return r.count() / (r.n_neurons * r.timesteps * r.dt / 1000.0)


@dataclass(frozen=True)
class MotionMeasurement:
    motion_id: str
    mean_rate: float
    raster: SpikeRaster | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.mean_rate >= 0:
            raise ValueError("mean_rate must be >= 0")


def respond(net: Network, m: SpikeRaster, motion_id: str = "", z: SpikeRaster | None = None) -> MotionMeasurement:
    """Gate the network's activity with ``m`` and measure the output rate.

    ``z`` may carry a precomputed ``simulate(net, m.timesteps)`` to share one
    simulation across several motions.
    """
    if m.n_neurons != net.n_neurons:
        raise ValueError(f"motion has {m.n_neurons} neurons, network has {net.n_neurons}")
    if z is None:
        z = simulate(net, m.timesteps)
    out = gate(z, m)
    return MotionMeasurement(motion_id, mean_firing_rate(out), out)


def respond_all(net: Network, motions: dict[str, SpikeRaster]) -> list[MotionMeasurement]:
    """``respond`` for several equally long motions, simulating once."""
    if not motions:
        return []
    lengths = {m.timesteps for m in motions.values()}
    if len(lengths) != 1:
        raise ValueError("all motions must span the same number of steps")
    z = simulate(net, lengths.pop())
    return [respond(net, m, mid, z) for mid, m in motions.items()]
