import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from clocksnn.clock import ClockBand, estimate_clock_repetitions, similarity_matrix
from clocksnn.datasets import MotionSpec, synthesize_motion
from clocksnn.network import (
    K_CEILING,
    Network,
    NetworkConfig,
    build_network,
    configure_band,
    gate,
    mean_firing_rate,
    respond,
    respond_all,
    simulate,
)
from clocksnn.raster import SpikeRaster

from oracles import explicit_membrane


def test_band_presets():
    assert configure_band(ClockBand.SLOW) == (1, 100, 1)
    assert configure_band(ClockBand.MIDDLE) == (5, 100, 1)
    assert configure_band(ClockBand.FAST) == (10, 50, 2.5)
    assert configure_band(ClockBand.ULTRAFAST) == (15, 50, 2.5)
    cfg = NetworkConfig(seed=3).with_band(ClockBand.FAST)
    assert (cfg.module_size, cfg.tau, cfg.k_exc, cfg.seed) == (10, 50, 2.5, 3)


def test_config_validation_and_clamp():
    with pytest.raises(ValueError, match="divisible"):
        NetworkConfig(n_neurons=10, module_size=3)
    with pytest.raises(ValueError):
        NetworkConfig(tau=0)
    with pytest.raises(ValueError):
        NetworkConfig(k_exc=0)
    with pytest.raises(ValueError):
        NetworkConfig(p_conn=1.5)
    assert NetworkConfig(k_exc=7.0).k_exc == K_CEILING
    cfg = NetworkConfig(n_neurons=100, p_conn=0.5)
    assert cfg.w_inh == pytest.approx(0.1 / 50)
    assert cfg.g_exc == pytest.approx(0.1 * cfg.w_inh)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 100.0))
def test_k_never_exceeds_ceiling(k):
    cfg = NetworkConfig(n_neurons=30, k_exc=k)
    assert 0 < cfg.k_exc <= K_CEILING
    assert cfg.with_band(ClockBand.ULTRAFAST).k_exc <= K_CEILING


def test_single_module_rows_identical():
    s = build_network(NetworkConfig(n_neurons=12, module_size=12, p_conn=0.5, seed=1)).signs
    assert np.all(np.diag(s) == 0)
    pattern = s[1].copy()
    pattern[0] = s[2, 0]  # row 0 loses its own entry, row 1 loses entry 1
    for i in range(12):
        expected = pattern.copy()
        expected[i] = 0
        assert_array_equal(s[i], expected)


def test_modules_share_incoming_pattern():
    net = build_network(NetworkConfig(n_neurons=30, module_size=5, p_conn=0.6, seed=4))
    s = net.signs
    for m in range(6):
        rows = range(5 * m, 5 * m + 5)
        for a in rows:
            for b in rows:
                mask = np.ones(30, bool)
                mask[[a, b]] = False  # self-connections removed
                assert_array_equal(s[a, mask], s[b, mask])


def test_no_connections_means_constant_firing():
    net = build_network(NetworkConfig(n_neurons=20, p_conn=0.0, seed=2))
    assert not net.signs.any()
    z = simulate(net, 30)
    assert z.activity.all()


def test_excitatory_fraction_near_half():
    for seed in range(10):
        s = build_network(NetworkConfig(n_neurons=900, p_exc=0.5, seed=seed)).signs
        frac = np.count_nonzero(s < 0) / np.count_nonzero(s)
        assert abs(frac - 0.5) < 0.05


def test_two_neuron_mutual_inhibition():
    cfg = NetworkConfig(n_neurons=2, tau=10.0, w_inh=2.0, external_input=1.0)
    net = Network(cfg, np.array([[0, 1], [1, 0]], dtype=np.int8))
    z, u = simulate(net, 50, return_membrane=True)
    ref_z, ref_u = explicit_membrane([[0, 2.0], [2.0, 0]], 1.0, 10.0, 1.0, 50)
    assert_array_equal(z.activity, ref_z)
    assert_allclose(u, ref_u, atol=1e-9, rtol=0)
    # both fire at the first step, are silenced, then recover together
    assert z.activity[:, 0].all() and not z.activity[:, 1].any()
    # silent while 2 * exp(-(t - 1) / 10) > 1
    recovery = 1 + math.ceil(10 * math.log(2.0))
    assert not z.activity[:, 1:recovery].any()
    assert z.activity[:, recovery].all()


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), tau=st.floats(2, 150), p=st.floats(0.1, 1.0))
def test_matches_explicit_sum(seed, tau, p):
    cfg = NetworkConfig(n_neurons=10, tau=tau, p_conn=p, w_inh=0.4, g_exc=0.3, k_exc=1.5, seed=seed)
    net = build_network(cfg)
    z, u = simulate(net, 50, return_membrane=True)
    ref_z, ref_u = explicit_membrane(net.weights, 1.0, tau, 1.0, 50)
    assert_array_equal(z.activity, ref_z)
    assert_allclose(u, ref_u, atol=1e-9, rtol=0)


def test_simulation_deterministic():
    net = build_network(NetworkConfig(n_neurons=200, seed=9))
    assert simulate(net, 100) == simulate(build_network(NetworkConfig(n_neurons=200, seed=9)), 100)
    with pytest.raises(ValueError):
        simulate(net, 0)


def test_pure_inhibition_bounded():
    cfg = NetworkConfig(n_neurons=100, p_conn=0.3, p_exc=0.0, w_inh=0.2, seed=1)
    assert cfg.p_conn * cfg.w_inh * cfg.n_neurons > cfg.external_input
    assert mean_firing_rate(simulate(build_network(cfg), 300)) < 1000


def test_gate():
    rng = np.random.default_rng(0)
    z = SpikeRaster(rng.random((3, 3)) < 0.5)
    m = SpikeRaster(rng.random((3, 3)) < 0.5)
    g = gate(z, m).activity
    for i in range(3):
        for t in range(3):
            assert g[i, t] == (z.activity[i, t] and m.activity[i, t])
    assert gate(z, SpikeRaster(np.ones((3, 3), bool))) == z
    assert gate(z, SpikeRaster.zeros(3, 3)).count() == 0
    with pytest.raises(ValueError):
        gate(z, SpikeRaster.zeros(3, 4))
    with pytest.raises(ValueError):
        gate(z, SpikeRaster.zeros(3, 3, dt=2.0))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gate_never_exceeds_operands(seed):
    rng = np.random.default_rng(seed)
    z = SpikeRaster(rng.random((6, 20)) < rng.random())
    m = SpikeRaster(rng.random((6, 20)) < rng.random())
    g = gate(z, m)
    assert np.all(g.activity <= z.activity) and np.all(g.activity <= m.activity)
    assert mean_firing_rate(g) <= min(mean_firing_rate(z), mean_firing_rate(m))


def test_mean_firing_rate():
    assert mean_firing_rate(SpikeRaster.zeros(4, 10)) == 0
    assert mean_firing_rate(SpikeRaster(np.ones((4, 10), bool))) == 1000
    half = np.zeros((4, 10), bool)
    half[:2] = True
    assert mean_firing_rate(SpikeRaster(half)) == 500
    assert mean_firing_rate(SpikeRaster(np.ones((4, 10), bool), dt=2.0)) == 500


def test_respond_identities():
    net = build_network(NetworkConfig(n_neurons=50, seed=5))
    assert respond(net, SpikeRaster.zeros(50, 80)).mean_rate == 0
    full = respond(net, SpikeRaster(np.ones((50, 80), bool)))
    assert full.mean_rate == mean_firing_rate(simulate(net, 80))
    with pytest.raises(ValueError):
        respond(net, SpikeRaster.zeros(49, 80))


def test_faster_motion_yields_higher_rate():
    for seed in range(5):
        net = build_network(NetworkConfig(seed=seed))
        fast = synthesize_motion(MotionSpec("f", 15, 0.5, 0.8, 0.0, seed), 900, 500)
        slow = synthesize_motion(MotionSpec("s", 5, 0.5, 0.8, 0.0, seed), 900, 500)
        rates = {m.motion_id: m.mean_rate for m in respond_all(net, {"f": fast, "s": slow})}
        assert rates["f"] > rates["s"]


def test_slow_preset_has_single_pattern():
    hits = 0
    for seed in range(5):
        cfg = NetworkConfig(seed=seed).with_band(ClockBand.SLOW)
        hits += estimate_clock_repetitions(similarity_matrix(simulate(build_network(cfg), 500))) == 1
    assert hits == 5


def test_respond_all_requires_equal_lengths():
    net = build_network(NetworkConfig(n_neurons=10, seed=0))
    with pytest.raises(ValueError):
        respond_all(net, {"a": SpikeRaster.zeros(10, 5), "b": SpikeRaster.zeros(10, 6)})
    assert respond_all(net, {}) == []
