"""Acceptance suite.  Each test carries a ``criterion`` marker; a summary line
per criterion is printed at the end of the pytest run."""
import dataclasses
import filecmp
import random
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from clocksnn.clock import ClockBand, estimate_clock_repetitions, similarity_index, similarity_matrix
from clocksnn.datasets import FrameSequence, MotionSpec, synthesize_motion
from clocksnn.encoder import EncoderConfig, encode
from clocksnn.experiment import ExperimentConfig, network_config, pick_trace, run_repro, synthetic_training_sources, load_motion, teaching_from_sources
from clocksnn.network import MotionMeasurement, NetworkConfig, build_network, respond, simulate
from clocksnn.raster import SpikeRaster
from clocksnn.training import TeachingSignal, TrainingConfig, nddp_step, rank_error, train

from oracles import cosine, encode_loops, explicit_membrane

pytestmark = pytest.mark.acceptance


@pytest.mark.criterion(1, "incremental simulation equals explicit double sum")
def test_c1_simulation_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    for i in range(10):
        cfg = NetworkConfig(
            n_neurons=10,
            tau=float(rng.uniform(5, 100)),
            k_exc=float(rng.uniform(0.1, 2.5)),
            w_inh=float(rng.uniform(0.05, 1.0)),
            g_exc=float(rng.uniform(0.05, 1.0)),
            p_conn=float(rng.uniform(0.2, 0.9)),
            seed=i,
        )
        net = build_network(cfg)
        z, u = simulate(net, 50, return_membrane=True)
        ref_z, ref_u = explicit_membrane(net.weights, cfg.external_input, cfg.tau, cfg.dt, 50)
        assert_array_equal(z.activity, ref_z)
        assert_allclose(u, ref_u, rtol=0, atol=1e-9)
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.criterion(2, "similarity index bounds, symmetry, diagonal, hand value, silent columns")
def test_c2_similarity_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    a = rng.random((12, 30)) < 0.3
    a[:, 5] = False
    z = SpikeRaster(a)
    M = similarity_matrix(z).values
    assert M.min() >= 0.0 and M.max() <= 1.0
    assert np.array_equal(M, M.T)
    nonzero = a.any(axis=0)
    assert np.all(np.diag(M)[nonzero] == 1.0)
    assert np.all(M[5] == 0.0) and np.all(M[:, 5] == 0.0)
    for t1 in range(30):
        for t2 in range(30):
            assert M[t1, t2] == pytest.approx(cosine(a[:, t1], a[:, t2]), abs=1e-15)
    hand = SpikeRaster(np.array([[1, 1], [1, 0], [0, 1]]))
    assert similarity_index(hand, 0, 1) == 0.5
    assert similarity_index(hand, 0, 0) == 1.0
    silent = SpikeRaster(np.array([[0, 1], [0, 1]]))
    assert similarity_index(silent, 0, 1) == 0.0
    assert similarity_index(silent, 0, 0) == 0.0
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.criterion(3, "encoder equals direct triple loop; static scenes encode to nothing")
def test_c3_encoder_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    for i in range(20):
        frames = rng.integers(0, 256, size=(8, 6, 6), dtype=np.uint8)
        ds = 1 + i % 2
        cfg = EncoderConfig(delta_s=ds, delta_t=1 + i % 3, pixel_threshold=float(rng.integers(0, 80)),
                            grid_rows=3, grid_cols=3)
        seq = FrameSequence(6, 6, frames, fps_num=25)
        rep = encode(seq, cfg, duration=320)
        ref = encode_loops(frames, 25, ds, cfg.delta_t, cfg.pixel_threshold, 3, 3, 1.0, 320)
        assert_array_equal(rep.raster.activity, ref)
        assert rep.total_bits == int(ref.sum())
        static = FrameSequence(6, 6, np.repeat(frames[:1], 8, axis=0), fps_num=25)
        assert encode(static, cfg, duration=320).total_bits == 0
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.criterion(4, "clock repetitions non-decreasing Slow to UltraFast, Slow = 1, on >= 8/10 seeds")
def test_c4_band_ordering():
    t0 = time.perf_counter()
    ok = 0
    for seed in range(10):
        base = NetworkConfig(n_neurons=900, seed=seed, dt=1.0)
        reps = [
            estimate_clock_repetitions(similarity_matrix(simulate(build_network(base.with_band(b)), 500)))
            for b in ClockBand
        ]
        ok += reps[0] == 1 and all(x <= y for x, y in zip(reps, reps[1:]))
    assert ok >= 8
    assert time.perf_counter() - t0 < 60.0


def _teaching():
    ids = ["a", "b", "c", "d", "e", "f"]
    return TeachingSignal.from_lists(ids, [15, 15, 10, 10, 5, 5], [6, 6, 3, 3, 1, 1], 5.0)


def _measure(ids, rates):
    return [MotionMeasurement(i, r) for i, r in zip(ids, rates)]


@pytest.mark.criterion(5, "rank/gap error values 0, 1 and 6")
def test_c5_rank_error_values():
    t0 = time.perf_counter()
    ts = _teaching()
    ids = ts.motion_ids
    assert rank_error(ts, _measure(ids, [60, 58, 40, 38, 20, 18])) == 0
    assert rank_error(ts, _measure(ids, [60, 58, 40, 38, 35, 18])) == 1
    # one weight-6 motion and one weight-3 motion trade places
    assert rank_error(ts, _measure(ids, [80, 40, 60, 20, 10, 4])) == 6
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.criterion(6, "k update branches exact; ceiling 2.5 never exceeded")
def test_c6_nddp_mechanics():
    t0 = time.perf_counter()
    cfg = TrainingConfig(delta=0.001)
    assert abs(nddp_step(1.0, 5, 3, cfg) - 0.999) <= 1e-12
    assert abs(nddp_step(1.0, 2, 3, cfg) - 1.001) <= 1e-12
    assert nddp_step(2.5, 2, 3, cfg) == 2.5
    rng = random.Random(3)
    for _ in range(10_000):
        c = TrainingConfig(delta=rng.uniform(0.001, 0.5))
        k = rng.uniform(c.k_min, c.k_max)
        for _ in range(5):
            k = nddp_step(k, rng.randint(0, 6), rng.randint(0, 6), c)
            assert c.k_min <= k <= 2.5
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.criterion(7, "synthetic end-to-end: convergence and held-out accuracy >= 0.8 on >= 4/5 seeds")
def test_c7_end_to_end(tmp_path):
    t0 = time.perf_counter()
    good = 0
    for seed in range(5):
        root = tmp_path / f"s{seed}"
        root.mkdir()
        s = run_repro(ExperimentConfig(seed=seed), root)
        assert s["selected_bands"]
        good += bool(s["converged"]) and s["accuracy"] is not None and s["accuracy"] >= 0.8
    assert good >= 4
    assert time.perf_counter() - t0 < 300.0


@pytest.mark.criterion(8, "trained network rates a 15 Hz motion above a 5 Hz motion on 5/5 seeds")
def test_c8_rate_monotonicity():
    t0 = time.perf_counter()
    for seed in range(5):
        cfg = ExperimentConfig(seed=seed)
        sources = synthetic_training_sources(cfg)
        ts = teaching_from_sources(sources, cfg.f_base)
        traces = train(ts, [load_motion(s, cfg) for s in sources], network_config(cfg), cfg.training)
        trace = pick_trace(traces, ts)
        assert trace is not None
        net = build_network(dataclasses.replace(network_config(cfg).with_band(trace.band), k_exc=trace.final_k))
        for fraction in (1.0, 0.5):
            fast = synthesize_motion(MotionSpec("fast", 15, 0.5, fraction, 0.0, seed), 900, 500)
            slow = synthesize_motion(MotionSpec("slow", 5, 0.5, fraction, 0.0, seed), 900, 500)
            assert respond(net, fast).mean_rate > respond(net, slow).mean_rate
    assert time.perf_counter() - t0 < 30.0


def _tree(root: Path) -> dict[str, bytes]:
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.mark.criterion(9, "repro-synthetic output trees byte-identical across runs and thread counts")
def test_c9_cli_determinism(tmp_path):
    t0 = time.perf_counter()
    trees = []
    for name, threads in (("a", 1), ("b", 1), ("c", 8)):
        out = tmp_path / name
        proc = subprocess.run(
            [sys.executable, "-m", "clocksnn", "repro-synthetic", "--seed", "42", "--out", str(out),
             "--threads", str(threads)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        trees.append(_tree(out))
    assert trees[0] and trees[0] == trees[1] == trees[2]
    assert not filecmp.dircmp(tmp_path / "a", tmp_path / "c").diff_files
    assert time.perf_counter() - t0 < 600.0
