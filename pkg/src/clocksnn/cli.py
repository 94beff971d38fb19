"""Command-line entry point: ``clocksnn <subcommand> [flags]``.

Exit status is 0 on success, 1 for an invalid configuration or a runtime
failure, and 2 for usage errors such as an unknown subcommand.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .clock import ClockBand
from .experiment import (
    ConfigError,
    ExperimentConfig,
    atomic_output,
    load_config,
    run_encode,
    run_infer,
    run_repro,
    run_similarity,
    run_simulate,
    run_train,
    write_manifest,
)
from .raster import read_raster

DEFAULTS_HELP = f"""\
configuration defaults (JSON keys, override any subset with --config):
  network:  n_neurons=900 module_size=1 tau=100 k_exc=1.0 external_input=1.0
            p_conn=0.2 p_exc=0.5 dt=1.0 w_inh=0.1/(p_conn*n_neurons) g_exc=0.1*w_inh
  encoder:  delta_s=4 delta_t=1 pixel_threshold=16 grid_rows=30 grid_cols=30 dt=1.0
  training: delta=0.05 max_trials=200 k_min=0.01 k_max=2.5
  synthetic: groups fast/medium/slow at 15/10/5 Hz, rank weights 6/3/1,
            2 training and 6 held-out motions per group
  seed=0 duration_ms=500 f_base=5 theta_rep={ExperimentConfig.theta_rep} min_separation={ExperimentConfig.min_separation}
The network seed is always derived from the master seed (--seed).
"""


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON experiment configuration (or a previous manifest.json)")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--out", type=Path, required=True, help="output directory, replaced on success")
    p.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clocksnn",
        description="Internal-clock spiking network: encode, simulate, train and classify motion speed.",
        epilog=DEFAULTS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")

    p = sub.add_parser("encode", help="encode a frame container into a motion raster")
    _common(p)
    p.add_argument("--input", type=Path, required=True, help="frame container file")

    p = sub.add_parser("simulate", help="simulate the network and export raster and similarity")
    _common(p)
    p.add_argument("--band", help="apply a clock-band preset (Slow, Middle, Fast, UltraFast)")

    p = sub.add_parser("similarity", help="similarity matrix and clock repetitions of a raster")
    _common(p)
    p.add_argument("--input", type=Path, required=True, help="raster CSV with its JSON sidecar")

    p = sub.add_parser("train", help="select a clock band and tune k on the teaching motions")
    _common(p)

    p = sub.add_parser("infer", help="classify test motions with a trained model")
    _common(p)
    p.add_argument("--model", type=Path, required=True, help="model.json written by 'train'")

    p = sub.add_parser("repro-synthetic", help="full synthetic train/evaluate pipeline")
    _common(p)
    return parser


def _execute(args, cfg: ExperimentConfig, root: Path) -> dict:
    cmd = args.command
    if cmd == "encode":
        return run_encode(cfg, args.input, root)
    if cmd == "simulate":
        band = ClockBand.parse(args.band) if args.band else None
        return run_simulate(cfg, root, band)
    if cmd == "similarity":
        return {"repetitions": run_similarity(cfg, read_raster(args.input), root)}
    if cmd == "train":
        return run_train(cfg, root, args.threads)
    if cmd == "infer":
        model = json.loads(args.model.read_text())
        return run_infer(cfg, model, root, args.threads)
    if cmd == "repro-synthetic":
        return run_repro(cfg, root, args.threads)
    raise AssertionError(cmd)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(["--seed must be a non-negative integer"])
            cfg = replace(cfg, seed=args.seed)
    except ConfigError as exc:
        print("invalid configuration:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return 1
    try:
        with atomic_output(args.out) as root:
            result = _execute(args, cfg, root)
            write_manifest(root, args.command, cfg)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(result, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
