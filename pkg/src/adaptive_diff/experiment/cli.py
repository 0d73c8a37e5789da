"""
``adaptive-diff`` command line.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

from ..control_sim import DERIVATIVE_SOURCES
from ..exceptions import ConfigError
from .bench import differentiate_table, run_benchmark, simulate_pid, write_diff, write_trace
from .config import builtin_config, load_config
from .io import CsvFormatError, load_signal_csv, write_signal_csv
from .trajectories import KINDS, synth_trajectory

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _load(spec: str):
    """A file path, or ``builtin:<name>`` for a shipped config."""
    if spec.startswith("builtin:"):
        try:
            return builtin_config(spec.split(":", 1)[1])
        except FileNotFoundError:
            raise ConfigError(f"no builtin config {spec!r}") from None
    try:
        return load_config(spec)
    except OSError as exc:
        raise ConfigError(f"cannot read config {spec!r}: {exc}") from None


def _methods(text: str) -> list[str]:
    methods = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in methods if m not in DERIVATIVE_SOURCES]
    if bad or not methods:
        raise ConfigError(f"--methods: unknown method(s) {bad}; expected from {DERIVATIVE_SOURCES}")
    return methods


def cmd_diff(args) -> int:
    cfg = _load(args.config)
    try:
        table = load_signal_csv(args.input)
    except CsvFormatError as exc:
        print(f"{args.input}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    write_diff(args.output, differentiate_table(cfg, table, args.method))
    return EXIT_OK


def cmd_pid(args) -> int:
    cfg = _load(args.config)
    trace = simulate_pid(cfg, args.method, args.seed, noisy=not args.no_noise)
    write_trace(args.output, trace)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _load(args.config)
    methods = _methods(args.methods) if args.methods else None
    report = run_benchmark(cfg, methods, args.seeds, workers=args.workers)
    report.write(args.output)
    for m, s in report.summary().items():
        print(f"{m:10s} mean={s['mean']:.4f} min={s['min']:.4f} max={s['max']:.4f} failed={s['failed']}")
    return EXIT_RUNTIME if report.failures() else EXIT_OK


def cmd_synth(args) -> int:
    traj = synth_trajectory(args.kind, args.n, args.ts, args.seed, None if args.clean else args.snr)
    write_signal_csv(args.output, traj.table())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adaptive-diff", description="Adaptive causal differentiation experiments")
    sub = p.add_subparsers(dest="command", required=True)
    cfg_help = "config file, or builtin:example1 / builtin:example2"

    d = sub.add_parser("diff", help="differentiate a t,y CSV signal")
    d.add_argument("--input", required=True)
    d.add_argument("--config", required=True, help=cfg_help)
    d.add_argument("--method", required=True, choices=DERIVATIVE_SOURCES)
    d.add_argument("--output", required=True)
    d.set_defaults(func=cmd_diff)

    c = sub.add_parser("pid", help="simulate one closed-loop run and write its trace")
    c.add_argument("--config", required=True, help=cfg_help)
    c.add_argument("--method", required=True, choices=DERIVATIVE_SOURCES)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--output", required=True)
    c.add_argument("--no-noise", action="store_true")
    c.set_defaults(func=cmd_pid)

    b = sub.add_parser("bench", help="Monte Carlo closed-loop benchmark")
    b.add_argument("--config", required=True, help=cfg_help)
    b.add_argument("--methods", help="comma-separated; defaults to run.methods")
    b.add_argument("--seeds", type=int, help="number of seeds 0..N-1; defaults to run.seeds")
    b.add_argument("--output", required=True, help="output directory")
    b.add_argument("--workers", type=int, help="process count (default: CPUs, capped by ADAPTIVE_DIFF_THREADS)")
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("synth", help="write a synthetic noisy trajectory as t,y CSV")
    s.add_argument("--kind", required=True, choices=KINDS)
    s.add_argument("--n", type=int, default=3000)
    s.add_argument("--ts", type=float, default=0.01)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--snr", type=float, default=40.0, help="target SNR in dB")
    s.add_argument("--clean", action="store_true", help="no noise")
    s.add_argument("--output", required=True)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
