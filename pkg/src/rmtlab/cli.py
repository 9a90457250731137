"""Command line entry point ``lab``.

Exit codes: 0 when every gated metric passes, 1 when any fails (or the run
raised a numeric error), 2 for configuration problems.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .runner import EXPERIMENTS, ConfigError, OutputError, load_config, run_experiment, write_outputs

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _default_workers() -> int:
    raw = os.environ.get("LAB_WORKERS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"LAB_WORKERS must be an integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError("LAB_WORKERS must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lab", description="Run random-matrix experiments from config files")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config", type=Path)
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--workers", type=int, default=None, help="worker threads (default: env LAB_WORKERS or 1)")
    run.add_argument("--output-dir", type=Path, default=None, help="override output_dir")
    run.add_argument("--plots", action="store_true", help="also write plots/*.svg")

    sub.add_parser("list-experiments", help="list experiment names and parameters")

    val = sub.add_parser("validate", help="check a config file without running it")
    val.add_argument("config", type=Path)
    return p


def _list() -> None:
    for name, exp in EXPERIMENTS.items():
        print(f"{name}: {exp.anchor}")
        for key, spec in exp.params.items():
            default = "(required)" if spec.required else repr(spec.default)
            print(f"    {key} = {default}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-experiments":
        _list()
        return EXIT_OK
    try:
        cfg = load_config(args.config)
        if args.command == "validate":
            print(f"{args.config}: ok ({cfg.experiment}, seed {cfg.seed}, hash {cfg.config_hash()[:12]})")
            return EXIT_OK
        workers = args.workers if args.workers is not None else _default_workers()
        if workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = cfg.with_overrides(seed=args.seed, output_dir=args.output_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    report = run_experiment(cfg, workers=workers)
    for line in report.summary_lines():
        print(line)
    out_dir = cfg.output_dir or Path("runs") / f"{cfg.experiment}-seed{cfg.seed}"
    try:
        manifest = write_outputs(report, out_dir, plots=args.plots)
    except OutputError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(f"wrote {len(manifest) + 1} files to {out_dir} ({report.wall_clock:.1f} s)")
    print("PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
