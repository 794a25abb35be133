"""``kamlab <command> [--config PATH] [--seed N] [--workers N] [--out DIR] [--verbose]``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
import traceback
from pathlib import Path

from .commands import COMMANDS, run_driver
from .config import ConfigError, ExperimentConfig, load_config
from .report import emit_report

log = logging.getLogger("kamlab")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kamlab", description="Counterterm KAM laboratory")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="JSON or YAML experiment file")
    ap.add_argument("--seed", type=int, help="overrides run.seed")
    ap.add_argument("--workers", type=int, help="worker threads (fallback: KAMLAB_WORKERS)")
    ap.add_argument("--out", type=Path, help="report directory (overrides output.dir)")
    ap.add_argument("--verbose", action="store_true")
    return ap


def resolve(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, run=dataclasses.replace(cfg.run, seed=args.seed))
    workers = args.workers
    if workers is None and os.environ.get("KAMLAB_WORKERS"):
        try:
            workers = int(os.environ["KAMLAB_WORKERS"])
        except ValueError:
            raise ConfigError("KAMLAB_WORKERS", "must be an integer") from None
    if workers is not None:
        if workers < 1:
            raise ConfigError("workers", "must be at least 1")
        cfg = dataclasses.replace(cfg, workers=workers)
    if args.out is not None:
        cfg = dataclasses.replace(cfg, output=dataclasses.replace(cfg.output, dir=str(args.out)))
    return cfg


def run_command(cmd: str, cfg: ExperimentConfig) -> int:
    """Run one pipeline, write ``<cmd>.json`` plus its CSV tables; 0 iff every assertion held."""
    out = Path(cfg.output.dir)
    report = {"command": cmd, "config": cfg.to_json()}
    try:
        outcome = run_driver(cmd, cfg)
    except Exception as exc:  # reported, not raised: the exit code carries the failure
        log.debug("%s", traceback.format_exc())
        report.update(status="error", error={"type": type(exc).__name__, "message": str(exc)})
        emit_report(report, "json", out / f"{cmd}.json")
        log.error("%s failed: %s", cmd, exc)
        return 2
    for name, (header, rows) in outcome.tables.items():
        emit_report(rows, "csv", out / name, header=header)
    report.update(
        status="ok" if outcome.passed else "failed",
        assertions=outcome.assertions,
        result=outcome.result,
        tables=sorted(outcome.tables),
    )
    emit_report(report, "json", out / f"{cmd}.json")
    for name, ok in sorted(outcome.assertions.items()):
        log.info("%s: %s", name, "pass" if ok else "FAIL")
    return 0 if outcome.passed else 1


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
    except (ConfigError, OSError, ValueError) as exc:
        log.error("invalid configuration: %s", exc)
        return 2
    return run_command(args.command, cfg)


if __name__ == "__main__":
    sys.exit(main())
