"""Experiment runner command line.

Usage:
    funcint run --config path/to/cfg [--key value]...
    funcint list

Config files are flat key = value text (# starts a comment); command-line
--key value pairs override file entries.  FUNCINT_OUTPUT_DIR sets the
default output directory.

Exit status: 0 all metrics pass, 2 a metric failed, 1 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys

from funcint import experiments


class UsageError(Exception):
    pass


def parse_config_text(text: str) -> dict:
    """Flat key = value parser; later keys win."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _collect_overrides(pairs) -> dict:
    if len(pairs) % 2:
        raise UsageError("overrides must come in --key value pairs")
    out = {}
    for key, value in zip(pairs[::2], pairs[1::2]):
        if not key.startswith("--"):
            raise UsageError(f"expected an option name, got {key!r}")
        out[key[2:]] = value
    return out


def build_config(raw: dict) -> experiments.ExperimentConfig:
    raw = dict(raw)
    experiment = raw.pop("experiment", None)
    if not experiment:
        raise UsageError("config must name an experiment")
    try:
        seed = int(raw.pop("seed", "0"))
    except ValueError as exc:
        raise UsageError("seed must be an integer") from exc
    output_dir = raw.pop("output_dir", None) or os.environ.get("FUNCINT_OUTPUT_DIR") or "."
    return experiments.ExperimentConfig(experiment, raw, seed, output_dir)


def cmd_list() -> int:
    for name, schema, desc in experiments.list_experiments():
        keys = ", ".join(f"{k}:{t}" for k, t in schema.items())
        print(f"{name:14s} {desc}  [params: {keys}; seed; output_dir]")
    return 0


def cmd_run(config_path: str, overrides: dict) -> int:
    raw = {}
    if config_path:
        try:
            with open(config_path) as fh:
                raw = parse_config_text(fh.read())
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
    raw.update(overrides)
    config = build_config(raw)
    try:
        report = experiments.run(config)
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    except OSError as exc:
        raise UsageError(f"output directory problem: {exc}") from exc
    sys.stdout.write(report.render())
    print(f"wall_time_s {report.wall_time:.3f}")
    return 0 if report.passed else 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="funcint", add_help=True,
                                     description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command")
    runp = sub.add_parser("run", help="run one experiment")
    runp.add_argument("--config", default=None, help="key = value config file")
    sub.add_parser("list", help="list experiments and parameter schemas")
    args, extra = parser.parse_known_args(argv)
    try:
        if args.command == "list":
            if extra:
                raise UsageError("list takes no arguments")
            return cmd_list()
        if args.command == "run":
            return cmd_run(args.config, _collect_overrides(extra))
        parser.print_help()
        return 1
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
