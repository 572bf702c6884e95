"""Command-line entry point: ``rus-sim --experiment NAME [options]``.

Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 invalid configuration,
3 output path not writable.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import yaml

from .experiments import (
    EXPERIMENTS, FORMATS, ConfigError, ExperimentConfig, ResultEnvelope,
    run_experiment,
)

log = logging.getLogger("rus_sim")

EXIT_OK, EXIT_VERDICT, EXIT_CONFIG, EXIT_OUTPUT = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rus-sim", description=__doc__.splitlines()[0])
    # defaults stay None so that config-file values are only overridden by
    # flags that were actually given
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--input-state",
                   help="random | bell | product | four comma-separated complex "
                        "amplitudes, e.g. 0.5,0.5j,0.5,-0.5")
    p.add_argument("--output", help="output file (stdout when omitted)")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--config", help="JSON or YAML file with the same keys")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config_file(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        if str(path).endswith((".yaml", ".yml")):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a mapping")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _input_state_flag(text: str):
    if text in ("random", "bell", "product"):
        return text
    return [t.strip() for t in text.split(",")]


def parse_config(args, file=None) -> ExperimentConfig:
    """Merge defaults, an optional config document and command-line flags.

    Flags win over the file; the file wins over the defaults.
    """
    ns = build_parser().parse_args(args)
    values = {}
    file = file or ns.config
    if file is not None:
        values.update(load_config_file(file))
    flags = {
        "experiment": ns.experiment, "seed": ns.seed, "trials": ns.trials,
        "eta": ns.eta, "output_path": ns.output, "format": ns.format,
        "input_state": None if ns.input_state is None else _input_state_flag(ns.input_state),
    }
    values.update({k: v for k, v in flags.items() if v is not None})
    if "output" in values:
        values["output_path"] = values.pop("output")
    unknown = set(values) - set(ExperimentConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "experiment" not in values:
        raise ConfigError("no experiment given (--experiment)")
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def tables_to_csv(payload: dict) -> str:
    """All payload tables as one RFC 4180 document with a ``table`` column."""
    tables = payload.get("tables", {})
    columns = ["table"]
    for rows in tables.values():
        for row in rows:
            columns += [c for c in row if c not in columns]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\r\n")
    writer.writeheader()
    for name, rows in tables.items():
        for row in rows:
            writer.writerow({"table": name, **{
                k: json.dumps(v) if isinstance(v, (list, dict)) else v
                for k, v in row.items()}})
    return buf.getvalue()


def writable(path) -> bool:
    path = Path(path)
    if path.exists():
        return path.is_file() and os.access(path, os.W_OK)
    parent = path.parent
    return parent.is_dir() and os.access(parent, os.W_OK)


def render(envelope: ResultEnvelope, fmt: str) -> str:
    return envelope.to_json() if fmt == "json" else tables_to_csv(envelope.payload)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    logging.basicConfig(level=logging.INFO if "-v" in argv or "--verbose" in argv
                        else logging.WARNING, format="%(message)s")
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"rus-sim: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.output_path and not writable(cfg.output_path):
        print(f"rus-sim: cannot write {cfg.output_path}", file=sys.stderr)
        return EXIT_OUTPUT

    envelope = run_experiment(cfg)
    text = render(envelope, cfg.format)
    if cfg.output_path:
        try:
            with open(cfg.output_path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"rus-sim: cannot write {cfg.output_path}: {exc}", file=sys.stderr)
            return EXIT_OUTPUT
    else:
        sys.stdout.write(text)

    for v in envelope.verdicts:
        log.info("%-4s %s: %r (expected %r +/- %r)", "PASS" if v["passed"] else "FAIL",
                 v["name"], v["observed"], v["expected"], v["tolerance"])
    failed = [v["name"] for v in envelope.verdicts if not v["passed"]]
    if failed:
        print(f"rus-sim: {len(failed)} verdict(s) failed: {', '.join(failed)}",
              file=sys.stderr)
        return EXIT_VERDICT
    return EXIT_OK
