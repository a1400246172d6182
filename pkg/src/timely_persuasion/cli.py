"""Command-line entry point: ``timely-persuasion <command> --config cfg.json``.

Exit codes: 0 success, 2 config/validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import experiments
from .config import load_config
from .errors import NumericalError, ValidationError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def fmt_value(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    writer = csv.writer(buf, lineterminator="\n")
    header = list(rows[0])
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_value(row[key]) for key in header])
    return buf.getvalue()


def to_json(payload) -> str:
    # json uses repr() for floats, which round-trips exactly
    return json.dumps(payload, indent=2) + "\n"


def _emit(text: str, output: str | None):
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _side_path(output: str, suffix: str) -> Path:
    path = Path(output)
    return path.with_name(f"{path.stem}_{suffix}{path.suffix}")


def cmd_solve(args, config):
    report = experiments.run_solve(config)
    if args.format == "csv":
        rows = [
            {**{k: v for k, v in src.items()}, "active": src["index"] in report["active_set"]}
            for src in report["sources"]
        ]
        _emit(to_csv(rows), args.output)
    else:
        _emit(to_json(report), args.output)


def cmd_sweep_budget(args, config):
    rows, boundaries = experiments.sweep_budget(config, threads=args.threads)
    if args.format == "json":
        _emit(to_json({"rows": rows, "boundaries": boundaries}), args.output)
        return
    _emit(to_csv(rows), args.output)
    text = to_csv(boundaries)
    if args.output is None:
        sys.stderr.write(text)
    else:
        _side_path(args.output, "boundaries").write_text(text)


def cmd_sweep_heterogeneity(args, config):
    rows = experiments.sweep_heterogeneity(config, threads=args.threads)
    _emit(to_json({"rows": rows}) if args.format == "json" else to_csv(rows), args.output)


def cmd_simulate(args, config):
    report = experiments.run_simulate(config, seed=args.seed, threads=args.threads)
    if args.format == "json":
        _emit(to_json(report), args.output)
        return
    rows = []
    for run in report["runs"]:
        p00, p01, p10, p11 = run["occupancy"]
        rows.append({
            "engine": run["engine"],
            "replication": run["replication"],
            "seed": run["seed"],
            "horizon": run["horizon"],
            "events": run["events"],
            "p00": p00,
            "p01": p01,
            "p10": p10,
            "p11": p11,
            "sender_utility_hat": run["sender_utility_hat"],
            "receiver_utility_hat": run["receiver_utility_hat"],
        })
    _emit(to_csv(rows), args.output)


def cmd_oracle(args, config):
    report = experiments.run_oracle(config)
    if args.format == "json":
        _emit(to_json(report), args.output)
        return
    row = {k: v for k, v in report.items() if k != "oracle_policy"}
    for i, rates in enumerate(report["oracle_policy"]):
        row[f"s_{i + 1}"] = rates["s"]
        row[f"c_{i + 1}"] = rates["c"]
    _emit(to_csv([row]), args.output)


COMMANDS = {
    "solve": (cmd_solve, "json", "equilibrium policy for the configured instance"),
    "sweep-budget": (cmd_sweep_budget, "csv", "sweep the total budget and report active-set regions"),
    "sweep-heterogeneity": (cmd_sweep_heterogeneity, "csv", "sweep the mu-heterogeneity parameter k"),
    "simulate": (cmd_simulate, "json", "Monte-Carlo check of one source's occupancy"),
    "oracle": (cmd_oracle, "json", "brute-force grid check of the solver"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="timely-persuasion", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, default_format, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to a JSON config")
        p.add_argument("--output", help="write here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default=default_format)
        p.add_argument("--seed", type=int, default=None, help="override the simulation seed")
        p.add_argument("--threads", type=int, default=1)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = COMMANDS[args.command][0]
    try:
        if args.seed is not None and args.seed < 0:
            raise ValidationError("--seed must be >= 0")
        if args.threads < 1:
            raise ValidationError("--threads must be >= 1")
        try:
            config = load_config(args.config)
        except OSError as exc:
            raise ValidationError(f"cannot read config: {exc}") from exc
        handler(args, config)
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
