"""``qpump`` command line: validate, run, sweep and dump model configs.

Exit codes: 0 success, 1 validation/model failure (or a failed identity
check), 2 usage or parse failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings

from . import __version__
from .config import dump_config, load_config, read_document
from .errors import ConfigError, InvalidModelError
from .model import prepare, validate
from .otm import _otm_report
from .sweep import format_value, grid, run_sweep, write_csv
from .ttm import _ttm_report

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qpump", description="Exchange fluctuation theorems for energy-conserving quantum pumps.")
    parser.add_argument("--version", action="version", version=f"qpump {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("config", help="model config JSON (or a bundled name: xy3.json, exchange2.json, nonconserving2.json)")
        p.add_argument("--conservation", choices=("error", "warn"), default=None,
                       help="override options.conservation; 'warn' admits non-conserving models for TTM only")

    p = sub.add_parser("validate", help="check a model config")
    common(p)

    p = sub.add_parser("run", help="compute TTM and/or OTM reports")
    common(p)
    p.add_argument("--scheme", choices=("ttm", "otm", "both"), default="both")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")

    p = sub.add_parser("sweep", help="sweep a named parameter and write a CSV")
    common(p)
    p.add_argument("--param", required=True)
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True, help="output CSV path ('-' for stdout)")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("dump", help="print the parsed model with explicit matrices")
    common(p)
    return parser


def _check_line(c) -> str:
    status = "PASS" if c.passed else "FAIL"
    if c.tolerance == 0 and c.violation == 0:
        return f"{status}  {c.name}"
    return f"{status}  {c.name}  (value {format_value(c.violation)}, tol {c.tolerance:g})"


def cmd_validate(args, out) -> int:
    loaded = load_config(args.config, conservation=args.conservation)
    report = validate(loaded.model)
    for c in report.checks:
        line = _check_line(c)
        if c.detail:
            line += f"  [{c.detail}]"
        print(line, file=out)
    for j in report.degenerate_subsystems:
        print(f"NOTE  subsystem {j} has a degenerate spectrum; canonical eigenbasis used", file=out)
    if report.ok:
        print("model valid", file=out)
        return EXIT_OK
    if report.usable_for("ttm", loaded.model.conservation):
        print("WARN  energy conservation violated; model accepted for TTM only", file=out)
        return EXIT_OK
    names = ", ".join(c.name for c in report.failures)
    print(f"model invalid: {names}", file=out)
    return EXIT_INVALID


def _run_reports(loaded, scheme: str) -> dict:
    need = "ttm" if scheme == "ttm" else "otm"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        prep = prepare(loaded.model, need)
    reports = {}
    if scheme in ("ttm", "both"):
        reports["ttm"] = _ttm_report(prep, loaded.options.merge_tol, loaded.options.drop_tol)
    if scheme in ("otm", "both"):
        reports["otm"] = _otm_report(prep, loaded.options.merge_tol)
    return reports


def _flatten(prefix: str, value):
    if isinstance(value, dict):
        for k, v in value.items():
            yield from _flatten(f"{prefix}.{k}", v)
    elif isinstance(value, (list, tuple)):
        for i, v in enumerate(value):
            yield from _flatten(f"{prefix}[{i}]", v)
    else:
        yield prefix, value


def _fmt(v) -> str:
    if isinstance(v, float):
        return format_value(v)
    return str(v)


def cmd_run(args, out) -> int:
    loaded = load_config(args.config, conservation=args.conservation)
    reports = _run_reports(loaded, args.scheme)
    checks = [c for r in reports.values() for c in r.checks()]
    model = loaded.model

    if args.format == "json":
        doc = {name: r.as_dict() for name, r in reports.items()}
        doc["checks"] = [
            {"name": c.name, "passed": c.passed, "value": c.violation, "tolerance": c.tolerance} for c in checks
        ]
        json.dump(doc, out, indent=2)
        out.write("\n")
    elif args.format == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(("field", "value"))
        for name, r in reports.items():
            for key, value in _flatten(name, r.as_dict()):
                writer.writerow((key, _fmt(value)))
        for c in checks:
            writer.writerow((f"check.{c.name}", "PASS" if c.passed else "FAIL"))
    else:
        print(f"model: n={model.n} dims={list(model.dims)} beta={list(model.beta)} "
              f"tau={format_value(model.tau)} segments={len(model.segments)}", file=out)
        print("avg_heat is the exchanged energy per subsystem (called heat by convention)", file=out)
        for name, r in reports.items():
            print(f"[{name.upper()}]", file=out)
            for key, value in _flatten(name, r.as_dict()):
                print(f"  {key} = {_fmt(value)}", file=out)
        print("checks:", file=out)
        for c in checks:
            print("  " + _check_line(c), file=out)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_INVALID


def cmd_sweep(args, out) -> int:
    document = read_document(args.config)
    try:
        values = grid(args.start, args.stop, args.count)
    except ValueError as exc:
        raise ConfigError("sweep", str(exc)) from None
    try:
        rows = run_sweep(document, args.param, values, args.jobs, args.conservation)
    except ConfigError as exc:
        if exc.location == args.param:
            print(f"qpump: {exc}", file=sys.stderr)
            return EXIT_INVALID
        raise
    buf = io.StringIO()
    write_csv(rows, buf)
    if args.out == "-":
        out.write(buf.getvalue())
    else:
        with open(args.out, "w", newline="") as f:
            f.write(buf.getvalue())
        print(f"wrote {len(rows)} rows to {args.out}", file=out)
    return EXIT_OK


def cmd_dump(args, out) -> int:
    loaded = load_config(args.config, conservation=args.conservation)
    json.dump(dump_config(loaded.model, loaded.options), out, indent=1)
    out.write("\n")
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "run": cmd_run, "sweep": cmd_sweep, "dump": cmd_dump}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args, out)
    except ConfigError as exc:
        print(f"qpump: config error at {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidModelError as exc:
        print(f"qpump: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
