"""Command-line runner: ``fockscatter --config run.yaml [--out DIR] [--seed N]``.

Writes ``manifest.json`` (echoed config and hypothesis report), one CSV per
trace and ``summary.txt``.  Exit codes: 0 all asserted checks pass, 1 some
check failed, 2 invalid config or violated precondition, 3 truncation cap or
truncation overflow.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .config import EXPERIMENTS, inert_symbols, load_config, validate
from .errors import (ConfigError, HypothesisViolation, PreconditionError, RecurrenceError,
                     TruncationCapError, TruncationOverflowError)
from .experiments import RUNNERS, run

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_TRUNCATION = 0, 1, 2, 3
CSV_COLUMNS = ("t", "value_re", "value_im", "cauchy_increment", "fitted_slope")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _slug(name):
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "trace"


def write_trace(path, trace):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in trace.rows():
            w.writerow([repr(float(x)) for x in row])


def _status(passed):
    return "info" if passed is None else ("PASS" if passed else "FAIL")


def summary_table(name, checks):
    rows = [("tag", "check", "value", "target", "status")]
    rows += [(c.tag, c.name, f"{c.value:.6g}", c.target, _status(c.passed)) for c in checks]
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    lines = [f"experiment: {name}"]
    for r in rows:
        lines.append("  ".join(s.ljust(w) for s, w in zip(r, widths)).rstrip())
    failed = sum(c.passed is False for c in checks)
    asserted = sum(c.passed is not None for c in checks)
    lines.append(f"{asserted - failed}/{asserted} asserted checks passed")
    return "\n".join(lines) + "\n"


def write_outputs(out, cfg, result):
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for name, trace in result.traces.items():
        fname = f"{_slug(name)}.csv"
        write_trace(out / fname, trace)
        files[name] = fname
    notes = []
    if cfg.model is not None and cfg.model.grid.get("dispersion") == "modified_massless":
        notes.append("modified dispersion: smooth interpolant on |k| < m, one admissible choice")
    manifest = {
        "version": __version__,
        "experiment": cfg.name,
        "seed": cfg.seed,
        "config": cfg.raw,
        "hypotheses": [{"name": h.name, "status": h.status, "detail": h.detail}
                       for h in result.hypotheses],
        "inert_symbols": inert_symbols(cfg),
        "notes": notes,
        "traces": files,
        "info": result.info,
        "checks": [{"tag": c.tag, "check": c.name, "value": c.value, "target": c.target,
                    "status": _status(c.passed)} for c in result.checks],
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    (out / "summary.txt").write_text(summary_table(cfg.name, result.checks), encoding="utf-8")


def list_checks():
    lines = []
    for name in EXPERIMENTS:
        lines.append(f"{name:12s} {RUNNERS[name][1]}")
    return "\n".join(lines)


def build_parser():
    p = argparse.ArgumentParser(prog="fockscatter", description=__doc__.splitlines()[0])
    p.add_argument("command", nargs="?", choices=("run",) + EXPERIMENTS,
                   help="'run' uses experiment.name from the config; a subcommand overrides it")
    p.add_argument("--config", metavar="PATH", help="YAML experiment config")
    p.add_argument("--out", metavar="DIR", help="output directory (default: output.dir or ./runs/<name>)")
    p.add_argument("--seed", type=int, metavar="N", help="override the config seed")
    p.add_argument("--threads", type=int, metavar="N", help="BLAS thread limit")
    p.add_argument("--list-checks", action="store_true", help="list subcommands and exit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.list_checks:
        print(list_checks())
        return EXIT_OK
    if not args.config:
        print("error: --config is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        if args.command not in (None, "run") and args.command != cfg.name:
            raw = dict(cfg.raw)
            raw["experiment"] = {**raw["experiment"], "name": args.command}
            cfg = validate(raw)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            cfg = replace(cfg, seed=args.seed, raw={**cfg.raw, "seed": args.seed})
        out = Path(args.out or cfg.output_dir or Path("runs") / cfg.name)
        with threadpool_limits(limits=args.threads):
            result = run(cfg)
    except (TruncationCapError, TruncationOverflowError) as exc:
        print(f"truncation error: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    except RecurrenceError as exc:
        print(f"recurrence error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, HypothesisViolation, PreconditionError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    write_outputs(out, cfg, result)
    sys.stdout.write(summary_table(cfg.name, result.checks))
    for c in result.failures:
        print(f"FAILED [{c.tag}] {c.name}: {c.value:.6g} (target {c.target})", file=sys.stderr)
    return EXIT_FAIL if result.failures else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
