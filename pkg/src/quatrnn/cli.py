"""Command-line entry point: ``quatrnn {gridsearch,evaluate,benchmark,synth,plotdata}``.

Every command writes under ``--out DIR/<command>/`` and finishes with a
``manifest.json`` listing the artifacts and the resolved configuration.

Exit codes: 0 success, 2 usage or configuration error, 3 data error,
4 numerical failure, 5 I/O error, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, harness
from .errors import (ConfigError, DegenerateChannel, DegenerateTruth, InsufficientSamples, MissingColumns,
                     NonFiniteError, NonFiniteLoss, NonUniformSampling, ParseError, SeriesTooShort)

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4, 5

DATA_ERRORS = (ParseError, NonUniformSampling, MissingColumns, DegenerateChannel, DegenerateTruth,
               SeriesTooShort, InsufficientSamples)

# per-step budget of roughly one marker-position update of the tracking hardware
STEP_BUDGET_MS = 400.0

log = logging.getLogger("quatrnn")


def _write(out: Path, name: str, text: str, artifacts: list):
    path = out / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    artifacts.append(name)


def _manifest(out: Path, command: str, cfg, artifacts: list, extra: dict | None = None):
    doc = {"command": command, "version": __version__, "config": cfg.to_dict(),
           "artifacts": sorted(artifacts)}
    if extra:
        doc.update(extra)
    (out / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")


def cmd_gridsearch(cfg, out: Path) -> int:
    res = harness.gridsearch(cfg)
    artifacts = []
    _write(out, "grid.csv", harness.grid_table_csv(res["table"]), artifacts)
    _write(out, "best.json", json.dumps(res["best"], indent=2, sort_keys=True) + "\n", artifacts)
    _manifest(out, "gridsearch", cfg, artifacts)
    for method, point in res["best"].items():
        print(f"{method}: {json.dumps(point, sort_keys=True)}")
    failed = [m for m in cfg.methods if m not in res["best"]]
    for m in failed:
        print(f"{m}: every grid point failed", file=sys.stderr)
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_evaluate(cfg, out: Path) -> int:
    best = None
    best_path = out.parent / "gridsearch" / "best.json"
    if best_path.exists():
        best = json.loads(best_path.read_text())
    res = harness.evaluate(cfg, best=best)
    artifacts = []
    _write(out, "results.csv", res["report"].to_csv(), artifacts)
    _write(out, "results.txt", res["report"].to_table(), artifacts)
    _write(out, "runs.csv", harness.runs_csv(res["runs"]), artifacts)
    rate = harness.build_sequences(cfg)[0].observed.sample_rate
    for (method, seq), (t, pred, truth) in sorted(res["traces"].items()):
        _write(out, f"traces/{method}__{seq}.csv", harness.trace_csv(t, pred, truth, rate), artifacts)
    _manifest(out, "evaluate", cfg, artifacts, {"hyperparams": res["hyperparams"]})
    print(res["report"].to_table(), end="")
    return EXIT_OK


def cmd_benchmark(cfg, out: Path) -> int:
    rows = harness.benchmark(cfg)
    artifacts = []
    text = harness.benchmark_csv(rows)
    _write(out, "timing.csv", text, artifacts)
    _manifest(out, "benchmark", cfg, artifacts)
    print(text, end="")
    slow = [r["method"] for r in rows if r["median_ms"] > STEP_BUDGET_MS]
    if slow:
        print(f"over the {STEP_BUDGET_MS:.0f} ms per-step budget: {', '.join(slow)}", file=sys.stderr)
    return EXIT_OK


def cmd_synth(cfg, out: Path) -> int:
    rows = harness.synth(cfg, out)
    artifacts = [r["file"] for r in rows]
    _write(out, "summary.csv", harness.summary_csv(rows), artifacts)
    _manifest(out, "synth", cfg, artifacts)
    for r in rows:
        print(f"{r['file']}: {r['rows']} rows, label {r['label']}, second-difference mean {r['d2_mean']:.4f} mm")
    return EXIT_OK


def cmd_plotdata(cfg, out: Path, source: Path) -> int:
    artifacts = harness.plotdata(cfg, source, out)
    _manifest(out, "plotdata", cfg, artifacts)
    for a in artifacts:
        print(a)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quatrnn", description="Quaternion RNN forecasting experiments")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [("gridsearch", "cross-validated grid search on the validation window"),
                        ("evaluate", "seeded evaluation runs on the test segment"),
                        ("benchmark", "per-step timing of every method"),
                        ("synth", "write synthetic breathing sequences as CSV"),
                        ("plotdata", "emit plot-ready kernel surface, traces and heat tables")]:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", type=Path, help="YAML experiment config")
        sp.add_argument("--seed", type=int, help="master seed override")
        sp.add_argument("--out", type=Path, default=Path("results"), help="output root (default: results)")
        sp.add_argument("--runs", type=int, help="override cross-validation and evaluation run counts")
        sp.add_argument("--method", help="restrict to one method")
        sp.add_argument("--jobs", type=int, help="parallel worker processes")
        sp.add_argument("-v", "--verbose", action="store_true")
        if name == "plotdata":
            sp.add_argument("--from", dest="source", type=Path,
                            help="directory holding gridsearch/ and evaluate/ outputs (default: --out)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = harness.load_config(args.config, {"seed": args.seed, "method": args.method, "runs": args.runs,
                                                "jobs": args.jobs})
        out = args.out / args.command
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "gridsearch":
            return cmd_gridsearch(cfg, out)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, out)
        if args.command == "benchmark":
            return cmd_benchmark(cfg, out)
        if args.command == "synth":
            return cmd_synth(cfg, out)
        return cmd_plotdata(cfg, out, args.source or args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NonFiniteError, NonFiniteLoss, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
