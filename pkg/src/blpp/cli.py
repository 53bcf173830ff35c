"""Command-line experiment runner.

    blpp verify --config cfg.json [--out DIR] [--threads N]
    blpp run <experiment> --config cfg.json [--out DIR] [--threads N]
    blpp plot out/table.csv ... [--loglog] [--reference-exponent B]

Exit codes: 0 success, 1 acceptance or identity failure, 2 usage/config error.
BLPP_THREADS overrides the thread count from any other source.  Every emitted
byte is determined by (config, master seed), independent of thread count.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .errors import BlppError, ConfigurationError, InputError
from .experiments import EXPERIMENT_IDS, EXPERIMENTS, ExperimentConfig, ExperimentResult, run_experiment
from .svgplot import figure_from_csv, render


def _format_cell(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_csv(path: Path, header: list[str], rows: list) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format_cell(v) for v in row) + "\n")


def _digest(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def write_outputs(out_dir: Path, result: ExperimentResult, cfg: ExperimentConfig,
                  wall_time: float) -> dict:
    """Write CSV tables, summary JSON and the run manifest; return the manifest."""
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {}
    for name, (header, rows) in sorted(result.tables.items()):
        p = out_dir / f"{name}.csv"
        write_csv(p, header, rows)
        files[p.name] = _digest(p)
    summary_path = out_dir / f"{result.name.replace('-', '_')}_summary.json"
    with open(summary_path, "w") as fh:
        json.dump(result.summary, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    files[summary_path.name] = _digest(summary_path)
    if cfg.plots:
        for name in sorted(result.tables):
            if name.endswith("_tail"):
                p = out_dir / f"{name}.csv"
                svg = out_dir / f"{name}.svg"
                emit_plot(p, svg, loglog=False)
                files[svg.name] = _digest(svg)
    manifest = {
        "artifact_version": __version__,
        "experiment": result.name,
        "experiment_id": EXPERIMENT_IDS[result.name],
        "config": cfg.echo(),
        "master_seed": cfg.master_seed,
        "wall_time_s": wall_time,
        "checks": result.checks,
        "passed": result.passed,
        "outputs": files,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return manifest


def load_config(path: str | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig.from_dict({})
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a JSON object")
    return ExperimentConfig.from_dict(raw)


def _resolve_threads(cfg: ExperimentConfig, cli_threads: int | None) -> int:
    env_threads = os.environ.get("BLPP_THREADS")
    if env_threads is not None:
        try:
            return max(1, int(env_threads))
        except ValueError as exc:
            raise ConfigurationError(f"BLPP_THREADS must be an integer, got {env_threads!r}") from exc
    if cli_threads is not None:
        return max(1, cli_threads)
    return max(1, int(cfg.threads))


def emit_plot(csv_path: Path, svg_path: Path, loglog: bool = False,
              reference_exponent: float | None = None, title: str = "") -> None:
    try:
        with open(csv_path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [r for r in reader if r]
    except (OSError, StopIteration, csv.Error) as exc:
        raise InputError(f"cannot read CSV {csv_path}: {exc}") from exc
    try:
        fig = figure_from_csv(header, rows, loglog=loglog,
                              reference_exponent=reference_exponent,
                              title=title or csv_path.stem)
    except (ValueError, KeyError, IndexError) as exc:
        raise InputError(f"malformed CSV {csv_path}: {exc}") from exc
    svg_path.write_text(render(fig))


def _run_and_report(name: str, cfg: ExperimentConfig, out_dir: Path) -> int:
    t0 = time.monotonic()
    result = run_experiment(name, cfg)
    wall = time.monotonic() - t0
    write_outputs(out_dir, result, cfg, wall)
    for check, ok in result.checks.items():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {check}")
    print(f"{name}: {'all checks passed' if result.passed else 'CHECKS FAILED'} "
          f"({wall:.1f}s, outputs in {out_dir})")
    return 0 if result.passed else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="blpp", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run the per-sample identity suite")
    p_verify.add_argument("--config", default=None)
    p_verify.add_argument("--out", default=None)
    p_verify.add_argument("--threads", type=int, default=None)

    p_run = sub.add_parser("run", help="run a named experiment")
    p_run.add_argument("experiment")
    p_run.add_argument("--config", default=None)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--threads", type=int, default=None)

    p_plot = sub.add_parser("plot", help="render estimator CSVs to standalone SVG")
    p_plot.add_argument("csv", nargs="+")
    p_plot.add_argument("--loglog", action="store_true")
    p_plot.add_argument("--reference-exponent", type=float, default=None)
    p_plot.add_argument("--out-dir", default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "plot":
            for c in args.csv:
                p = Path(c)
                out = Path(args.out_dir) / f"{p.stem}.svg" if args.out_dir else p.with_suffix(".svg")
                out.parent.mkdir(parents=True, exist_ok=True)
                emit_plot(p, out, loglog=args.loglog,
                          reference_exponent=args.reference_exponent)
                print(f"wrote {out}")
            return 0
        cfg = load_config(args.config)
        cfg.threads = _resolve_threads(cfg, args.threads)
        name = "verify" if args.command == "verify" else args.experiment
        if name not in EXPERIMENTS:
            raise ConfigurationError(f"unknown experiment {name!r}; known: {sorted(EXPERIMENTS)}")
        out_dir = Path(args.out or cfg.out_dir)
        return _run_and_report(name, cfg, out_dir)
    except (ConfigurationError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BlppError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
