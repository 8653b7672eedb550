"""Command-line entry point: ``iho <experiment> --config <path> [--out DIR] [--sweep key=v1,v2]``.

Exit codes: 0 success, 2 configuration error, 3 numerical-guard error, 4 I/O error.
"""
import argparse
import json
import logging
import math
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .config import EXPERIMENTS, apply_override, build_config, read_sections
from .errors import ConfigError, IHOError, InvalidInputError, NumericalGuardError
from .experiments import run_experiment

log = logging.getLogger("ihosim")

EXIT_OK, EXIT_CONFIG, EXIT_GUARD, EXIT_IO = 0, 2, 3, 4


def fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".15g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    return obj


def write_table(path, table, fmt_name):
    cols = [np.asarray(c) for c in table.columns]
    if fmt_name == "json":
        rows = [[_jsonable(c[i]) for c in cols] for i in range(len(cols[0]))]
        path.with_suffix(".json").write_text(
            json.dumps({"columns": list(table.header), "rows": rows}, indent=1) + "\n")
        return path.with_suffix(".json")
    lines = [",".join(table.header)]
    for i in range(len(cols[0])):
        lines.append(",".join(fmt(c[i]) for c in cols))
    path.with_suffix(".csv").write_text("\n".join(lines) + "\n")
    return path.with_suffix(".csv")


def execute(cfg, out_dir):
    """Run one config and write its artifacts into out_dir; returns the summary dict."""
    t0 = time.perf_counter()
    result = run_experiment(cfg)
    wall = time.perf_counter() - t0
    out_dir.mkdir(parents=True, exist_ok=True)
    files = [write_table(out_dir / name, tab, cfg.output["format"]).name
             for name, tab in sorted(result.tables.items())]
    summary = {"experiment": cfg.experiment, **result.summary, "warnings": result.warnings}
    (out_dir / "summary.json").write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    (out_dir / "summary.txt").write_text(human_summary(summary))
    manifest = {
        "config": cfg.resolved(),
        "config_source": cfg.source,
        "config_text": cfg.raw,
        "software": {"package": "ihosim", "version": __version__, "kernel_backend": _kernels.backend(),
                     "numpy": np.__version__, "python": platform.python_version()},
        "convergence": result.convergence,
        "files": files,
    }
    if cfg.output["deterministic"] == "true":
        log.info("wall time %.3f s (omitted from manifest in deterministic mode)", wall)
    else:
        manifest["wall_time_s"] = wall
    (out_dir / "manifest.json").write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    return summary


def human_summary(summary, indent=""):
    lines = []
    for k, v in summary.items():
        if isinstance(v, dict):
            lines.append(f"{indent}{k}:")
            lines.append(human_summary(v, indent + "  ").rstrip("\n"))
        elif isinstance(v, list):
            lines.append(f"{indent}{k}: " + ("; ".join(map(str, v)) if v else "none"))
        elif isinstance(v, float):
            lines.append(f"{indent}{k}: {v:.6g}")
        else:
            lines.append(f"{indent}{k}: {v}")
    return "\n".join(lines) + "\n"


def _sweep_job(args):
    experiment, sections, source, out_dir = args
    cfg = build_config(experiment, sections, source)
    return execute(cfg, Path(out_dir))


def build_parser():
    ap = argparse.ArgumentParser(prog="iho", description="Inverted-oscillator trapped-ion simulator")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", required=True, help="sectioned key = value config file")
    ap.add_argument("--out", help="output directory (overrides [output] directory)")
    ap.add_argument("--sweep", help="key=v1,v2,... run once per value into <out>/<key>=<value>/")
    ap.add_argument("--workers", type=int, default=1, help="parallel processes for --sweep")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        try:
            sections = read_sections(args.config)
        except OSError as exc:
            print(f"iho: cannot read config: {exc}", file=sys.stderr)
            return EXIT_IO
        base = build_config(args.experiment, sections, args.config)
        out = Path(args.out or base.output["directory"])
        if not args.sweep:
            summary = execute(base, out)
            print(human_summary(summary), end="")
            return EXIT_OK
        if "=" not in args.sweep:
            raise ConfigError("--sweep expects key=v1,v2,...")
        key, values = args.sweep.split("=", 1)
        jobs = []
        for v in [u.strip() for u in values.split(",") if u.strip()]:
            sec = apply_override(sections, key.strip(), v)
            build_config(args.experiment, sec, args.config)  # validate every point up front
            jobs.append((args.experiment, sec, args.config, str(out / f"{key.strip()}={v}")))
        if args.workers > 1:
            with ProcessPoolExecutor(max_workers=args.workers) as pool:
                summaries = list(pool.map(_sweep_job, jobs))
        else:
            summaries = [_sweep_job(j) for j in jobs]
        for (_, _, _, d), s in zip(jobs, summaries):
            print(f"== {d}")
            print(human_summary(s), end="")
        return EXIT_OK
    except (ConfigError, InvalidInputError) as exc:
        print(f"iho: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalGuardError as exc:
        print(f"iho: numerical guard tripped in {args.experiment}: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except OSError as exc:
        print(f"iho: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except IHOError as exc:
        print(f"iho: {args.experiment} failed: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
