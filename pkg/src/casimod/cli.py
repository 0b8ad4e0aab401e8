"""Command line front end: ``casimod run|sweep|verify|info``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import __version__, constants
from .config import ConfigError, ScenarioConfig, load_config
from .lifshitz import WORKERS_ENV, ConvergenceError
from .materials import builtin_materials
from .pfa import PressureCache
from .runner import format_csv, run_scenario, write_csv

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_VERIFY = 0, 1, 2, 3

log = logging.getLogger("casimod")


def _emit_record(record, cfg, csv_path):
    if csv_path:
        write_csv(record, csv_path, cfg)
        log.info("wrote %s", csv_path)
    else:
        sys.stdout.write(format_csv(record, cfg))


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    record = run_scenario(cfg, workers=args.workers)
    _emit_record(record, cfg, args.csv or cfg.csv_path)
    figure = args.figure or cfg.svg_path
    if figure and record.curves:
        from .plotting import plot_modulation

        plot_modulation(record.curves, figure, title=f"T = {cfg.temperature_K:g} K")
        log.info("wrote %s", figure)
    print(json.dumps(record.summary(), indent=2), file=sys.stderr)
    if record.failed:
        print(json.dumps(record.diagnostics["errors"], indent=2), file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def _parse_vary(spec: str):
    try:
        key, rng = spec.split("=", 1)
        start, stop, steps = rng.split(":")
        steps = int(steps)
        values = np.linspace(float(start), float(stop), steps) if steps > 1 else [float(start)]
    except ValueError:
        raise ConfigError(f"--vary expects key=start:stop:steps, got {spec!r}") from None
    if steps < 1:
        raise ConfigError("--vary needs steps >= 1")
    return key.strip(), [float(v) for v in values]


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    key, values = _parse_vary(args.vary)
    configs = [cfg.with_value(key, v) for v in values]
    names = [p.value for p in cfg.prescriptions()]
    columns = [key, "mean_F_Pa"] + [f"peak_dF_{n}_Pa" for n in names]
    if "drude" in names:
        columns.append("peak_dF_TE0_Pa")
    peaks: dict[str, list] = {n: [] for n in names}
    if "drude" in names:
        peaks["drude_te0"] = []
    rows = []
    failed = False
    cache = PressureCache()
    for value, sub in zip(values, configs):
        record = run_scenario(sub, workers=args.workers, cache=cache)
        failed |= record.failed
        curves = record.curves
        main = curves.get(names[0])
        row = [value, main.mean_pressure if main else float("nan")]
        for n in names:
            peak = curves[n].peak if n in curves else float("nan")
            row.append(peak)
            peaks[n].append(peak)
        if "drude" in names:
            te0 = float(np.max(np.abs(curves["drude"].breakdown_te0))) if "drude" in curves \
                else float("nan")
            row.append(te0)
            peaks["drude_te0"].append(te0)
        rows.append(row)
        log.info("%s = %g done", key, value)

    lines = [f"# casimod {__version__}", f"# config_sha256 {cfg.digest()}",
             f"# constants {constants.CODATA_VERSION}", f"# sweep {args.vary}",
             ",".join(columns)]
    lines += [",".join(format(v, ".17g") for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.figure:
        from .plotting import plot_sweep

        plot_sweep(key, values, peaks, args.figure)
    return EXIT_CONVERGENCE if failed else EXIT_OK


def cmd_verify(args) -> int:
    from .verification import AcceptanceSuite

    results = AcceptanceSuite(workers=args.workers).run(echo=print)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} checks passed")
    return EXIT_OK if passed == len(results) else EXIT_VERIFY


def cmd_info(args) -> int:
    info = {
        "version": __version__,
        "constants": constants.table(),
        "materials": [m.to_record() for m in builtin_materials().values()],
        "default_scenario": ScenarioConfig().canonical(),
        "workers_env": WORKERS_ENV,
    }
    print(json.dumps(info, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="casimod", description=__doc__)
    parser.add_argument("--version", action="version", version=f"casimod {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--workers", type=int, default=None,
                        help=f"worker threads (default: ${WORKERS_ENV} or CPU count)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="modulation curve for one scenario")
    p.add_argument("config")
    p.add_argument("--csv", help="CSV output path (overrides csv_path; default stdout)")
    p.add_argument("--figure", help="figure path (overrides svg_path)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="peak modulation while varying one parameter")
    p.add_argument("config")
    p.add_argument("--vary", required=True, metavar="KEY=START:STOP:STEPS")
    p.add_argument("--csv")
    p.add_argument("--figure")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("info", help="constants and material catalog")
    p.set_defaults(func=cmd_info)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"convergence error: {exc} {exc.context}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
