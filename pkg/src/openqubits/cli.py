"""Command-line entry point.

Exit codes: 0 success, 2 parse/validation error, 3 solver failure,
4 partial sweep failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness.config import ConfigError, ExperimentConfig, SweepSpec, load_config, replace_config
from .harness.output import point_filename, write_csv, write_sweep
from .harness.presets import PRESET_NAMES, figure_preset
from .harness.runner import SolverError, run_experiment, run_sweep, violation_threshold
from .harness.validate import cross_checks

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_PARTIAL = 0, 2, 3, 4

log = logging.getLogger("openqubits")


def _with_seed(cfg: ExperimentConfig, seed: int | None) -> ExperimentConfig:
    return cfg if seed is None else replace_config(cfg, seed=seed)


def _report(series, path: Path) -> None:
    print(f"wrote {path}")
    for m in series.columns:
        if violation_threshold(m) is not None:
            spans = series.violation_intervals(m)
            text = ", ".join(f"[{a:.4g}, {b:.4g}]" for a, b in spans) or "none"
            print(f"  {m} violation intervals: {text}")


def _run_sweep(spec: SweepSpec, out: Path, stem: str, workers: int | None) -> int:
    points = run_sweep(spec, workers)
    write_sweep(points, out, stem)
    failed = [p for p in points if not p.ok]
    for p in points:
        if p.ok:
            _report(p.series, out / point_filename(stem, p.params))
        else:
            print(f"FAILED {dict(p.params)}: {p.error}", file=sys.stderr)
    if not failed:
        return EXIT_OK
    return EXIT_SOLVER if len(failed) == len(points) else EXIT_PARTIAL


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if isinstance(cfg, SweepSpec):
        raise ConfigError("file declares sweep keys; use the 'sweep' command")
    cfg = _with_seed(cfg, args.seed)
    series = run_experiment(cfg)
    path = write_csv(series, Path(args.out) / f"{cfg.name}.csv")
    _report(series, path)
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = load_config(args.config)
    if isinstance(spec, ExperimentConfig):
        spec = SweepSpec(spec)
    if args.seed is not None:
        spec = SweepSpec(_with_seed(spec.base, args.seed), spec.params, spec.workers)
    return _run_sweep(spec, Path(args.out), spec.base.name, args.workers)


def cmd_preset(args) -> int:
    spec = figure_preset(args.name, args.variant)
    if args.seed is not None:
        spec = SweepSpec(_with_seed(spec.base, args.seed), spec.params, spec.workers)
    return _run_sweep(spec, Path(args.out), spec.base.name, args.workers)


def cmd_validate(args) -> int:
    ok = True
    for result in cross_checks():
        print(result.line(), flush=True)
        ok &= result.passed
    return EXIT_OK if ok else EXIT_SOLVER


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="openqubits", description=__doc__.splitlines()[0])
    p.add_argument("--workers", type=int, default=None, help="worker processes for sweeps")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a single experiment config")
    r.add_argument("config")
    r.add_argument("--out", default=".", help="output directory")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a sweep config")
    s.add_argument("config")
    s.add_argument("--out", default=".", help="output directory")
    s.set_defaults(func=cmd_sweep)

    f = sub.add_parser("preset", help="run a figure preset")
    f.add_argument("name", help=", ".join(PRESET_NAMES))
    f.add_argument("--variant", choices=["rwa", "rwa-oracle", "heom", "pseudomode"], default=None)
    f.add_argument("--out", default=".", help="output directory")
    f.set_defaults(func=cmd_preset)

    v = sub.add_parser("validate", help="run the solver cross-check suite")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers is not None and args.workers < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
