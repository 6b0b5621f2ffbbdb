"""Command line entry point: ``rcclp {generate,run,validate,sweep,trace-plot-data}``.

Exit codes: 0 success, 1 validation failure (empirical violation above
epsilon), 2 malformed config/input, 3 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config, table_row_config
from .harness import (
    build_instance,
    figure_series,
    load_solution,
    metrics_csv_text,
    read_trace,
    run_experiment,
    solution_payload,
    validate_basis,
    validate_solution,
    write_trace,
)
from .lp_core import InfeasibleLP
from .probgen import InstanceFormatError, load_instance, save_instance, write_instance

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _add_common(p, out_help="output path"):
    p.add_argument("--config", help="experiment config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help=out_help)


def _add_run_flags(p):
    p.add_argument("--mode", choices=["deferred", "sync"])
    p.add_argument("--round-cap", type=int)
    p.add_argument("--n-val", type=int)
    p.add_argument("--instance", help="instance file (overrides generation)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rcclp", description="Randomized constraints consensus for uncertain LPs")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a random instance file")
    _add_common(p, "instance file (default: stdout)")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--radius", type=float)

    p = sub.add_parser("run", help="run one experiment; prints a metrics CSV row")
    _add_common(p, "output directory for metrics.csv, trace.jsonl, solution.json")
    _add_run_flags(p)

    p = sub.add_parser("validate", help="a-posteriori Monte Carlo check of a saved solution")
    p.add_argument("--instance", required=True)
    p.add_argument("--solution", required=True)
    p.add_argument("--n-val", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, help="accuracy bar (default: value stored with the solution)")
    p.add_argument("--coupling", choices=["joint", "shared"], default="joint")

    p = sub.add_parser("sweep", help="repeat a config over seeds; CSV with one row per repeat plus a mean line")
    _add_common(p, "CSV path (default: stdout)")
    _add_run_flags(p)
    p.add_argument("--row", type=int, help="benchmark table row preset (1-4)")
    p.add_argument("--repeats", type=int, default=100)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("trace-plot-data", help="cost / distance-to-solution series per agent")
    _add_common(p, "CSV path (default: stdout)")
    _add_run_flags(p)
    p.add_argument("--trace", help="existing trace.jsonl (otherwise the config is run)")
    return ap


def _config_from(args) -> ExperimentConfig:
    if getattr(args, "row", None):
        cfg = table_row_config(args.row)
        if args.config:
            raise ConfigError("--row and --config are mutually exclusive")
    elif args.config:
        cfg = load_config(args.config)
    else:
        cfg = ExperimentConfig()
    return cfg.replace(
        seed=args.seed,
        mode=getattr(args, "mode", None),
        round_cap=getattr(args, "round_cap", None),
        n_val=getattr(args, "n_val", None),
        instance_file=getattr(args, "instance", None),
    )


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_generate(args) -> int:
    cfg = _config_from(args).replace(n=args.n, m=args.m, d=args.d, radius=args.radius)
    inst = build_instance(cfg.replace(instance_file=None) if cfg.instance_file else cfg)
    if args.out:
        save_instance(inst, args.out)
    else:
        write_instance(inst, sys.stdout)
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _config_from(args)
    res = run_experiment(cfg)
    text = metrics_csv_text([res.metrics])
    out_dir = Path(args.out or cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "metrics.csv").write_text(text)
    with open(out_dir / "trace.jsonl", "w") as fh:
        write_trace(res.trace, fh)
    (out_dir / "solution.json").write_text(json.dumps(solution_payload(res), indent=1))
    save_instance(res.instance, out_dir / "instance.txt")
    sys.stdout.write(text)
    return EXIT_OK if res.metrics.violation <= cfg.epsilon else EXIT_VALIDATION


def cmd_validate(args) -> int:
    inst = load_instance(args.instance)
    theta, basis, data = load_solution(args.solution)
    if theta.shape != (inst.d,):
        raise ConfigError(f"{args.solution}: theta has dimension {theta.shape[0]}, instance has d={inst.d}")
    eps = args.epsilon if args.epsilon is not None else data.get("epsilon")
    if eps is None:
        raise ConfigError("no epsilon given and none stored with the solution")
    viol = validate_solution(inst, theta, args.n_val, np.random.default_rng([args.seed, 3]), args.coupling)
    sub = validate_basis(inst, basis, theta, args.n_val, np.random.default_rng([args.seed, 3]), args.coupling)
    print(f"violation={viol!r} basis_suboptimality={sub!r} epsilon={eps!r} n_val={args.n_val}")
    return EXIT_OK if viol <= eps else EXIT_VALIDATION


def _sweep_one(cfg):
    return run_experiment(cfg, keep_trace=False).metrics.row()


def cmd_sweep(args) -> int:
    base = _config_from(args)
    cfgs = [base.replace(seed=base.seed + r) for r in range(args.repeats)]
    if args.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(_sweep_one, cfgs))
    else:
        rows = [_sweep_one(c) for c in cfgs]
    _emit(metrics_csv_text(rows, mean_line=True), args.out)
    return EXIT_OK


def cmd_trace(args) -> int:
    if args.trace:
        trace = read_trace(args.trace)
    else:
        trace = run_experiment(_config_from(args), validate=False).trace
    sio = io.StringIO()
    w = csv.DictWriter(sio, fieldnames=["t", "agent", "cost", "distance"], lineterminator="\n")
    w.writeheader()
    w.writerows(figure_series(trace))
    _emit(sio.getvalue(), args.out)
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "run": cmd_run,
    "validate": cmd_validate,
    "sweep": cmd_sweep,
    "trace-plot-data": cmd_trace,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, InstanceFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, InfeasibleLP, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
