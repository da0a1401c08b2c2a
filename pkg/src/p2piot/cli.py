"""Command-line entry point: ``p2piot <subcommand> [flags]``.

Subcommands: gen, sweep, compare, export-lp, census, validate. Any
subcommand accepts ``--config FILE.json`` whose keys use the flag names
(dashes as underscores); flags given on the command line win. The output
directory is ``--out``, else ``$P2PIOT_OUTPUT_DIR``, else the config, else
``p2piot-out``.

Exit codes: 0 success, 1 a run failed validation or did not reach
optimality, 2 bad configuration or input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import heuristic
from .metrics import (
    ENGINES,
    RunConfig,
    compare_scenarios,
    config_from_dict,
    rows_from_csv,
    run_sweep,
    savings_to_csv,
    write_outputs,
)
from .milp import build, census, export_lp
from .model import (
    TABLE_IV_REQUESTS,
    ConfigurationError,
    Scenario,
    build_instance,
    instance_from_json,
    instance_to_json,
)
from .solution import assignment_from_json, validate

EXIT_OK, EXIT_INVALID, EXIT_CONFIG = 0, 1, 2
OUTPUT_ENV = "P2PIOT_OUTPUT_DIR"


def _pair(text: str, cast=float) -> tuple:
    parts = text.lower().replace("x", ",").split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two values like 5x5, got {text!r}")
    return tuple(cast(p) for p in parts)


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(",") if p.strip()) if text.strip() else ()


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(",") if p.strip())


def _scenarios(text: str) -> tuple[str, ...]:
    try:
        return tuple(Scenario(p.strip()).value for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _instance_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("instance")
    g.add_argument("--instance", help="load the instance from JSON instead of generating it")
    g.add_argument("--seed", type=int, help="generator seed (default 42)")
    g.add_argument("--objects", type=int, help="number of objects (default 25)")
    g.add_argument("--grid", type=lambda s: _pair(s, int), help="relay grid ROWSxCOLS (default 5x5)")
    g.add_argument("--pitch", type=float, help="relay spacing in metres (default 6)")
    g.add_argument("--area", type=_pair, help="area WIDTHxHEIGHT in metres (default 30x30)")
    g.add_argument("--profile", type=_int_list, help="requests per task, comma separated")
    g.add_argument("--scenario", type=lambda s: Scenario(s).value, help="hybrid | relays_only | objects_only")
    g.add_argument("--task-weight", type=float, help="task weight F (default 1.8)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="p2piot",
                                     description="Task placement and power accounting for peer-to-peer IoT networks.")
    parser.add_argument("--config", help="JSON file with default flag values")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate an instance and write it as JSON")
    _instance_flags(p)
    p.add_argument("--output", help="file to write (default stdout)")

    p = sub.add_parser("sweep", help="run scenarios over a task-weight sweep and write metrics")
    _instance_flags(p)
    p.add_argument("--seeds", type=int, help="number of consecutive seeds starting at --seed")
    p.add_argument("--scenarios", type=_scenarios, help="comma separated scenarios (default all three)")
    p.add_argument("--task-weights", type=_float_list, help="comma separated F values")
    p.add_argument("--engine", choices=ENGINES, help="heuristic (default), exact or export-lp")
    p.add_argument("--order-seed", type=int, help="shuffle request arrival order for the heuristic")
    p.add_argument("--node-limit", type=int, help="branch-and-bound node budget")
    p.add_argument("--time-limit", type=float, help="branch-and-bound time budget in seconds")
    p.add_argument("--jobs", type=int, help="parallel worker processes")
    p.add_argument("--force", action="store_true", default=None, help="allow the exact engine on large instances")
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("compare", help="power savings and served deltas against hybrid")
    p.add_argument("metrics", help="metrics.csv written by sweep")
    p.add_argument("--output", help="file to write (default stdout)")

    p = sub.add_parser("export-lp", help="write the MILP of an instance in LP format")
    _instance_flags(p)
    p.add_argument("--output", help="file to write (default stdout)")

    p = sub.add_parser("census", help="variable and constraint counts as JSON")
    _instance_flags(p)
    p.add_argument("--check", action="store_true", default=None,
                   help="also build the model and fail if its counts differ")

    p = sub.add_parser("validate", help="check an assignment, or audit a sweep directory")
    _instance_flags(p)
    p.add_argument("--assignment", help="assignment JSON to check against --instance or generated instance")
    p.add_argument("--run-dir", help="sweep output directory to re-validate")
    p.add_argument("--heuristic", action="store_true", default=None,
                   help="check the heuristic's own assignment for the instance")
    return parser


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigurationError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in doc.items()}


def _merged(args: argparse.Namespace, config: dict) -> dict:
    """Config values overridden by every flag actually given."""
    out = dict(config)
    for k, v in vars(args).items():
        if k in ("command", "config"):
            continue
        if v is not None:
            out[k] = v
    return out


def _instance(opts: dict):
    if opts.get("instance"):
        inst = instance_from_json(Path(opts["instance"]).read_text())
    else:
        inst = build_instance(
            int(opts.get("seed", 42)),
            n_objects=int(opts.get("objects", 25)),
            grid=tuple(opts.get("grid", (5, 5))),
            pitch=float(opts.get("pitch", 6.0)),
            area=tuple(opts.get("area", (30.0, 30.0))),
            profile=tuple(opts.get("profile", TABLE_IV_REQUESTS)),
        )
    if "scenario" in opts:
        inst = inst.with_scenario(opts["scenario"])
    if "task_weight" in opts:
        inst = inst.with_task_weight(opts["task_weight"])
    return inst


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_gen(opts) -> int:
    _emit(instance_to_json(_instance(opts)), opts.get("output"))
    return EXIT_OK


def _sweep_config(opts: dict) -> RunConfig:
    keys = {"seed", "seeds", "objects", "grid", "pitch", "area", "profile", "scenarios", "task_weights",
            "engine", "out", "instance", "order_seed", "node_limit", "time_limit", "jobs", "force"}
    doc = {k: v for k, v in opts.items() if k in keys}
    if "scenario" in opts and "scenarios" not in opts:
        doc["scenarios"] = (opts["scenario"],)
    if "task_weight" in opts and "task_weights" not in opts:
        doc["task_weights"] = (opts["task_weight"],)
    return config_from_dict(doc)


def _cmd_sweep(opts, out_flag: str | None) -> int:
    cfg = _sweep_config(opts)
    out_dir = out_flag or os.environ.get(OUTPUT_ENV) or cfg.out
    cfg.out = out_dir
    results = run_sweep(cfg)
    write_outputs(cfg, results, out_dir)
    bad = [r.row for r in results if r.row.status not in ("ok", "exported")]
    for r in bad:
        print(f"run {r.scenario} F={r.task_weight} seed={r.seed}: {r.status}", file=sys.stderr)
    print(f"{len(results)} runs written to {out_dir}", file=sys.stderr)
    return EXIT_INVALID if bad else EXIT_OK


def _cmd_compare(opts) -> int:
    try:
        text = Path(opts["metrics"]).read_text()
    except OSError as exc:
        raise ConfigurationError(str(exc)) from None
    _emit(savings_to_csv(compare_scenarios(rows_from_csv(text))), opts.get("output"))
    return EXIT_OK


def _cmd_export(opts) -> int:
    m = build(_instance(opts))
    if opts.get("output"):
        export_lp(m, opts["output"])
    else:
        export_lp(m, sys.stdout)
    return EXIT_OK


def _cmd_census(opts) -> int:
    inst = _instance(opts)
    counts = census(inst)
    print(json.dumps(counts, indent=2))
    if opts.get("check"):
        built = build(inst).counts()
        if built != counts:
            print(f"model counts differ: {json.dumps(built)}", file=sys.stderr)
            return EXIT_INVALID
    return EXIT_OK


def _report(label: str, inst, a) -> bool:
    rep = validate(inst, a)
    if rep.ok:
        print(f"{label}: ok ({len(a)} served)")
    else:
        print(f"{label}: {len(rep)} violation(s)")
        for v in rep:
            print(f"  c{v.constraint} {v.indices}: {v.lhs} vs {v.bound} {v.note}".rstrip())
    return rep.ok


def _cmd_validate(opts) -> int:
    if opts.get("run_dir"):
        run_dir = Path(opts["run_dir"])
        cfg = config_from_dict(json.loads((run_dir / "config.json").read_text()))
        ok = True
        files = sorted((run_dir / "assignments").glob("*.json"))
        for path in files:
            scenario, f, seed = path.stem.rsplit("_", 2)
            inst = (cfg.make_instance(int(seed[1:])).with_scenario(scenario).with_task_weight(float(f[1:])))
            ok &= _report(path.name, inst, assignment_from_json(path.read_text()))
        return EXIT_OK if ok and files else EXIT_INVALID
    inst = _instance(opts)
    if opts.get("assignment"):
        a = assignment_from_json(Path(opts["assignment"]).read_text())
    elif opts.get("heuristic"):
        a = heuristic.run(inst).assignment
    else:
        raise ConfigurationError("validate needs --assignment, --heuristic or --run-dir")
    return EXIT_OK if _report("assignment", inst, a) else EXIT_INVALID


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        opts = _merged(args, _load_config(args.config))
        if args.command == "gen":
            return _cmd_gen(opts)
        if args.command == "sweep":
            return _cmd_sweep(opts, args.out)
        if args.command == "compare":
            return _cmd_compare(opts)
        if args.command == "export-lp":
            return _cmd_export(opts)
        if args.command == "census":
            return _cmd_census(opts)
        return _cmd_validate(opts)
    except (ConfigurationError, ValueError, OSError) as exc:
        print(f"p2piot: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
