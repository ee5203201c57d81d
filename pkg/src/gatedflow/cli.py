"""Command-line front end.

Subcommands: run, study, list, export, plot, merge-spool,
emit-batch-script, and the debugging helper oracle-run. Flags for
experiment parameters are generated from the registry, one per collected
namespaced parameter. stdout carries data (JSON lines); diagnostics go to
stderr.

Exit codes are a stable contract: 0 ok, 2 usage, 3 deadlock timeout,
4 runtime error, 5 store I/O.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

from . import definition as defs
from .builtin import register_builtin
from .errors import FlowError, PrimaryUnavailable, UnknownExperiment
from .oracle import oracle_run
from .registry import TypeRegistry, build_experiment, collect_hyperparameters
from .store import DirectoryStore, merge_spool, open_run, query
from .study import Study, best_trial, build_search_space, run_study
from .viz import aggregate, export_csv, render_svg

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_TIMEOUT = 3
EXIT_RUNTIME = 4
EXIT_STORE = 5


@dataclass
class Flag:
    name: str  # e.g. "--ComponentF.SubcomponentA.scaler"
    kind: str
    default: object
    bounded: bool
    bounds: tuple | None = None
    choices: list | None = None
    help: str = ""


@dataclass
class FlagSchema:
    flags: list[Flag] = field(default_factory=list)


def generate_flags(registry: TypeRegistry, experiment: str) -> FlagSchema:
    """One typed flag per collected parameter; bounded flags validate range."""
    schema = FlagSchema()
    for name, desc in collect_hyperparameters(registry, experiment):
        schema.flags.append(Flag(
            name=f"--{name}",
            kind=desc.kind,
            default=desc.default,
            bounded=desc.bounded,
            bounds=desc.bounds,
            choices=desc.choices,
            help=f"{desc.kind} parameter"
            + (f", bounds {desc.bounds}" if desc.bounds else ""),
        ))
    return schema


def _flag_type(flag: Flag):
    def convert(text):
        if flag.kind == "integer":
            value = int(text)
        elif flag.kind == "real":
            value = float(text)
        else:
            value = text
        if flag.bounds is not None:
            low, high = flag.bounds
            if not low <= value <= high:
                raise argparse.ArgumentTypeError(
                    f"value {value} outside bounds ({low}, {high})"
                )
        if flag.choices is not None and value not in flag.choices:
            raise argparse.ArgumentTypeError(
                f"value {value!r} not among choices {flag.choices}"
            )
        return value

    return convert


def _parse_experiment_args(registry, experiment, rest) -> dict:
    """Parse the namespaced per-parameter flags into an exp_args mapping."""
    schema = generate_flags(registry, experiment)
    parser = argparse.ArgumentParser(prog=f"run {experiment}", add_help=False)
    for flag in schema.flags:
        parser.add_argument(flag.name, type=_flag_type(flag), default=None,
                            help=flag.help)
    namespace = parser.parse_args(rest)
    out = {}
    for flag in schema.flags:
        value = getattr(namespace, flag.name[2:])
        if value is not None:
            out[flag.name[2:]] = value
    return out


def _add_store_flags(parser):
    parser.add_argument("--store-root", default="./flow-store")
    parser.add_argument("--spool-root", default=None)


def _make_stores(args):
    store = DirectoryStore(args.store_root)
    try:
        os.makedirs(store.root, exist_ok=True)
    except OSError as exc:
        raise PrimaryUnavailable(str(exc)) from exc
    if not os.access(store.root, os.W_OK):
        raise PrimaryUnavailable(f"store root {store.root} is not writable")
    spool = DirectoryStore(args.spool_root) if args.spool_root else None
    if spool is not None:
        os.makedirs(spool.root, exist_ok=True)
    return store, spool


# --- subcommands -----------------------------------------------------------


def cmd_run(args, rest) -> int:
    registry = register_builtin()
    exp_args = {}
    if os.path.exists(args.experiment):
        exp_def = defs.load_experiment_definition(args.experiment)
        if exp_def.experiment is not None:
            exp_args = dict(exp_def.args)
            exp_args.update(
                _parse_experiment_args(registry, exp_def.experiment, rest)
            )
            exp_def.args = exp_args
        elif rest:
            print(f"unrecognised arguments: {' '.join(rest)}", file=sys.stderr)
            return EXIT_USAGE
        label = exp_def.label
        max_steps = args.max_steps if args.max_steps is not None else exp_def.max_steps
        step_timeout = (args.step_timeout if args.step_timeout is not None
                        else exp_def.step_timeout)
        builder = lambda logger: defs.build_from_definition(registry, exp_def, logger)
        default_steps = (
            registry.experiment(exp_def.experiment).default_max_steps
            if exp_def.experiment is not None else None
        )
    else:
        exp_args = _parse_experiment_args(registry, args.experiment, rest)
        label = args.experiment
        max_steps = args.max_steps
        step_timeout = args.step_timeout
        spec = registry.experiment(args.experiment)
        default_steps = spec.default_max_steps
        builder = lambda logger: build_experiment(
            registry, args.experiment, exp_args, logger=logger,
            step_timeout=step_timeout,
        )
    if max_steps is None:
        max_steps = default_steps
    if max_steps is None:
        print("a step bound is required: pass --max-steps", file=sys.stderr)
        return EXIT_USAGE

    store, spool = _make_stores(args)
    run = open_run(store, label, seed=args.seed, args=exp_args, spool=spool)
    try:
        collection = builder(run)
        report = collection.run(max_steps=max_steps, step_timeout=step_timeout)
    except Exception:
        run.close(outcome="error")
        raise
    run.close(outcome=report.outcome)
    print(json.dumps({
        "run_id": run.run_id,
        "outcome": report.outcome,
        "steps": report.steps,
    }, sort_keys=True))
    if report.outcome == "timeout":
        for name, namespace, op in report.blocked_on:
            print(f"blocked: component {name} waiting to {op} on "
                  f"namespace {namespace!r}", file=sys.stderr)
        return EXIT_TIMEOUT
    if report.outcome == "error":
        print(f"body error: {report.error}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_study(args, rest) -> int:
    if rest:
        print(f"unrecognised arguments: {' '.join(rest)}", file=sys.stderr)
        return EXIT_USAGE
    registry = register_builtin()
    study_def = defs.load_study_definition(args.definition)
    n_trials = args.n_trials if args.n_trials is not None else study_def.n_trials
    seed = args.seed if args.seed is not None else study_def.seed
    parallelism = (args.parallelism if args.parallelism is not None
                   else study_def.parallelism)
    store, spool = _make_stores(args)
    space = build_search_space(
        collect_hyperparameters(registry, study_def.experiment)
    )
    study = Study(
        study_def.experiment, space,
        direction=study_def.direction,
        objective_tag=study_def.objective_tag,
        reduce=study_def.reduce,
        sampler=study_def.sampler,
        seed=seed,
        max_steps=study_def.max_steps,
        step_timeout=study_def.step_timeout,
    )
    run_study(study, registry, store, n_trials, parallelism=parallelism,
              spool=spool)
    complete = [t for t in study.trials if t.state == "complete"]
    if not complete:
        print("null")
    else:
        print(json.dumps(best_trial(study).to_json(), sort_keys=True))
    return EXIT_OK


def cmd_list(args, rest) -> int:
    registry = register_builtin()
    listing = {
        "components": sorted(registry.components),
        "subcomponents": sorted(registry.subcomponents),
        "experiments": sorted(registry.experiments),
    }
    print(json.dumps(listing, sort_keys=True))
    return EXIT_OK


def _select_records(args, store):
    run_ids = args.runs.split(",") if args.runs else None
    return query(store, run_ids=run_ids, experiment=args.experiment,
                 tag=args.tag)


def cmd_export(args, rest) -> int:
    store = DirectoryStore(args.store_root)
    records = _select_records(args, store)
    if args.raw:
        with open(args.out, "w", encoding="utf-8") as fh:
            for rec in records:
                obj = {"r": rec.run_id, "c": rec.component, "t": rec.tag,
                       "s": rec.step, "w": rec.wall_time, "v": rec.value}
                if args.strip_walltime:
                    del obj["w"]
                fh.write(json.dumps(obj, sort_keys=True) + "\n")
        return EXIT_OK
    group_by = tuple(args.group_by.split(","))
    series = aggregate(records, group_by=group_by)
    if len(series) != 1:
        print(
            f"selection produced {len(series)} series; narrow the filter "
            f"(per-series CSV export takes exactly one)", file=sys.stderr,
        )
        return EXIT_USAGE
    export_csv(series[0], args.out)
    return EXIT_OK


def cmd_plot(args, rest) -> int:
    store = DirectoryStore(args.store_root)
    records = _select_records(args, store)
    group_by = tuple(args.group_by.split(","))
    series = aggregate(records, group_by=group_by)
    svg = render_svg(series, title=args.title or (args.tag or ""))
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    return EXIT_OK


def cmd_merge_spool(args, rest) -> int:
    if args.spool_root is None:
        print("--spool-root is required", file=sys.stderr)
        return EXIT_USAGE
    report = merge_spool(DirectoryStore(args.store_root),
                         DirectoryStore(args.spool_root))
    print(json.dumps({"merged": report.merged, "skipped": report.skipped}))
    return EXIT_OK


def cmd_emit_batch_script(args, rest) -> int:
    study_def = defs.load_study_definition(args.definition)
    n_trials = args.n_trials if args.n_trials is not None else study_def.n_trials
    if n_trials <= 0:
        print("cannot partition a study with no trials", file=sys.stderr)
        return EXIT_USAGE
    partitions = args.partitions
    if partitions <= 0 or partitions > n_trials:
        print(f"partitions must be in 1..{n_trials}", file=sys.stderr)
        return EXIT_USAGE
    base = n_trials // partitions
    counts = [base + (1 if i < n_trials % partitions else 0)
              for i in range(partitions)]
    offsets = [sum(counts[:i]) for i in range(partitions)]
    seed = study_def.seed
    lines = ["#!/bin/sh"]
    for header in args.header or []:
        lines.append(header)
    prog = args.program
    if partitions == 1:
        lines.append(
            f"exec {prog} study {args.definition} --n-trials {n_trials} "
            f"--seed {seed} --store-root {args.store_root}"
        )
    else:
        lines.append(f"#ARRAY 0-{partitions - 1}")
        lines.append('IDX="${ARRAY_INDEX:-0}"')
        lines.append("case \"$IDX\" in")
        for i in range(partitions):
            lines.append(
                f"  {i}) COUNT={counts[i]} SEED={seed + offsets[i]} ;;"
            )
        lines.append("  *) echo \"bad array index $IDX\" >&2; exit 2 ;;")
        lines.append("esac")
        lines.append(
            f"exec {prog} study {args.definition} --n-trials \"$COUNT\" "
            f"--seed \"$SEED\" --store-root {args.store_root}"
        )
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_oracle_run(args, rest) -> int:
    registry = register_builtin()
    exp_args = _parse_experiment_args(registry, args.experiment, rest)
    collection = build_experiment(registry, args.experiment, exp_args)
    result = oracle_run(collection.components, args.max_steps)
    print(json.dumps({"sequences": result.sequences, "steps": result.steps},
                     sort_keys=True))
    return EXIT_OK


# --- entry -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gatedflow")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="build and run an experiment")
    p.add_argument("experiment", help="registered experiment name or definition file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--step-timeout", type=float, default=None)
    _add_store_flags(p)
    p.set_defaults(fn=cmd_run, partial=True)

    p = sub.add_parser("study", help="run a hyperparameter study locally")
    p.add_argument("definition", help="study definition file")
    p.add_argument("--n-trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--parallelism", type=int, default=None)
    _add_store_flags(p)
    p.set_defaults(fn=cmd_study, partial=False)

    p = sub.add_parser("list", help="list registered types per tier")
    p.set_defaults(fn=cmd_list, partial=False)

    p = sub.add_parser("export", help="export aggregated CSV (or raw records)")
    p.add_argument("--tag", default=None)
    p.add_argument("--runs", default=None, help="comma-separated run ids")
    p.add_argument("--experiment", default=None)
    p.add_argument("--group-by", default="component,tag")
    p.add_argument("--raw", action="store_true")
    p.add_argument("--strip-walltime", action="store_true")
    p.add_argument("--out", required=True)
    _add_store_flags(p)
    p.set_defaults(fn=cmd_export, partial=False)

    p = sub.add_parser("plot", help="render an SVG chart with deviation bands")
    p.add_argument("--tag", default=None)
    p.add_argument("--runs", default=None)
    p.add_argument("--experiment", default=None)
    p.add_argument("--group-by", default="component,tag")
    p.add_argument("--title", default=None)
    p.add_argument("--out", required=True)
    _add_store_flags(p)
    p.set_defaults(fn=cmd_plot, partial=False)

    p = sub.add_parser("merge-spool", help="merge spooled records into the primary")
    _add_store_flags(p)
    p.set_defaults(fn=cmd_merge_spool, partial=False)

    p = sub.add_parser("emit-batch-script",
                       help="emit an array-job submission script (text only)")
    p.add_argument("definition")
    p.add_argument("--partitions", type=int, default=1)
    p.add_argument("--n-trials", type=int, default=None)
    p.add_argument("--header", action="append", default=None,
                   help="extra header line (repeatable)")
    p.add_argument("--program", default="gatedflow")
    p.add_argument("--out", required=True)
    _add_store_flags(p)
    p.set_defaults(fn=cmd_emit_batch_script, partial=False)

    p = sub.add_parser("oracle-run",
                       help="debug: sequential reference interpreter")
    p.add_argument("experiment")
    p.add_argument("--max-steps", type=int, required=True)
    p.set_defaults(fn=cmd_oracle_run, partial=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        if argv is None:
            argv = sys.argv[1:]
        args, rest = parser.parse_known_args(argv)
        if not getattr(args, "partial", False) and rest:
            print(f"unrecognised arguments: {' '.join(rest)}", file=sys.stderr)
            return EXIT_USAGE
        return args.fn(args, rest)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (PrimaryUnavailable, OSError) as exc:
        print(f"store error: {exc}", file=sys.stderr)
        return EXIT_STORE
    except (UnknownExperiment, defs.DefinitionError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FlowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entry():
    raise SystemExit(main())
