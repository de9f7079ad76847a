"""``dsr`` command line: partition, build, solve, validate and report."""

from __future__ import annotations

import argparse
import importlib.resources
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from .blocks import BlockPartition, build_block_graph, compute_load_blocks
from .feeder import FeederError, FeederModel, load_feeder, validate_feeder
from .formulation import BuildError, FormulationKind, FormulationOptions, build_dsr
from .milp import write_lp
from .plan import RestorationPlan
from .report import RunRecord, emit_dot, emit_stats_csv, emit_stats_table, make_record
from .solver import IntegralityError, SolverConfig, SolverError, extract_plan, solve
from .validation import check_plan

EXIT_OK, EXIT_PARSE, EXIT_BUILD, EXIT_SOLVE, EXIT_VALIDATE = 0, 2, 3, 4, 5

log = logging.getLogger("dsr")


class CliError(Exception):
    def __init__(self, code: int, msg: str):
        super().__init__(msg)
        self.code = code


def resolve_feeder_path(name: str) -> Path:
    """A path on disk, else the name of a bundled fixture."""
    p = Path(name)
    if p.exists():
        return p
    data = importlib.resources.files("dsr") / "data"
    for cand in (name, f"{name}.json"):
        q = data / cand
        if q.is_file():
            return Path(str(q))
    return p


def _load(args) -> tuple[FeederModel, BlockPartition]:
    path = resolve_feeder_path(args.feeder)
    try:
        model = load_feeder(path)
    except (OSError, FeederError) as exc:
        raise CliError(EXIT_PARSE, f"cannot read feeder {args.feeder}: {exc}") from exc
    bad = validate_feeder(model)
    if bad:
        lines = "\n".join(f"  {v.object_id}: {v.rule} {v.message}".rstrip() for v in bad)
        raise CliError(EXIT_PARSE, f"feeder {args.feeder} is invalid:\n{lines}")
    return model, compute_load_blocks(model)


def _case(model: FeederModel, args) -> str:
    return model.name or Path(args.feeder).stem


def _opts(args) -> FormulationOptions:
    try:
        return FormulationOptions(
            switch_closures_per_step=None if args.closures < 0 else args.closures,
            monotone_restoration=not args.no_monotone,
            thermal_polygon_sides=args.polygon_sides,
            enforce_radiality=not args.no_radiality,
        )
    except BuildError as exc:
        raise CliError(EXIT_BUILD, str(exc)) from exc


def _solver(args) -> SolverConfig:
    try:
        return SolverConfig(
            command=args.solver_cmd,
            time_limit_s=args.time_limit,
            rel_gap=args.gap,
            keep_artifacts=args.keep_artifacts,
            workdir=str(Path(args.out_dir) / "artifacts") if args.keep_artifacts else None,
        )
    except ValueError as exc:
        raise CliError(EXIT_SOLVE, str(exc)) from exc


def _out(args) -> Path:
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _build(model, partition, kind, args):
    try:
        return build_dsr(model, partition, kind, _opts(args))
    except BuildError as exc:
        raise CliError(EXIT_BUILD, f"build failed: {exc}") from exc


def _solve(model, partition, kind, args) -> tuple[RestorationPlan, RunRecord]:
    milp, index, _ = _build(model, partition, kind, args)
    try:
        asg, stats = solve(milp, _solver(args))
        if not asg.has_solution:
            raise CliError(EXIT_SOLVE, f"{kind.value}: no solution ({asg.status.value})")
        plan = extract_plan(asg, index, model, partition, milp)
    except (SolverError, IntegralityError) as exc:
        raise CliError(EXIT_SOLVE, f"solve failed: {exc}") from exc
    plan.case = _case(model, args)
    rec = make_record(
        model,
        plan,
        binary_count=stats.binary_count,
        continuous_count=stats.continuous_count,
        solve_time_s=stats.wall_time_s,
        gap=stats.reported_gap,
    )
    return plan, rec


def _validate(model, partition, plan, args) -> dict:
    rep = check_plan(
        model,
        partition,
        plan,
        args.tol,
        closures_per_step=None if args.closures < 0 else args.closures,
        monotone=not args.no_monotone,
        polygon_sides=args.polygon_sides,
        radiality=not args.no_radiality,
    )
    return rep.to_dict()


def _kinds(args) -> list[FormulationKind]:
    try:
        return [FormulationKind.parse(args.kind)]
    except BuildError as exc:
        raise CliError(EXIT_BUILD, str(exc)) from exc


# --------------------------------------------------------------------------
# subcommands


def cmd_partition(args) -> int:
    model, part = _load(args)
    doc = {
        "case": _case(model, args),
        "blocks": [
            {"id": b.id, "buses": sorted(b.buses), "loads": list(b.loads), "dgs": list(b.dgs),
             "grid_forming_capable": b.has_gfm_capable}
            for b in part.blocks
        ],
    }
    graph = build_block_graph(part, model)
    doc["switch_edges"] = {k: list(e) for k, e in graph.switch_edges.items()}
    doc["degenerate_switches"] = sorted(graph.degenerate)
    doc["virtual_edges"] = [list(e) for e in graph.virtual_edges]
    path = _out(args) / f"{doc['case']}.blocks.json"
    path.write_text(json.dumps(doc, indent=2))
    for b in doc["blocks"]:
        print(f"block {b['id']}: buses={','.join(b['buses'])} loads={len(b['loads'])} dgs={','.join(b['dgs']) or '-'}")
    return EXIT_OK


def cmd_build(args) -> int:
    model, part = _load(args)
    (kind,) = _kinds(args)
    milp, index, report = _build(model, part, kind, args)
    stem = _out(args) / f"{_case(model, args)}.{kind.cli_name}"
    Path(f"{stem}.lp").write_text(write_lp(milp))
    Path(f"{stem}.vars.json").write_text(json.dumps(index.sidecar(milp)))
    print(f"{stem}.lp: {milp.binary_count} binaries, {milp.continuous_count} continuous, {len(milp.constraints)} constraints")
    for g, c in report.groups.items():
        print(f"  {g:14s} constraints={c.constraints:6d} variables={c.variables:6d} binaries={c.binaries:5d}")
    return EXIT_OK


def cmd_solve(args) -> int:
    model, part = _load(args)
    (kind,) = _kinds(args)
    plan, rec = _solve(model, part, kind, args)
    stem = _out(args) / f"{rec.case}.{kind.cli_name}"
    Path(f"{stem}.plan.json").write_text(plan.to_json())
    print(f"{stem}.plan.json: objective={plan.objective} delivered={rec.delivered_mwh:.6f} MWh")
    return EXIT_OK


def cmd_validate(args) -> int:
    model, part = _load(args)
    try:
        plan = RestorationPlan.from_json(Path(args.plan).read_text())
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CliError(EXIT_PARSE, f"cannot read plan {args.plan}: {exc}") from exc
    rep = _validate(model, part, plan, args)
    print(json.dumps(rep, indent=2))
    return EXIT_OK if rep["passed"] else EXIT_VALIDATE


def cmd_run(args) -> int:
    model, part = _load(args)
    (kind,) = _kinds(args)
    plan, rec = _solve(model, part, kind, args)
    out = _out(args)
    stem = out / f"{rec.case}.{kind.cli_name}"
    Path(f"{stem}.plan.json").write_text(plan.to_json())
    rep = _validate(model, part, plan, args)
    Path(f"{stem}.validation.json").write_text(json.dumps(rep, indent=2))
    Path(f"{stem}.record.json").write_text(json.dumps(asdict(rec), indent=2))
    print(emit_stats_table([rec]), end="")
    if not rep["passed"]:
        print(f"validation failed: {len(rep['failures'])} violations", file=sys.stderr)
        return EXIT_VALIDATE
    return EXIT_OK


def cmd_diagram(args) -> int:
    model, part = _load(args)
    try:
        plan = RestorationPlan.from_json(Path(args.plan).read_text())
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CliError(EXIT_PARSE, f"cannot read plan {args.plan}: {exc}") from exc
    try:
        dot = emit_dot(model, part, plan, args.t)
    except IndexError as exc:
        raise CliError(EXIT_PARSE, str(exc)) from exc
    if args.output == "-":
        print(dot, end="")
    else:
        Path(args.output).write_text(dot)
    return EXIT_OK


def cmd_bench(args) -> int:
    model, part = _load(args)
    records, failed = [], False
    for kind in FormulationKind:
        plan, rec = _solve(model, part, kind, args)
        rep = _validate(model, part, plan, args)
        failed |= not rep["passed"]
        records.append(rec)
        Path(_out(args) / f"{rec.case}.{kind.cli_name}.plan.json").write_text(plan.to_json())
    table = emit_stats_table(records)
    print(table, end="")
    _out(args).joinpath(f"{records[0].case}.bench.txt").write_text(table)
    _out(args).joinpath(f"{records[0].case}.bench.csv").write_text(emit_stats_csv(records))
    return EXIT_VALIDATE if failed else EXIT_OK


# --------------------------------------------------------------------------


def _common(suppress: bool) -> argparse.ArgumentParser:
    # flags are accepted before and after the subcommand; the copy attached
    # to subcommands must not overwrite values given before it
    def dflt(v):
        return argparse.SUPPRESS if suppress else v

    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("solver and output")
    g.add_argument("--solver-cmd", default=dflt(None),
                   help="command template with {lp} {sol} {time_limit} {gap}, or a preset: cbc, highs")
    g.add_argument("--time-limit", type=float, default=dflt(3000.0), help="seconds (default 3000)")
    g.add_argument("--gap", type=float, default=dflt(1e-4), help="relative optimality gap (default 1e-4)")
    g.add_argument("--out-dir", default=dflt("dsr_out"))
    g.add_argument("--keep-artifacts", action="store_true", default=dflt(False),
                   help="keep LP/solution files under OUT_DIR/artifacts")
    g.add_argument("-v", "--verbose", action="store_true", default=dflt(False))
    f = common.add_argument_group("formulation")
    f.add_argument("--closures-per-step", "--closures", dest="closures", type=int, default=dflt(1),
                   help="switch closures per step; negative for unlimited")
    f.add_argument("--no-radiality", action="store_true", default=dflt(False), help="drop the radiality constraints")
    f.add_argument("--no-monotone", action="store_true", default=dflt(False), help="allow blocks to be de-energized again")
    f.add_argument("--polygon-sides", type=int, default=dflt(8), choices=(4, 8, 16))
    f.add_argument("--tol", type=float, default=dflt(1e-5), help="validation tolerance, per-unit")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common(suppress=True)
    p = argparse.ArgumentParser(prog="dsr", description=__doc__, parents=[_common(suppress=False)])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help, kind=False, plan=False):
        sp = sub.add_parser(name, help=help, parents=[common])
        sp.add_argument("feeder", help="feeder JSON file or bundled fixture name")
        if kind:
            sp.add_argument("--kind", default="block", help="traditional, block or block-gfm")
        if plan:
            sp.add_argument("plan", help="plan JSON written by solve/run")
        sp.set_defaults(func=fn)
        return sp

    add("partition", cmd_partition, "compute load blocks")
    add("build", cmd_build, "write the MILP as an LP file plus variable sidecar", kind=True)
    add("solve", cmd_solve, "build and solve, write the plan", kind=True)
    add("run", cmd_run, "solve, validate and report one kind", kind=True)
    add("validate", cmd_validate, "check a plan against the feeder", plan=True)
    d = add("diagram", cmd_diagram, "Graphviz one-line diagram of a plan timestep", plan=True)
    d.add_argument("-t", type=int, default=0, help="timestep")
    d.add_argument("-o", "--output", default="-")
    add("bench", cmd_bench, "run every kind and emit the comparison table")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"dsr: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
