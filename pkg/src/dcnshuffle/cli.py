"""Command-line front end.

Exit codes: 0 success, 1 usage or validation error, 2 solver or
infeasibility error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (
    DcnShuffleError,
    FatalScenarioError,
    InfeasibleError,
    ResourceError,
    SolverError,
)
from .failures import NO_FAILURE, FailureScenario, apply_scenario, load_suite, scenario_from_document
from .harness import MB_PER_GB, emit_report, load_config, run_suite, solve_instance
from .lpsolve import OPTIMAL, solve
from .optmodel import build_stage1, build_stage2, export_lp
from .topology import ARCHITECTURES, FAMILY_DEFAULTS, build_topology, read_topology, save_topology, validate_topology
from .workload import default_placement, make_graysort_demands, placement_from_document, validate_placement

EXIT_OK, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2

_FAMILY_PARAMS = sorted({name for defaults in FAMILY_DEFAULTS.values() for name in defaults})


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_topology_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    src = p.add_mutually_exclusive_group(required=required)
    src.add_argument("--arch", choices=ARCHITECTURES, help="generate a topology of this family")
    src.add_argument("--topology", metavar="DOC", help="topology document (JSON)")
    fam = p.add_argument_group("generator parameters")
    for name in _FAMILY_PARAMS:
        fam.add_argument("--" + name.replace("_", "-"), dest="fam_" + name, type=int, metavar="N")
    fam.add_argument("--capacity", type=float, metavar="MBPS", help="link capacity, MBytes/s")
    p.add_argument("--server-rate", type=float, metavar="MBPS", help="per-server rate cap, MBytes/s")


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    _add_topology_args(p)
    p.add_argument("--placement", metavar="DOC", help="placement document (default: first 10 mappers, next 6 reducers)")
    p.add_argument("--volume-gb", type=float, default=1.0, help="total shuffle volume in GBytes (default 1)")
    p.add_argument("--fail", action="append", default=[], metavar="LINK", help="failed link id or label; repeatable")
    p.add_argument("--scenarios", metavar="DOC", help="scenario suite; pick one with --scenario")
    p.add_argument("--scenario", metavar="NAME")
    p.add_argument("--per-demand", action="store_true", help="one commodity per demand instead of per mapper")


def _topology(args):
    params = {n: getattr(args, "fam_" + n) for n in _FAMILY_PARAMS if getattr(args, "fam_" + n) is not None}
    if args.capacity is not None:
        params["capacity"] = args.capacity
    if args.topology:
        if params:
            raise UsageError("generator parameters only apply with --arch")
        t = read_topology(args.topology)
    else:
        t = build_topology(args.arch, params)
    if args.server_rate is not None:
        t = t.with_server_rate_cap(args.server_rate)
    return t


def _placement(t, args):
    if not args.placement:
        return default_placement(t)
    return placement_from_document(t, json.loads(Path(args.placement).read_text()))


def _scenario(t, args) -> FailureScenario:
    if args.scenario and args.fail:
        raise UsageError("use either --fail or --scenario")
    if args.scenario:
        if not args.scenarios:
            raise UsageError("--scenario needs --scenarios")
        if args.scenario == NO_FAILURE.name:
            return NO_FAILURE
        for s in load_suite(t, Path(args.scenarios).read_text()):
            if s.name == args.scenario:
                return s
        raise UsageError(f"no scenario named {args.scenario!r} in {args.scenarios}")
    if args.fail:
        refs = [int(x) if x.isdigit() else x for x in args.fail]
        return scenario_from_document(t, {"name": "cli", "failed_links": refs})
    return NO_FAILURE


def _write(text: str, output: str | None) -> None:
    if output and output != "-":
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    suite = load_config(args.config)
    if args.workers:
        for cfg in suite.experiments:
            cfg.parallelism = args.workers
    report = run_suite(suite)
    out = Path(args.output) if args.output else suite.output_path
    for path in emit_report(report, out, args.format):
        print(path)
    return EXIT_OK


def cmd_solve(args) -> int:
    t = _topology(args)
    d = make_graysort_demands(args.volume_gb * MB_PER_GB, _placement(t, args), t)
    s = _scenario(t, args)
    res = solve_instance(t, d, s, epsilon=args.epsilon, aggregate=not args.per_demand, stage2=not args.no_stage2)
    if res.fatality.fatal:
        print(f"scenario {s.name}: fatal, {len(res.fatality.demands)} demand(s) disconnected: "
              f"{', '.join(map(str, res.fatality.demands))}")
        return EXIT_SOLVER
    print(f"topology      {t.arch_tag}")
    print(f"scenario      {s.name} ({len(s.failed_links)} failed link(s))")
    print(f"volume        {args.volume_gb:g} GB")
    print(f"lambda*       {res.lam:.10g} 1/s")
    print(f"T*            {res.completion_time:.10g} s")
    if not args.no_stage2:
        print(f"active power  {res.active_power:.6g} W ({len(res.active_nodes)} active element(s))")
        print(f"idle power    {res.idle_power:.6g} W")
        print(f"energy        {res.energy:.6g} J")
    arcs = {a.id: a for a in t.arcs()}
    busiest = sorted(res.flows.items(), key=lambda kv: (-kv[1] / arcs[kv[0]].capacity, kv[0]))
    print(f"flows         {len(res.flows)} arc(s) carry traffic; busiest:")
    for arc_id, f in busiest[: args.top]:
        a = arcs[arc_id]
        print(f"  {t.nodes[a.tail].label} -> {t.nodes[a.head].label}: "
              f"{f:.6g} MB/s ({100 * f / a.capacity:.1f}% of capacity)")
    return EXIT_OK


def cmd_export_lp(args) -> int:
    t = _topology(args)
    d = make_graysort_demands(args.volume_gb * MB_PER_GB, _placement(t, args), t)
    failed = apply_scenario(t, _scenario(t, args))
    model = build_stage1(failed, d, aggregate=not args.per_demand)
    if args.stage == 2:
        sol = solve(model)
        if sol.status != OPTIMAL:
            raise InfeasibleError(f"stage 1 is {sol.status}; cannot pin stage 2")
        model = build_stage2(failed, d, sol.objective_value, args.epsilon, aggregate=not args.per_demand)
    _write(export_lp(model), args.output)
    return EXIT_OK


def cmd_validate(args) -> int:
    problems: list[str] = []
    try:
        t = _topology(args)
    except DcnShuffleError as exc:
        print(f"topology: {exc}", file=sys.stderr)
        for v in getattr(exc, "violations", ()):
            print(f"  {v}", file=sys.stderr)
        return EXIT_USAGE
    problems += [f"topology: {v}" for v in validate_topology(t)]
    if args.placement:
        try:
            p = _placement(t, args)
            problems += [f"placement: {v}" for v in validate_placement(t, p)]
        except DcnShuffleError as exc:
            problems.append(f"placement: {exc}")
    if args.scenarios:
        try:
            n = len(load_suite(t, Path(args.scenarios).read_text()))
        except DcnShuffleError as exc:
            problems.append(f"scenarios: {exc}")
        else:
            if not problems:
                print(f"{n} scenario(s) ok")
    for v in problems:
        print(v, file=sys.stderr)
    if problems:
        return EXIT_USAGE
    print(f"ok: {t.arch_tag}, {len(t.nodes)} nodes, {len(t.links)} links")
    return EXIT_OK


def cmd_gen_topology(args) -> int:
    t = _topology(args)
    _write(save_topology(t), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dcnshuffle", description="Shuffle completion time and energy in data-center networks under link failures.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run a suite config and write report files")
    p.add_argument("--config", required=True)
    p.add_argument("--output", metavar="DIR", help="override the config's output_dir")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, metavar="N", help="worker processes per experiment")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("solve", help="solve one instance and print T* and a flow summary")
    _add_instance_args(p)
    p.add_argument("--epsilon", type=float, default=0.0, help="stage-2 throughput slack")
    p.add_argument("--no-stage2", action="store_true", help="skip the energy stage")
    p.add_argument("--top", type=int, default=10, help="number of busiest arcs to list")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("export-lp", help="write the model in LP format")
    _add_instance_args(p)
    p.add_argument("--stage", type=int, choices=(1, 2), default=1)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--output", "-o", metavar="FILE", help="default: stdout")
    p.set_defaults(func=cmd_export_lp)

    p = sub.add_parser("validate", help="check topology, placement and scenario documents")
    _add_topology_args(p)
    p.add_argument("--placement", metavar="DOC")
    p.add_argument("--scenarios", metavar="DOC")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("gen-topology", help="write a generated topology document")
    _add_topology_args(p)
    p.add_argument("--output", "-o", metavar="FILE", help="default: stdout")
    p.set_defaults(func=cmd_gen_topology)
    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (InfeasibleError, SolverError, ResourceError, FatalScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except DcnShuffleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for v in getattr(exc, "violations", ()):
            print(f"  {v}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(cli_main())
