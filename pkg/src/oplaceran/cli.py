"""Operator command line: run scenarios, drive a service, inspect results.

Exit codes: 0 success, 3 infeasible placement, 2 usage error, 1 internal
error. ``OPLACERAN_DATA_DIR`` provides the default ``--data-dir``.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .catalogs import dump_doc, load_scenario, scenario_doc
from .errors import InfeasibleRequest, OplaceranError, TooLarge
from .feasibility import request_from_scenario, result_doc
from .oracle import OBJECTIVE_KINDS, brute_force_oracle
from .placer import ExternalInputs, Orchestrator, record_doc
from .service import OrchestratorService, ServiceClient
from .solvers import SolverRegistry, register_built_ins

DEFAULT_SERVICE = "http://127.0.0.1:8080"


def _data_dir(args) -> Path | None:
    if getattr(args, "data_dir", None):
        return Path(args.data_dir)
    env = os.environ.get("OPLACERAN_DATA_DIR")
    return Path(env) if env else None


def _fmt(value) -> str:
    if isinstance(value, float) and value == int(value):
        return str(int(value))
    return str(value)


def format_placement_table(result: dict) -> str:
    rows = [("chain", "vRU", "vDU", "vCU", "kind", "fronthaul_ms", "midhaul_ms", "backhaul_ms")]
    latencies = result.get("segment_latencies", {})
    for p in result["placements"]:
        lats = latencies.get(p["chain_id"], {})
        rows.append(
            (
                p["chain_id"],
                p["vru_node"],
                p["vdu_node"],
                p["vcu_node"],
                p["scenario_kind"],
                _fmt(lats.get("fronthaul_ms", "")),
                _fmt(lats.get("midhaul_ms", "")),
                _fmt(lats.get("backhaul_ms", "")),
            )
        )
    widths = [max(len(str(row[i])) for row in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(str(cell).ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    objective = result["objective"]
    lines.append(
        f"objective: cr_count={objective['cr_count']} "
        f"cn_distance={objective['cn_distance']} cost={objective['cost']}"
    )
    return "\n".join(lines)


def format_events(events: list[dict]) -> str:
    return "\n".join(
        f" {e['step']:02d} {e['name']:<26} {e['detail']}".rstrip() for e in events
    )


def _print_record(record: dict, fmt: str) -> None:
    if fmt == "doc":
        print(dump_doc(record), end="")
        return
    if record.get("placement"):
        print(format_placement_table(record["placement"]))
        print()
    print("workflow events:")
    print(format_events(record["events"]))
    print(f"outcome: {record['outcome']}")
    if record.get("error"):
        print(f"error: {record['error']}", file=sys.stderr)


def _record_exit_code(record: dict) -> int:
    outcome = record["outcome"]
    if outcome == "Deployed":
        return 0
    if outcome == "Infeasible":
        print("infeasible placement", file=sys.stderr)
        return 3
    return 1


# -- subcommands -----------------------------------------------------------------


def cmd_serve(args) -> int:
    orchestrator = Orchestrator(data_dir=_data_dir(args))
    if args.scenario:
        orchestrator.load_scenario(args.scenario)
    service = OrchestratorService(orchestrator, host=args.host, port=args.port)
    print(f"serving on {service.url}")
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        service.stop()
    return 0


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    solver_id = args.solver or scenario.solver_id
    if args.offline:
        orchestrator = Orchestrator(data_dir=_data_dir(args))
        orchestrator.load_scenario(scenario)
        record = orchestrator.run_workflow(
            ExternalInputs(
                operator_chains=list(scenario.chains),
                topology_source=None,
                solver_id=solver_id,
            )
        )
        orchestrator.shutdown()
        doc = record_doc(record)
    else:
        client = ServiceClient(args.service)
        status, body = client.post(
            "/orchestrations",
            {"scenario": scenario_doc(scenario), "solver_id": solver_id},
        )
        if status >= 400:
            print(f"service error: {body.get('message', body)}", file=sys.stderr)
            return 1
        status, doc = client.get(f"/orchestrations/{body['run_id']}")
        if status >= 400:
            print(f"service error: {doc.get('message', doc)}", file=sys.stderr)
            return 1
    _print_record(doc, args.format)
    return _record_exit_code(doc)


def cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    topology = scenario.topology
    print(
        f"scenario valid: {len(topology.nodes)} nodes, {len(topology.links)} links, "
        f"{len(scenario.chains)} chains, solver {scenario.solver_id}"
    )
    return 0


def cmd_timeline(args) -> int:
    if args.service:
        client = ServiceClient(args.service)
        status, body = client.get(f"/deployments/{args.deployment}/timeline")
        if status >= 400:
            message = body.get("message", body) if isinstance(body, dict) else body
            print(f"service error: {message}", file=sys.stderr)
            return 1
        text = body
    else:
        data_dir = _data_dir(args)
        if data_dir is None:
            print("timeline needs --service or a data dir", file=sys.stderr)
            return 1
        path = data_dir / "timelines" / f"{args.deployment}.log"
        if not path.exists():
            print(f"no timeline for deployment {args.deployment}", file=sys.stderr)
            return 1
        text = path.read_text()
    Path(args.out).write_text(text)
    print(f"wrote {args.out}")
    return 0


def cmd_compare(args) -> int:
    scenario = load_scenario(args.scenario)
    registry = SolverRegistry()
    register_built_ins(registry)
    solver_ids = [s.strip() for s in args.solvers.split(",") if s.strip()]
    rows = [("solver", "cr_count", "cn_distance", "cost", "solve_time_s")]
    for solver_id in solver_ids:
        request = request_from_scenario(scenario, solver_id)
        try:
            result = registry.solve(request)
            objective = result.objective
            rows.append(
                (
                    solver_id,
                    str(objective.cr_count),
                    str(objective.cn_distance),
                    str(objective.cost),
                    f"{result.solve_time:.4f}",
                )
            )
        except InfeasibleRequest:
            rows.append((solver_id, "infeasible", "-", "-", "-"))
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    for row in rows:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return 0


def cmd_oracle(args) -> int:
    scenario = load_scenario(args.scenario)
    request = request_from_scenario(scenario)
    try:
        result = brute_force_oracle(request, args.objective)
    except TooLarge as exc:
        print(f"instance too large for the oracle: {exc}", file=sys.stderr)
        return 1
    except InfeasibleRequest as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    if args.format == "doc":
        print(dump_doc(result_doc(result)), end="")
    else:
        print(format_placement_table(result_doc(result)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oplaceran",
        description="placement orchestrator for virtualized RAN chains",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--data-dir", default=None)
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--scenario", default=None, help="optional scenario to preload")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("run", help="run the full workflow for a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--solver", default=None)
    p.add_argument("--offline", action="store_true", help="run in-process, no service")
    p.add_argument("--service", default=DEFAULT_SERVICE)
    p.add_argument("--data-dir", default=None)
    p.add_argument("--format", choices=("table", "doc"), default="table")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("validate", help="parse and validate a scenario file")
    p.add_argument("--scenario", required=True)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("timeline", help="export a deployment's timeline log")
    p.add_argument("--deployment", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--service", default=None)
    p.add_argument("--data-dir", default=None)
    p.set_defaults(fn=cmd_timeline)

    p = sub.add_parser("compare", help="run several solvers and compare objectives")
    p.add_argument("--scenario", required=True)
    p.add_argument("--solvers", required=True, help="comma-separated solver ids")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("oracle", help="run the brute-force enumeration oracle")
    p.add_argument("--scenario", required=True)
    p.add_argument("--objective", choices=OBJECTIVE_KINDS, default="aggregation")
    p.add_argument("--format", choices=("table", "doc"), default="table")
    p.set_defaults(fn=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except OplaceranError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
