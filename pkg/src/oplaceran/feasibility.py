"""Placement feasibility kernel shared by every solver, the oracle and the tests.

A placement is feasible when, simultaneously:

* every chain segment's path latency is within its split-profile bound,
* every link carries at most its available bandwidth, summing the bit
  rates of all chain segments routed over it,
* every worker hosts at most its free CPU and memory, summing the demands
  of all functions placed on it (the pinned vRUs included),
* co-located segments (empty path) consume no link bandwidth.

All latency arithmetic uses exact rationals so verdicts never depend on
float summation order. Violations are returned as data, never raised.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .catalogs import NfviResourceEntry, Scenario
from .errors import ValidationError
from .model import (
    Chain,
    ChainPlacement,
    CnfSpec,
    ComputeCapacity,
    CrosshaulTopology,
    LinkId,
    NodeId,
    NodeKind,
    PathFinder,
    RadioFunction,
    SplitProfile,
    Violation,
    classify_scenario,
    validate_topology,
)


@dataclass
class PlacementRequest:
    """Everything a solver needs: infrastructure view, demand and constraints."""

    topology: CrosshaulTopology
    nfvi: list[NfviResourceEntry]
    chains: list[Chain]
    split_profile: SplitProfile
    cnf_specs: dict[RadioFunction, CnfSpec]
    solver_id: str
    nfvi_seq: int = 0

    def free_capacity(self) -> dict[NodeId, ComputeCapacity]:
        return {e.node: e.free for e in self.nfvi}


@dataclass(frozen=True)
class ObjectiveValue:
    """Solver objective components.

    ``cr_count`` counts distinct workers hosting at least one vDU or vCU
    (pinned vRUs excluded), ``cn_distance`` sums each chain's vCU-to-core
    hop count, and ``cost`` is the weighted cost used by the du-pinned
    solver (zero for the others).
    """

    cr_count: int
    cn_distance: int
    cost: Fraction = Fraction(0)


@dataclass
class PlacementResult:
    placements: list[ChainPlacement]
    objective: ObjectiveValue
    link_reservations: dict[LinkId, float]
    node_loads: dict[NodeId, ComputeCapacity]
    solver_id: str
    solve_time: float = 0.0
    segment_latencies: dict[str, tuple[float, float, float]] = field(default_factory=dict)

    def host_set(self) -> set[NodeId]:
        """Workers hosting at least one vDU or vCU."""
        hosts: set[NodeId] = set()
        for p in self.placements:
            hosts.add(p.vdu_node)
            hosts.add(p.vcu_node)
        return hosts


@dataclass
class FeasibilityVerdict:
    violations: list[Violation] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not self.violations


def _fmt(value) -> str:
    value = float(value)
    return str(int(value)) if value == int(value) else str(value)


def validate_request(request: PlacementRequest) -> None:
    """Raise ValidationError unless the request's own invariants hold."""
    report = validate_topology(request.topology)
    if not report.ok:
        raise ValidationError(
            "invalid topology: " + "; ".join(str(v) for v in report.violations),
            violations=report.violations,
        )
    workers = set(request.topology.workers())
    pins: set[NodeId] = set()
    for chain in request.chains:
        if chain.vru_node not in workers:
            raise ValidationError(
                f"chain {chain.chain_id}: vRU pin {chain.vru_node} is not a compute worker"
            )
        if chain.vru_node in pins:
            raise ValidationError(
                f"chain {chain.chain_id}: worker {chain.vru_node} already has a vRU pinned"
            )
        pins.add(chain.vru_node)
    known = {n.id for n in request.topology.nodes}
    for entry in request.nfvi:
        if entry.node not in known:
            raise ValidationError(f"nfvi entry references unknown node {entry.node}")
    for function in RadioFunction:
        if function not in request.cnf_specs:
            raise ValidationError(f"missing CnfSpec for {function.value}")


def check_feasibility(
    placements: list[ChainPlacement], request: PlacementRequest
) -> FeasibilityVerdict:
    """Evaluate a full assignment against the request; violations itemize the breaches."""
    verdict = FeasibilityVerdict()
    topology = request.topology
    link_map = topology.link_map()
    workers = set(topology.workers())
    cn = topology.core_anchor()

    chain_by_id = {c.chain_id: c for c in request.chains}
    placed_ids = [p.chain_id for p in placements]
    if sorted(placed_ids) != sorted(chain_by_id):
        verdict.violations.append(
            Violation(
                kind="chain-cover",
                message=(
                    f"placements cover {sorted(placed_ids)} but request has "
                    f"{sorted(chain_by_id)}"
                ),
            )
        )
        return verdict

    profile = request.split_profile
    bitrates = {
        "fronthaul": profile.fronthaul_o6.bitrate,
        "midhaul": profile.midhaul_o2.bitrate,
        "backhaul": profile.backhaul_cn.bitrate,
    }
    bounds = {
        "fronthaul": Fraction(profile.fronthaul_o6.max_latency),
        "midhaul": Fraction(profile.midhaul_o2.max_latency),
        "backhaul": Fraction(profile.backhaul_cn.max_latency),
    }

    link_load: dict[LinkId, float] = {}
    node_load: dict[NodeId, ComputeCapacity] = {}

    for placement in placements:
        chain = chain_by_id[placement.chain_id]
        if placement.vru_node != chain.vru_node:
            verdict.violations.append(
                Violation(
                    kind="pin-mismatch",
                    chain_id=placement.chain_id,
                    node_id=placement.vru_node,
                    message=(
                        f"chain {placement.chain_id} vRU placed on {placement.vru_node}, "
                        f"pinned to {chain.vru_node}"
                    ),
                )
            )
        for role, node in (
            ("vRU", placement.vru_node),
            ("vDU", placement.vdu_node),
            ("vCU", placement.vcu_node),
        ):
            if node not in workers:
                verdict.violations.append(
                    Violation(
                        kind="non-worker-host",
                        chain_id=placement.chain_id,
                        node_id=node,
                        message=f"chain {placement.chain_id} {role} host {node} is not a worker",
                    )
                )

        segments = [
            ("fronthaul", placement.vru_node, placement.vdu_node, placement.fronthaul_path),
            ("midhaul", placement.vdu_node, placement.vcu_node, placement.midhaul_path),
            ("backhaul", placement.vcu_node, cn, placement.backhaul_path),
        ]
        for segment, src, dst, path in segments:
            if src == dst:
                if path:
                    verdict.violations.append(
                        Violation(
                            kind="path-structure",
                            chain_id=placement.chain_id,
                            message=(
                                f"chain {placement.chain_id} {segment} path non-empty for "
                                f"co-located endpoints"
                            ),
                        )
                    )
                continue
            ok, latency = _walk_path(path, src, dst, link_map)
            if not ok:
                verdict.violations.append(
                    Violation(
                        kind="path-structure",
                        chain_id=placement.chain_id,
                        message=(
                            f"chain {placement.chain_id} {segment} path does not connect "
                            f"{src} to {dst}"
                        ),
                    )
                )
                continue
            if latency > bounds[segment]:
                verdict.violations.append(
                    Violation(
                        kind="latency",
                        chain_id=placement.chain_id,
                        message=(
                            f"chain {placement.chain_id} {segment} latency "
                            f"{_fmt(latency)} > {_fmt(bounds[segment])}"
                        ),
                    )
                )
            for link_id in path:
                link_load[link_id] = link_load.get(link_id, 0) + bitrates[segment]

        # Compute demand per hosting worker, vRU included on its pin.
        for function, node in (
            (RadioFunction.VRU, placement.vru_node),
            (RadioFunction.VDU, placement.vdu_node),
            (RadioFunction.VCU, placement.vcu_node),
        ):
            demand = request.cnf_specs[function].demand
            node_load[node] = node_load.get(node, ComputeCapacity.zero()) + demand

    free = request.free_capacity()
    for node in sorted(node_load):
        load = node_load[node]
        avail = free.get(node, ComputeCapacity.zero())
        if load.cpu > avail.cpu:
            verdict.violations.append(
                Violation(
                    kind="node-cpu",
                    node_id=node,
                    message=f"node {node} cpu {_fmt(load.cpu)} > {_fmt(avail.cpu)}",
                )
            )
        if load.memory > avail.memory:
            verdict.violations.append(
                Violation(
                    kind="node-memory",
                    node_id=node,
                    message=f"node {node} memory {_fmt(load.memory)} > {_fmt(avail.memory)}",
                )
            )

    for link_id in sorted(link_load):
        link = link_map.get(link_id)
        if link is None:
            verdict.violations.append(
                Violation(
                    kind="path-structure",
                    link_id=link_id,
                    message=f"path references unknown link {link_id}",
                )
            )
            continue
        if link_load[link_id] > link.residual:
            verdict.violations.append(
                Violation(
                    kind="link-bandwidth",
                    link_id=link_id,
                    message=(
                        f"link {link_id} bandwidth {_fmt(link_load[link_id])} > "
                        f"{_fmt(link.residual)}"
                    ),
                )
            )
    return verdict


def _walk_path(path, src, dst, link_map) -> tuple[bool, Fraction]:
    """Check the link sequence forms a walk src -> dst; return its total latency."""
    at = src
    total = Fraction(0)
    for link_id in path:
        link = link_map.get(link_id)
        if link is None or at not in link.endpoints:
            return False, total
        total += Fraction(link.latency)
        at = link.other_end(at)
    return at == dst, total


def aggregate_loads(
    placements: list[ChainPlacement],
    cnf_specs: dict[RadioFunction, CnfSpec],
    split_profile: SplitProfile,
) -> tuple[dict[NodeId, ComputeCapacity], dict[LinkId, float]]:
    """Per-node demand sums and per-link bandwidth sums implied by an assignment."""
    node_loads: dict[NodeId, ComputeCapacity] = {}
    link_loads: dict[LinkId, float] = {}
    bitrate = {
        "fronthaul": split_profile.fronthaul_o6.bitrate,
        "midhaul": split_profile.midhaul_o2.bitrate,
        "backhaul": split_profile.backhaul_cn.bitrate,
    }
    for p in placements:
        for function, node in (
            (RadioFunction.VRU, p.vru_node),
            (RadioFunction.VDU, p.vdu_node),
            (RadioFunction.VCU, p.vcu_node),
        ):
            demand = cnf_specs[function].demand
            node_loads[node] = node_loads.get(node, ComputeCapacity.zero()) + demand
        for segment, path in (
            ("fronthaul", p.fronthaul_path),
            ("midhaul", p.midhaul_path),
            ("backhaul", p.backhaul_path),
        ):
            for link_id in path:
                link_loads[link_id] = link_loads.get(link_id, 0) + bitrate[segment]
    return node_loads, link_loads


def objective_for(
    placements: list[ChainPlacement],
    cost: Fraction = Fraction(0),
) -> ObjectiveValue:
    hosts: set[NodeId] = set()
    cn_distance = 0
    for p in placements:
        hosts.add(p.vdu_node)
        hosts.add(p.vcu_node)
        cn_distance += len(p.backhaul_path)
    return ObjectiveValue(
        cr_count=len(hosts) if placements else 0,
        cn_distance=cn_distance,
        cost=cost,
    )


def segment_latencies_for(
    placements: list[ChainPlacement], topology: CrosshaulTopology
) -> dict[str, tuple[float, float, float]]:
    link_map = topology.link_map()

    def path_latency(path) -> float:
        return float(sum((Fraction(link_map[l].latency) for l in path), Fraction(0)))

    return {
        p.chain_id: (
            path_latency(p.fronthaul_path),
            path_latency(p.midhaul_path),
            path_latency(p.backhaul_path),
        )
        for p in placements
    }


def make_result(
    placements: list[ChainPlacement],
    request: PlacementRequest,
    solver_id: str,
    cost: Fraction = Fraction(0),
) -> PlacementResult:
    """Assemble a PlacementResult and re-check it through the kernel."""
    placements = sorted(placements, key=lambda p: p.chain_id)
    node_loads, link_loads = aggregate_loads(
        placements, request.cnf_specs, request.split_profile
    )
    verdict = check_feasibility(placements, request)
    if not verdict.feasible:
        raise RuntimeError(
            "solver produced an infeasible assignment: "
            + "; ".join(str(v) for v in verdict.violations)
        )
    return PlacementResult(
        placements=placements,
        objective=objective_for(placements, cost),
        link_reservations=link_loads,
        node_loads=node_loads,
        solver_id=solver_id,
        segment_latencies=segment_latencies_for(placements, request.topology),
    )


def request_from_scenario(scenario: Scenario, solver_id: str | None = None) -> PlacementRequest:
    request = PlacementRequest(
        topology=scenario.topology,
        nfvi=list(scenario.nfvi),
        chains=list(scenario.chains),
        split_profile=scenario.split_profile,
        cnf_specs=dict(scenario.cnf_specs),
        solver_id=solver_id or scenario.solver_id,
    )
    validate_request(request)
    return request


# ---------------------------------------------------------------------------
# Document encoding (wire/persistence form of results)
# ---------------------------------------------------------------------------


def placement_doc(placement: ChainPlacement) -> dict:
    return {
        "chain_id": placement.chain_id,
        "vru_node": placement.vru_node,
        "vdu_node": placement.vdu_node,
        "vcu_node": placement.vcu_node,
        "fronthaul_path": list(placement.fronthaul_path),
        "midhaul_path": list(placement.midhaul_path),
        "backhaul_path": list(placement.backhaul_path),
        "splits_used": sorted(s.value for s in placement.splits_used),
        "scenario_kind": classify_scenario(placement).value,
    }


def result_doc(result: PlacementResult) -> dict:
    return {
        "solver_id": result.solver_id,
        "objective": {
            "cr_count": result.objective.cr_count,
            "cn_distance": result.objective.cn_distance,
            "cost": str(result.objective.cost),
        },
        "placements": [placement_doc(p) for p in result.placements],
        "link_reservations": {k: result.link_reservations[k] for k in sorted(result.link_reservations)},
        "node_loads": {
            node: {"cpu": load.cpu, "memory": load.memory}
            for node, load in sorted(result.node_loads.items())
        },
        "segment_latencies": {
            chain: {
                "fronthaul_ms": lats[0],
                "midhaul_ms": lats[1],
                "backhaul_ms": lats[2],
            }
            for chain, lats in sorted(result.segment_latencies.items())
        },
        "solve_time": result.solve_time,
    }


def result_from_doc(doc: dict) -> PlacementResult:
    from .model import SplitOption, splits_for

    placements = []
    for p in doc["placements"]:
        placements.append(
            ChainPlacement(
                chain_id=p["chain_id"],
                vru_node=p["vru_node"],
                vdu_node=p["vdu_node"],
                vcu_node=p["vcu_node"],
                fronthaul_path=tuple(p["fronthaul_path"]),
                midhaul_path=tuple(p["midhaul_path"]),
                backhaul_path=tuple(p["backhaul_path"]),
                splits_used=splits_for(p["vru_node"], p["vdu_node"], p["vcu_node"]),
            )
        )
    objective = ObjectiveValue(
        cr_count=doc["objective"]["cr_count"],
        cn_distance=doc["objective"]["cn_distance"],
        cost=Fraction(doc["objective"]["cost"]),
    )
    return PlacementResult(
        placements=placements,
        objective=objective,
        link_reservations=dict(doc.get("link_reservations", {})),
        node_loads={
            node: ComputeCapacity(v["cpu"], v["memory"])
            for node, v in doc.get("node_loads", {}).items()
        },
        solver_id=doc["solver_id"],
        solve_time=doc.get("solve_time", 0.0),
        segment_latencies={
            chain: (v["fronthaul_ms"], v["midhaul_ms"], v["backhaul_ms"])
            for chain, v in doc.get("segment_latencies", {}).items()
        },
    )
