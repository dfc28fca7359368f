"""Core domain types: crosshaul topology, functional splits, chains, placements.

All types are plain value objects. Invariant checking lives in the explicit
``validate_*`` functions so that invalid data can be loaded, inspected and
reported instead of blowing up at construction time.

Units are fixed across the project: latency in milliseconds (fractional
allowed), bandwidth in Mbps, CPU in millicores, memory in MiB.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction

from .errors import NoPath

NodeId = str
LinkId = str


class NodeKind(Enum):
    COMPUTE_WORKER = "ComputeWorker"
    COMPUTE_MASTER = "ComputeMaster"
    VIRTUAL_SWITCH = "VirtualSwitch"
    PHYSICAL_SWITCH = "PhysicalSwitch"
    CORE_NETWORK_ANCHOR = "CoreNetworkAnchor"


class SplitOption(Enum):
    """Functional split interfaces: O2 is the vCU-vDU (F1) cut, O6 the vDU-vRU (nFAPI) cut."""

    O2 = "O2"
    O6 = "O6"


class RadioFunction(Enum):
    VRU = "vRU"
    VDU = "vDU"
    VCU = "vCU"


class ScenarioKind(Enum):
    FULLY_SPLIT = "FullySplit"
    CU_DU_COLOCATED = "CuDuColocated"
    CRAN_DU_RU_INTEGRATED = "CRan_DuRuIntegrated"
    DRAN_MONOLITHIC = "DRan_Monolithic"


@dataclass(frozen=True)
class TopologyNode:
    id: NodeId
    kind: NodeKind


@dataclass(frozen=True)
class Link:
    """Undirected link with guaranteed latency and reservable bandwidth.

    ``residual`` is the bandwidth still available for new reservations;
    a fresh topology has residual == capacity.
    """

    id: LinkId
    endpoints: tuple[NodeId, NodeId]
    latency: float
    capacity: float
    residual: float

    def other_end(self, node: NodeId) -> NodeId:
        a, b = self.endpoints
        return b if node == a else a


@dataclass
class CrosshaulTopology:
    nodes: list[TopologyNode] = field(default_factory=list)
    links: list[Link] = field(default_factory=list)

    def node_map(self) -> dict[NodeId, TopologyNode]:
        return {n.id: n for n in self.nodes}

    def link_map(self) -> dict[LinkId, Link]:
        return {l.id: l for l in self.links}

    def workers(self) -> list[NodeId]:
        return sorted(n.id for n in self.nodes if n.kind is NodeKind.COMPUTE_WORKER)

    def masters(self) -> list[NodeId]:
        return sorted(n.id for n in self.nodes if n.kind is NodeKind.COMPUTE_MASTER)

    def compute_nodes(self) -> list[NodeId]:
        return sorted(
            n.id
            for n in self.nodes
            if n.kind in (NodeKind.COMPUTE_WORKER, NodeKind.COMPUTE_MASTER)
        )

    def core_anchor(self) -> NodeId | None:
        anchors = [n.id for n in self.nodes if n.kind is NodeKind.CORE_NETWORK_ANCHOR]
        return anchors[0] if len(anchors) == 1 else None


@dataclass(frozen=True)
class ComputeCapacity:
    """CPU in millicores, memory in MiB."""

    cpu: int
    memory: int

    def __add__(self, other: "ComputeCapacity") -> "ComputeCapacity":
        return ComputeCapacity(self.cpu + other.cpu, self.memory + other.memory)

    def __sub__(self, other: "ComputeCapacity") -> "ComputeCapacity":
        return ComputeCapacity(self.cpu - other.cpu, self.memory - other.memory)

    def fits_within(self, other: "ComputeCapacity") -> bool:
        return self.cpu <= other.cpu and self.memory <= other.memory

    @classmethod
    def zero(cls) -> "ComputeCapacity":
        return cls(0, 0)


@dataclass(frozen=True)
class SegmentRequirement:
    """Per-segment transport requirement: latency bound (ms) and bit rate (Mbps)."""

    max_latency: float
    bitrate: float


@dataclass(frozen=True)
class SplitProfile:
    """Transport requirements for the three crosshaul segments.

    fronthaul_o6 covers vDU-vRU traffic, midhaul_o2 covers vCU-vDU traffic
    and backhaul_cn covers vCU to core-network traffic. Segment strictness
    must be ordered: fronthaul latency bound <= midhaul <= backhaul.
    """

    fronthaul_o6: SegmentRequirement
    midhaul_o2: SegmentRequirement
    backhaul_cn: SegmentRequirement

    def for_segment(self, segment: str) -> SegmentRequirement:
        return {
            "fronthaul": self.fronthaul_o6,
            "midhaul": self.midhaul_o2,
            "backhaul": self.backhaul_cn,
        }[segment]


@dataclass(frozen=True)
class CnfSpec:
    function: RadioFunction
    cpu_demand: int
    memory_demand: int
    image_ref: str

    @property
    def demand(self) -> ComputeCapacity:
        return ComputeCapacity(self.cpu_demand, self.memory_demand)


@dataclass(frozen=True)
class Chain:
    """One radio chain; its vRU is pinned to a compute worker."""

    chain_id: str
    vru_node: NodeId


@dataclass(frozen=True)
class ChainPlacement:
    """Placement of one chain's three functions plus the crosshaul paths between them.

    A path is the ordered list of link ids; it is empty exactly when its two
    endpoints are the same node. The backhaul path always ends at the core
    network anchor.
    """

    chain_id: str
    vru_node: NodeId
    vdu_node: NodeId
    vcu_node: NodeId
    fronthaul_path: tuple[LinkId, ...]
    midhaul_path: tuple[LinkId, ...]
    backhaul_path: tuple[LinkId, ...]
    splits_used: frozenset[SplitOption]

    def segment_paths(self) -> list[tuple[str, NodeId, NodeId, tuple[LinkId, ...]]]:
        return [
            ("fronthaul", self.vru_node, self.vdu_node, self.fronthaul_path),
            ("midhaul", self.vdu_node, self.vcu_node, self.midhaul_path),
            ("backhaul", self.vcu_node, "", self.backhaul_path),
        ]


@dataclass(frozen=True)
class Violation:
    """One broken constraint, itemized for reporting."""

    kind: str
    message: str
    chain_id: str | None = None
    node_id: NodeId | None = None
    link_id: LinkId | None = None

    def __str__(self) -> str:
        return self.message


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, message: str, **where) -> None:
        self.violations.append(Violation(kind=kind, message=message, **where))


def validate_topology(topology: CrosshaulTopology) -> ValidationReport:
    """Check all topology invariants; violations are returned, never raised."""
    report = ValidationReport()
    node_map = {}
    for node in topology.nodes:
        if not node.id:
            report.add("node-id", "empty node id")
            continue
        if node.id in node_map:
            report.add("node-id", f"duplicate node id {node.id}", node_id=node.id)
        node_map[node.id] = node

    anchors = [n.id for n in topology.nodes if n.kind is NodeKind.CORE_NETWORK_ANCHOR]
    if not anchors:
        report.add("cn-anchor", "missing CN anchor")
    elif len(anchors) > 1:
        report.add("cn-anchor", f"multiple CN anchors: {sorted(anchors)}")

    seen_pairs = set()
    for link in topology.links:
        if not link.id:
            report.add("link-id", "empty link id")
        a, b = link.endpoints
        for end in (a, b):
            if end not in node_map:
                report.add(
                    "link-endpoint",
                    f"link {link.id} references unknown node {end}",
                    link_id=link.id,
                )
        if a == b:
            report.add("link-endpoint", f"link {link.id} is a self-loop", link_id=link.id)
        pair = tuple(sorted((a, b)))
        if pair in seen_pairs:
            report.add(
                "link-duplicate",
                f"more than one link between {pair[0]} and {pair[1]}",
                link_id=link.id,
            )
        seen_pairs.add(pair)
        if link.latency < 0:
            report.add(
                "link-latency",
                f"link {link.id} has negative latency {link.latency}",
                link_id=link.id,
            )
        if link.capacity <= 0:
            report.add(
                "link-capacity",
                f"link {link.id} has non-positive capacity {link.capacity}",
                link_id=link.id,
            )
        if not 0 <= link.residual <= link.capacity:
            report.add(
                "link-residual",
                f"link {link.id} residual {link.residual} outside [0, {link.capacity}]",
                link_id=link.id,
            )

    if report.ok and anchors:
        # Connectivity: every compute node must reach the CN anchor.
        reachable = _reachable_from(topology, anchors[0])
        for node_id in topology.compute_nodes():
            if node_id not in reachable:
                report.add(
                    "disconnected",
                    f"node {node_id} disconnected from CN anchor {anchors[0]}",
                    node_id=node_id,
                )
    return report


def _reachable_from(topology: CrosshaulTopology, start: NodeId) -> set[NodeId]:
    adjacency: dict[NodeId, list[NodeId]] = {}
    for link in topology.links:
        a, b = link.endpoints
        adjacency.setdefault(a, []).append(b)
        adjacency.setdefault(b, []).append(a)
    seen = {start}
    frontier = [start]
    while frontier:
        node = frontier.pop()
        for nxt in adjacency.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


class PathFinder:
    """Minimum-latency single-path routing over a fixed topology.

    Ties are broken first by hop count, then by the lexicographically
    smallest node-id sequence, which makes routing fully deterministic.
    Latency sums are computed with exact rational arithmetic so that path
    comparison never depends on float summation order.
    """

    def __init__(self, topology: CrosshaulTopology) -> None:
        self._node_ids = {n.id for n in topology.nodes}
        self._adjacency: dict[NodeId, list[tuple[NodeId, Link]]] = {
            n.id: [] for n in topology.nodes
        }
        for link in topology.links:
            a, b = link.endpoints
            self._adjacency[a].append((b, link))
            self._adjacency[b].append((a, link))
        for neighbors in self._adjacency.values():
            neighbors.sort(key=lambda item: item[0])
        self._cache: dict[tuple[NodeId, NodeId], tuple[tuple[LinkId, ...], Fraction]] = {}

    def path(self, src: NodeId, dst: NodeId) -> tuple[tuple[LinkId, ...], Fraction]:
        """Return (ordered link ids, total latency ms) for the best src->dst path."""
        if src not in self._node_ids or dst not in self._node_ids:
            raise NoPath(f"unknown endpoint: {src if src not in self._node_ids else dst}")
        key = (src, dst)
        if key in self._cache:
            return self._cache[key]
        if src == dst:
            result = ((), Fraction(0))
            self._cache[key] = result
            return result

        # Dijkstra keyed on (latency, hops, node-id sequence); with
        # non-negative weights the first pop of dst is globally minimal
        # under the full lexicographic key.
        heap: list[tuple[Fraction, int, tuple[NodeId, ...], tuple[LinkId, ...]]] = [
            (Fraction(0), 0, (src,), ())
        ]
        done: set[NodeId] = set()
        while heap:
            latency, hops, node_seq, link_seq = heapq.heappop(heap)
            node = node_seq[-1]
            if node in done:
                continue
            done.add(node)
            if node == dst:
                result = (link_seq, latency)
                self._cache[key] = result
                return result
            for neighbor, link in self._adjacency[node]:
                if neighbor in done:
                    continue
                heapq.heappush(
                    heap,
                    (
                        latency + Fraction(link.latency),
                        hops + 1,
                        node_seq + (neighbor,),
                        link_seq + (link.id,),
                    ),
                )
        raise NoPath(f"no path from {src} to {dst}")

    def latency(self, src: NodeId, dst: NodeId) -> Fraction:
        return self.path(src, dst)[1]

    def hops(self, src: NodeId, dst: NodeId) -> int:
        return len(self.path(src, dst)[0])


def min_latency_path(
    topology: CrosshaulTopology, src: NodeId, dst: NodeId
) -> tuple[list[LinkId], float]:
    """One-shot routing helper; see PathFinder for the tie-break contract."""
    links, latency = PathFinder(topology).path(src, dst)
    return list(links), float(latency)


def splits_for(vru: NodeId, vdu: NodeId, vcu: NodeId) -> frozenset[SplitOption]:
    """Splits that cross the crosshaul: O6 when the vRU-vDU pair is remote, O2 for vDU-vCU."""
    used = set()
    if vru != vdu:
        used.add(SplitOption.O6)
    if vdu != vcu:
        used.add(SplitOption.O2)
    return frozenset(used)


def classify_scenario(placement: ChainPlacement) -> ScenarioKind:
    """Map a chain placement to one of the four deployment scenarios.

    Co-location of adjacent functions decides the kind; a placement where
    only the non-adjacent vRU/vCU pair shares a node still has both split
    interfaces crossing the network and therefore counts as fully split.
    """
    vru, vdu, vcu = placement.vru_node, placement.vdu_node, placement.vcu_node
    if vru == vdu == vcu:
        return ScenarioKind.DRAN_MONOLITHIC
    if vru == vdu:
        return ScenarioKind.CRAN_DU_RU_INTEGRATED
    if vdu == vcu:
        return ScenarioKind.CU_DU_COLOCATED
    return ScenarioKind.FULLY_SPLIT


def make_placement(
    chain: Chain,
    vdu_node: NodeId,
    vcu_node: NodeId,
    paths: PathFinder,
    cn: NodeId,
) -> ChainPlacement:
    """Build a ChainPlacement with min-latency paths for all three segments."""
    fronthaul, _ = paths.path(chain.vru_node, vdu_node)
    midhaul, _ = paths.path(vdu_node, vcu_node)
    backhaul, _ = paths.path(vcu_node, cn)
    return ChainPlacement(
        chain_id=chain.chain_id,
        vru_node=chain.vru_node,
        vdu_node=vdu_node,
        vcu_node=vcu_node,
        fronthaul_path=fronthaul,
        midhaul_path=midhaul,
        backhaul_path=backhaul,
        splits_used=splits_for(chain.vru_node, vdu_node, vcu_node),
    )


__all__ = [
    "NodeId",
    "LinkId",
    "NodeKind",
    "SplitOption",
    "RadioFunction",
    "ScenarioKind",
    "TopologyNode",
    "Link",
    "CrosshaulTopology",
    "ComputeCapacity",
    "SegmentRequirement",
    "SplitProfile",
    "CnfSpec",
    "Chain",
    "ChainPlacement",
    "Violation",
    "ValidationReport",
    "validate_topology",
    "min_latency_path",
    "PathFinder",
    "classify_scenario",
    "splits_for",
    "make_placement",
    "replace",
]
