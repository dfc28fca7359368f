"""Deployment of placement results onto a simulated NFVI cluster.

The cluster keeps authoritative resource accounting on a deterministic
simulated clock (virtual seconds). Free capacity and link residuals are
derived from the set of active allocations, so conservation
(free + allocated == configured capacity) holds by construction at every
instant. Applying a plan is all-or-nothing: either every node and link
reservation commits, or the cluster is left untouched.

An applied deployment is driven through the standard timeline: t0 at plan
start, intermediate markers when the placement result lands, when the
deployer hands off, and when pods start, then t1 when all CNFs are
allocated (the deployment turns Active) and t2..t7 for the radio bring-up
and traffic window. Marker offsets are configurable presentation defaults.
"""

from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path

from .catalogs import CatalogStore, NfviResourceEntry
from .errors import (
    InsufficientResources,
    LinkOverCommit,
    SimulatorUnavailable,
    UnknownDeployment,
    UnknownNode,
)
from .feasibility import PlacementResult
from .model import (
    CnfSpec,
    ComputeCapacity,
    CrosshaulTopology,
    Link,
    LinkId,
    NodeId,
    RadioFunction,
)


class PodPhase(Enum):
    PENDING_IMAGE = "PendingImage"
    STARTING = "Starting"
    CONFIGURING = "Configuring"
    RUNNING = "Running"
    RELEASED = "Released"


_PHASE_ORDER = [
    PodPhase.PENDING_IMAGE,
    PodPhase.STARTING,
    PodPhase.CONFIGURING,
    PodPhase.RUNNING,
]


class DeploymentStatus(Enum):
    APPLYING = "Applying"
    ACTIVE = "Active"
    RELEASED_OK = "ReleasedOk"
    REJECTED = "Rejected"


@dataclass
class TimelineConfig:
    """Marker offsets in simulated seconds from plan application."""

    placement_complete: float = 1.2
    deployer_handoff: float = 31.5
    pods_started: float = 34.0
    t1: float = 70.0
    t2: float = 75.0
    t3: float = 80.0
    t4: float = 90.0
    t5: float = 95.0
    t6: float = 100.0
    t7: float = 160.0

    def markers(self) -> list[tuple[str, float, str]]:
        return [
            ("t0", 0.0, "external inputs collected, workflow start"),
            ("placement-complete", self.placement_complete, "placement result computed"),
            ("deployer-handoff", self.deployer_handoff, "allocation plan handed to deployer"),
            ("pods-started", self.pods_started, "images pulled, CNF pods started"),
            ("t1", self.t1, "all CNFs allocated"),
            ("t2", self.t2, "radio units configured"),
            ("t3", self.t3, "radio stack loaded"),
            ("t4", self.t4, "radio processing started"),
            ("t5", self.t5, "vRU to core network tunnel up"),
            ("t6", self.t6, "UE tunnel up, traffic started"),
            ("t7", self.t7, "traffic ended"),
        ]


@dataclass
class PodSpec:
    chain_id: str
    function: RadioFunction
    node: NodeId
    spec: CnfSpec
    image_ref: str


@dataclass
class ChainingEntry:
    chain_id: str
    from_function: str
    to_function: str
    interface: str
    path: tuple[LinkId, ...]


@dataclass
class AllocationPlan:
    plan_id: str
    pod_specs: list[PodSpec]
    chaining: list[ChainingEntry]
    link_reservations: dict[LinkId, float]


@dataclass
class PodRecord:
    pod_id: str
    chain_id: str
    function: RadioFunction
    node: NodeId
    phase: PodPhase = PodPhase.PENDING_IMAGE
    started_at: float | None = None

    def advance(self, phase: PodPhase) -> None:
        if phase is PodPhase.RELEASED:
            self.phase = phase
            return
        if _PHASE_ORDER.index(phase) < _PHASE_ORDER.index(self.phase):
            raise ValueError(f"pod {self.pod_id}: cannot move {self.phase} -> {phase}")
        self.phase = phase


@dataclass
class TimelineEvent:
    at: float
    marker: str
    detail: str


@dataclass
class DeploymentRecord:
    deployment_id: str
    plan: AllocationPlan
    pods: list[PodRecord]
    timeline: list[TimelineEvent] = field(default_factory=list)
    status: DeploymentStatus = DeploymentStatus.APPLYING


class ClusterSimulator:
    """Simulated NFVI: node capacities, link bandwidth and a virtual clock.

    All mutation serializes through one lock; readers see committed state.
    Averages integrate usage over the simulated clock, not wall time.
    """

    def __init__(self, base_overhead: ComputeCapacity | None = None) -> None:
        self._lock = threading.RLock()
        self.available = True
        self.clock = 0.0
        self.base_overhead = base_overhead or ComputeCapacity.zero()
        self._node_capacity: dict[NodeId, ComputeCapacity] = {}
        self._links: dict[LinkId, Link] = {}
        self._allocations: dict[str, dict[NodeId, ComputeCapacity]] = {}
        self._reservations: dict[str, dict[LinkId, float]] = {}
        self._usage_integral: dict[NodeId, tuple[float, float]] = {}

    def configure(
        self, topology: CrosshaulTopology, nfvi: list[NfviResourceEntry]
    ) -> None:
        with self._lock:
            self.clock = 0.0
            self._allocations.clear()
            self._reservations.clear()
            self._node_capacity = {n: ComputeCapacity.zero() for n in topology.compute_nodes()}
            for entry in nfvi:
                if entry.node not in self._node_capacity:
                    raise UnknownNode(f"nfvi entry for non-compute node {entry.node}")
                self._node_capacity[entry.node] = entry.capacity
            self._links = {link.id: link for link in topology.links}
            self._usage_integral = {n: (0.0, 0.0) for n in self._node_capacity}

    # -- state views ----------------------------------------------------------

    def node_ids(self) -> list[NodeId]:
        with self._lock:
            return sorted(self._node_capacity)

    def allocated(self, node: NodeId) -> ComputeCapacity:
        with self._lock:
            return self._allocated_locked(node)

    def _allocated_locked(self, node: NodeId) -> ComputeCapacity:
        total = ComputeCapacity.zero()
        for per_node in self._allocations.values():
            if node in per_node:
                total = total + per_node[node]
        return total

    def free(self, node: NodeId) -> ComputeCapacity:
        with self._lock:
            return self._node_capacity[node] - self._allocated_locked(node)

    def reserved(self, link_id: LinkId) -> float:
        with self._lock:
            return self._reserved_locked(link_id)

    def _reserved_locked(self, link_id: LinkId) -> float:
        return sum(r.get(link_id, 0) for r in self._reservations.values())

    def residual(self, link_id: LinkId) -> float:
        with self._lock:
            return self._links[link_id].capacity - self._reserved_locked(link_id)

    def free_view(self) -> list[NfviResourceEntry]:
        """Current per-node capacity/allocated pairs, the VIM answer to a refresh."""
        with self._lock:
            if not self.available:
                raise SimulatorUnavailable("simulated NFVI is stopped")
            return [
                NfviResourceEntry(
                    node=node,
                    capacity=self._node_capacity[node],
                    allocated=self._allocated_locked(node),
                )
                for node in sorted(self._node_capacity)
            ]

    def state_doc(self) -> dict:
        """Canonical snapshot of the whole cluster state (conservation checks)."""
        with self._lock:
            return {
                "clock": self.clock,
                "nodes": {
                    node: {
                        "capacity": {"cpu": cap.cpu, "memory": cap.memory},
                        "allocated": {
                            "cpu": self._allocated_locked(node).cpu,
                            "memory": self._allocated_locked(node).memory,
                        },
                    }
                    for node, cap in sorted(self._node_capacity.items())
                },
                "links": {
                    link_id: {
                        "capacity": link.capacity,
                        "reserved": self._reserved_locked(link_id),
                    }
                    for link_id, link in sorted(self._links.items())
                },
            }

    # -- mutation --------------------------------------------------------------

    def reserve(
        self,
        owner: str,
        node_demands: dict[NodeId, ComputeCapacity],
        link_demands: dict[LinkId, float],
    ) -> None:
        """Atomically reserve compute and bandwidth; raises without side effects."""
        with self._lock:
            for node, demand in sorted(node_demands.items()):
                if node not in self._node_capacity:
                    raise UnknownNode(f"plan targets unknown node {node}")
                free = self._node_capacity[node] - self._allocated_locked(node)
                if not demand.fits_within(free):
                    raise InsufficientResources(
                        f"node {node} lacks resources: need {demand.cpu}m/"
                        f"{demand.memory}MiB, free {free.cpu}m/{free.memory}MiB"
                    )
            for link_id, rate in sorted(link_demands.items()):
                if link_id not in self._links:
                    raise UnknownNode(f"plan reserves unknown link {link_id}")
                residual = self._links[link_id].capacity - self._reserved_locked(link_id)
                if rate > residual:
                    raise LinkOverCommit(
                        f"link {link_id} over-committed: need {rate} Mbps, "
                        f"residual {residual} Mbps"
                    )
            self._allocations[owner] = dict(node_demands)
            self._reservations[owner] = dict(link_demands)

    def release(self, owner: str) -> None:
        with self._lock:
            self._allocations.pop(owner, None)
            self._reservations.pop(owner, None)

    def holds(self, owner: str) -> bool:
        with self._lock:
            return owner in self._allocations

    def advance_clock(self, to: float) -> None:
        with self._lock:
            if to < self.clock:
                raise ValueError("simulated clock cannot move backwards")
            dt = to - self.clock
            for node in self._usage_integral:
                used = self._allocated_locked(node) + self.base_overhead
                cpu_s, mem_s = self._usage_integral[node]
                self._usage_integral[node] = (
                    cpu_s + used.cpu * dt,
                    mem_s + used.memory * dt,
                )
            self.clock = to

    def usage_average(self, node: NodeId) -> tuple[float, float]:
        with self._lock:
            if self.clock <= 0:
                used = self._allocated_locked(node) + self.base_overhead
                return float(used.cpu), float(used.memory)
            cpu_s, mem_s = self._usage_integral[node]
            return cpu_s / self.clock, mem_s / self.clock

    def link_latency(self, link_id: LinkId) -> float:
        with self._lock:
            return self._links[link_id].latency

    def link_ids(self) -> list[LinkId]:
        with self._lock:
            return sorted(self._links)


class Deployer:
    """Turns placement results into allocation plans and applies them to the cluster."""

    def __init__(
        self,
        cluster: ClusterSimulator,
        catalogs: CatalogStore,
        timeline: TimelineConfig | None = None,
    ) -> None:
        self.cluster = cluster
        self.catalogs = catalogs
        self.timeline = timeline or TimelineConfig()
        self._lock = threading.RLock()
        self._records: dict[str, DeploymentRecord] = {}
        self._active: set[str] = set()
        self._pre_apply: dict[str, dict] = {}

    def build_allocation_plan(self, result: PlacementResult) -> AllocationPlan:
        """Expand a placement into one pod per (chain, function) plus its chaining."""
        pod_specs: list[PodSpec] = []
        chaining: list[ChainingEntry] = []
        for placement in sorted(result.placements, key=lambda p: p.chain_id):
            for function, node in (
                (RadioFunction.VRU, placement.vru_node),
                (RadioFunction.VDU, placement.vdu_node),
                (RadioFunction.VCU, placement.vcu_node),
            ):
                entry = self.catalogs.get_cnf_image(function)
                pod_specs.append(
                    PodSpec(
                        chain_id=placement.chain_id,
                        function=function,
                        node=node,
                        spec=entry.spec,
                        image_ref=entry.image_ref,
                    )
                )
            chaining.extend(
                [
                    ChainingEntry(
                        chain_id=placement.chain_id,
                        from_function="vRU",
                        to_function="vDU",
                        interface="O6",
                        path=placement.fronthaul_path,
                    ),
                    ChainingEntry(
                        chain_id=placement.chain_id,
                        from_function="vDU",
                        to_function="vCU",
                        interface="O2",
                        path=placement.midhaul_path,
                    ),
                    ChainingEntry(
                        chain_id=placement.chain_id,
                        from_function="vCU",
                        to_function="CN",
                        interface="backhaul",
                        path=placement.backhaul_path,
                    ),
                ]
            )
        return AllocationPlan(
            plan_id=f"plan-{secrets.token_hex(6)}",
            pod_specs=pod_specs,
            chaining=chaining,
            link_reservations=dict(result.link_reservations),
        )

    def apply_plan(self, plan: AllocationPlan) -> DeploymentRecord:
        deployment_id = f"dep-{secrets.token_hex(6)}"
        node_demands: dict[NodeId, ComputeCapacity] = {}
        for pod in plan.pod_specs:
            node_demands[pod.node] = (
                node_demands.get(pod.node, ComputeCapacity.zero()) + pod.spec.demand
            )

        record = DeploymentRecord(
            deployment_id=deployment_id,
            plan=plan,
            pods=[
                PodRecord(
                    pod_id=f"{plan.plan_id}-{pod.chain_id}-{pod.function.value}",
                    chain_id=pod.chain_id,
                    function=pod.function,
                    node=pod.node,
                )
                for pod in plan.pod_specs
            ],
        )
        pre_state = self.cluster.state_doc()
        try:
            self.cluster.reserve(deployment_id, node_demands, plan.link_reservations)
        except (InsufficientResources, LinkOverCommit, UnknownNode):
            record.status = DeploymentStatus.REJECTED
            raise

        start = self.cluster.clock
        for marker, offset, detail in self.timeline.markers():
            at = start + offset
            self.cluster.advance_clock(at)
            record.timeline.append(TimelineEvent(at=at, marker=marker, detail=detail))
            if marker == "pods-started":
                for pod in record.pods:
                    pod.advance(PodPhase.STARTING)
                    pod.started_at = at
            elif marker == "t1":
                for pod in record.pods:
                    pod.advance(PodPhase.CONFIGURING)
                record.status = DeploymentStatus.ACTIVE
            elif marker == "t2":
                for pod in record.pods:
                    pod.advance(PodPhase.RUNNING)

        with self._lock:
            self._records[deployment_id] = record
            self._active.add(deployment_id)
            self._pre_apply[deployment_id] = pre_state
        return record

    def release_deployment(self, deployment_id: str) -> None:
        with self._lock:
            if deployment_id not in self._active:
                raise UnknownDeployment(f"unknown deployment {deployment_id!r}")
            self._active.discard(deployment_id)
            record = self._records[deployment_id]
            self._pre_apply.pop(deployment_id, None)
        self.cluster.release(deployment_id)
        for pod in record.pods:
            pod.advance(PodPhase.RELEASED)
        record.status = DeploymentStatus.RELEASED_OK

    def get_deployment(self, deployment_id: str) -> DeploymentRecord:
        with self._lock:
            if deployment_id not in self._records:
                raise UnknownDeployment(f"unknown deployment {deployment_id!r}")
            return self._records[deployment_id]

    def active_deployments(self) -> list[DeploymentRecord]:
        with self._lock:
            return [self._records[d] for d in sorted(self._active)]

    # -- metrics and export -----------------------------------------------------

    def cluster_metrics(self) -> dict:
        """Current and average usage per node, link residuals, chain latencies."""
        nodes = {}
        for node in self.cluster.node_ids():
            used = self.cluster.allocated(node) + self.cluster.base_overhead
            free = self.cluster.free(node)
            cpu_avg, mem_avg = self.cluster.usage_average(node)
            nodes[node] = {
                "cpu_used": used.cpu,
                "memory_used": used.memory,
                "cpu_free": free.cpu,
                "memory_free": free.memory,
                "cpu_avg": round(cpu_avg, 6),
                "memory_avg": round(mem_avg, 6),
            }
        links = {
            link_id: {
                "reserved": self.cluster.reserved(link_id),
                "residual": self.cluster.residual(link_id),
            }
            for link_id in self.cluster.link_ids()
        }
        chains = {}
        for record in self.active_deployments():
            per_chain: dict[str, Fraction] = {}
            for entry in record.plan.chaining:
                latency = sum(
                    (Fraction(self.cluster.link_latency(l)) for l in entry.path),
                    Fraction(0),
                )
                per_chain[entry.chain_id] = per_chain.get(entry.chain_id, Fraction(0)) + latency
            for chain_id, latency in per_chain.items():
                chains[chain_id] = {"end_to_end_latency_ms": float(latency)}
        return {
            "sim_clock": self.cluster.clock,
            "nodes": nodes,
            "links": links,
            "chains": dict(sorted(chains.items())),
        }

    def timeline_lines(self, deployment_id: str) -> str:
        record = self.get_deployment(deployment_id)
        lines = [
            f"{_fmt_seconds(event.at)} {event.marker} {event.detail}"
            for event in record.timeline
        ]
        return "\n".join(lines) + "\n"

    def export_timeline(self, deployment_id: str, path: str | Path) -> None:
        Path(path).write_text(self.timeline_lines(deployment_id))

    def pre_apply_state(self, deployment_id: str) -> dict | None:
        with self._lock:
            return self._pre_apply.get(deployment_id)


def _fmt_seconds(value: float) -> str:
    return str(int(value)) if value == int(value) else str(value)


def deployment_doc(record: DeploymentRecord) -> dict:
    return {
        "deployment_id": record.deployment_id,
        "status": record.status.value,
        "plan": {
            "plan_id": record.plan.plan_id,
            "pod_specs": [
                {
                    "chain_id": p.chain_id,
                    "function": p.function.value,
                    "node": p.node,
                    "image_ref": p.image_ref,
                    "cpu_demand": p.spec.cpu_demand,
                    "memory_demand": p.spec.memory_demand,
                }
                for p in record.plan.pod_specs
            ],
            "chaining": [
                {
                    "chain_id": c.chain_id,
                    "from_function": c.from_function,
                    "to_function": c.to_function,
                    "interface": c.interface,
                    "path": list(c.path),
                }
                for c in record.plan.chaining
            ],
            "link_reservations": {
                k: record.plan.link_reservations[k]
                for k in sorted(record.plan.link_reservations)
            },
        },
        "pods": [
            {
                "pod_id": p.pod_id,
                "chain_id": p.chain_id,
                "function": p.function.value,
                "node": p.node,
                "phase": p.phase.value,
                "started_at": p.started_at,
            }
            for p in record.pods
        ],
        "timeline": [
            {"at": e.at, "marker": e.marker, "detail": e.detail} for e in record.timeline
        ],
    }
