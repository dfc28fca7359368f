"""Orchestration workflow: the placer drives inputs through placement to deployment.

A run executes a fixed 20-step sequence and appends exactly one event per
completed step: collect and validate inputs (01-02), refresh the NFVI view
through the VIM (03-07), commit topology and NFVI resources to the catalogs
(08-09), submit the placement job and poll its token to a terminal state
(10-13), then hand the plan to the deployer, fetch CNF images, issue the
chaining plan to the simulated VNFM and confirm allocation (14-20).

An infeasible placement ends the run after step 13 with outcome Infeasible.
Any failure ends the run after its last completed step; resources reserved
by the failed run are released so the simulated NFVI returns to its
pre-run state.
"""

from __future__ import annotations

import secrets
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .catalogs import (
    CatalogStore,
    Scenario,
    SolverDescriptor,
    load_scenario,
)
from .deployer import ClusterSimulator, Deployer, TimelineConfig
from .errors import (
    CatalogUnavailable,
    DeployerFailure,
    OplaceranError,
    OptimizerFailure,
    SimulatorUnavailable,
    ValidationError,
)
from .feasibility import (
    PlacementRequest,
    PlacementResult,
    result_doc,
)
from .jobs import JobRunner, JobStatus
from .model import Chain
from .solvers import SolverRegistry, SolveFn, register_built_ins

STEP_NAMES = {
    1: "inputs collected",
    2: "inputs validated",
    3: "VIM CR update requested",
    4: "NFVI view requested",
    5: "NFVI view collected",
    6: "NFVI update notified",
    7: "NFVI update acknowledged",
    8: "topology catalog updated",
    9: "NFVI catalog updated",
    10: "placement requested",
    11: "solver selected",
    12: "placement job running",
    13: "placement returned",
    14: "plan sent to deployer",
    15: "CNF images requested",
    16: "CNF images fetched",
    17: "CNFs sent to VNFM",
    18: "VNFs allocation started",
    19: "VNFs allocated",
    20: "notification",
}

FINAL_STEP = 20
PLACEMENT_STEP = 13


class Outcome(Enum):
    DEPLOYED = "Deployed"
    INFEASIBLE = "Infeasible"
    FAILED = "Failed"


@dataclass
class ExternalInputs:
    operator_chains: list[Chain]
    topology_source: Scenario | str | Path | None = None
    solver_id: str = "aggregation-max"


@dataclass
class WorkflowEvent:
    step: int
    name: str
    at: float
    detail: str = ""


@dataclass
class OrchestrationRecord:
    run_id: str
    events: list[WorkflowEvent] = field(default_factory=list)
    outcome: Outcome = Outcome.FAILED
    placement: PlacementResult | None = None
    deployment_id: str | None = None
    error: str | None = None
    nfvi_seq: int | None = None


def record_doc(record: OrchestrationRecord) -> dict:
    return {
        "run_id": record.run_id,
        "outcome": record.outcome.value,
        "events": [
            {"step": e.step, "name": e.name, "detail": e.detail} for e in record.events
        ],
        "placement": result_doc(record.placement) if record.placement else None,
        "deployment_id": record.deployment_id,
        "error": record.error,
        "nfvi_seq": record.nfvi_seq,
    }


class Orchestrator:
    """Facade wiring catalogs, solvers, the job runner and the simulated NFVI.

    One orchestrator owns one simulated cluster; workflow runs, placement
    jobs and deployments all act on that shared state.
    """

    def __init__(
        self,
        data_dir: str | Path | None = None,
        poll_interval: float = 0.05,
        max_jobs: int = 2,
        timeline: TimelineConfig | None = None,
    ) -> None:
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self.poll_interval = poll_interval
        self.catalogs = CatalogStore(self.data_dir)
        self.cluster = ClusterSimulator()
        self.registry = SolverRegistry()
        register_built_ins(self.registry)
        for descriptor in self.registry.descriptors():
            if not self.catalogs.has_solver(descriptor.solver_id):
                self.catalogs.register_solver(descriptor)
        results_dir = self.data_dir / "placements" if self.data_dir else None
        self.jobs = JobRunner(self.registry, max_jobs=max_jobs, results_dir=results_dir)
        self.deployer = Deployer(self.cluster, self.catalogs, timeline=timeline)
        self._records: dict[str, OrchestrationRecord] = {}
        self._records_lock = threading.Lock()
        self._scenario_loaded = False

    # -- setup -----------------------------------------------------------------

    def register_solver(self, descriptor: SolverDescriptor, solve_fn: SolveFn) -> None:
        self.registry.register(descriptor, solve_fn)
        if not self.catalogs.has_solver(descriptor.solver_id):
            self.catalogs.register_solver(descriptor)

    def load_scenario(self, source: Scenario | str | Path) -> Scenario:
        """Bootstrap catalogs and the simulated NFVI from a scenario document."""
        scenario = source if isinstance(source, Scenario) else load_scenario(source)
        self.catalogs.set_topology_inputs(scenario.topology, scenario.split_profile)
        self.catalogs.set_cnf_catalog(scenario.cnf_specs)
        self.cluster.configure(scenario.topology, scenario.nfvi)
        self.catalogs.update_nfvi(self.cluster.free_view())
        self._scenario_loaded = True
        return scenario

    @property
    def scenario_loaded(self) -> bool:
        return self._scenario_loaded

    # -- NFVI refresh (steps 03-07 as a standalone operation) --------------------

    def refresh_nfvi_view(self) -> int:
        try:
            entries = self.cluster.free_view()
        except SimulatorUnavailable:
            raise
        return self.catalogs.update_nfvi(entries)

    # -- workflow ---------------------------------------------------------------

    def run_workflow(self, inputs: ExternalInputs) -> OrchestrationRecord:
        run_id = f"run-{secrets.token_hex(6)}"
        record = OrchestrationRecord(run_id=run_id)
        with self._records_lock:
            self._records[run_id] = record

        def emit(step: int, detail: str = "") -> None:
            record.events.append(
                WorkflowEvent(step=step, name=STEP_NAMES[step], at=time.time(), detail=detail)
            )

        def fail(error: Exception) -> OrchestrationRecord:
            record.outcome = Outcome.FAILED
            record.error = f"{type(error).__name__}: {error}"
            return record

        chains = list(inputs.operator_chains)
        source_note = "catalog state" if inputs.topology_source is None else "scenario document"
        emit(1, f"{len(chains)} chains from operator, topology from {source_note}")

        # 02: validate operator inputs before touching any shared state.
        try:
            if inputs.topology_source is not None:
                self.load_scenario(inputs.topology_source)
            if not self._scenario_loaded or not self.catalogs.has_topology():
                raise CatalogUnavailable("no scenario loaded")
            if not chains:
                raise ValidationError("external inputs contain zero chains")
            if not self.registry.has(inputs.solver_id):
                raise ValidationError(f"unknown solver {inputs.solver_id!r}")
            workers = set(self.catalogs.topology().workers())
            pins = set()
            for chain in chains:
                if chain.vru_node not in workers:
                    raise ValidationError(
                        f"chain {chain.chain_id}: pin {chain.vru_node} is not a worker"
                    )
                if chain.vru_node in pins:
                    raise ValidationError(
                        f"chain {chain.chain_id}: duplicate pin {chain.vru_node}"
                    )
                pins.add(chain.vru_node)
        except OplaceranError as exc:
            emit(2, f"validation failed: {exc}")
            return fail(exc)
        emit(2, f"{len(chains)} chains validated, solver {inputs.solver_id}")

        # 03-07: VIM round trip for an up-to-date NFVI view.
        emit(3, "VIM asked to refresh CR usage")
        try:
            entries = self.cluster.free_view()
        except SimulatorUnavailable as exc:
            return fail(exc)
        emit(4, "NFVI view requested from simulator")
        emit(5, f"view covers {len(entries)} compute nodes")
        emit(6, "NFVI update notification received")
        emit(7, "update acknowledged to VIM")

        # 08-09: commit both configuration catalogs.
        try:
            self.catalogs.set_topology_inputs(self.catalogs.topology())
            topology = self.catalogs.topology()
        except OplaceranError as exc:
            return fail(exc)
        emit(8, f"{len(topology.nodes)} nodes, {len(topology.links)} links committed")
        seq = self.catalogs.update_nfvi(entries)
        record.nfvi_seq = seq
        emit(9, f"NFVI snapshot committed at seq {seq}")

        # 10-13: placement job over the snapshot committed at step 09.
        snapshot = self.catalogs.nfvi_snapshot()
        request = PlacementRequest(
            topology=topology,
            nfvi=list(snapshot.entries),
            chains=chains,
            split_profile=self.catalogs.split_profile(),
            cnf_specs=self.catalogs.cnf_specs(),
            solver_id=inputs.solver_id,
            nfvi_seq=snapshot.seq,
        )
        try:
            token = self.jobs.submit(request)
        except OplaceranError as exc:
            return fail(exc)
        emit(10, f"placement job {token} submitted")
        emit(11, f"solver {inputs.solver_id} selected from catalog")
        emit(12, "polling placement job for a terminal state")
        ticket = self.jobs.status(token)
        while not ticket.status.terminal:
            time.sleep(self.poll_interval)
            ticket = self.jobs.status(token)

        if ticket.status is JobStatus.FAILED:
            return fail(OptimizerFailure(ticket.error or "placement job failed"))
        if ticket.status is JobStatus.INFEASIBLE:
            emit(13, f"placement infeasible: {ticket.detail or 'no feasible assignment'}")
            record.outcome = Outcome.INFEASIBLE
            return record
        result = ticket.result
        record.placement = result
        emit(
            13,
            f"placement returned: cr_count={result.objective.cr_count} "
            f"cn_distance={result.objective.cn_distance}",
        )

        # 14-20: deployment; all resources of this run are released on failure.
        deployment = None
        try:
            emit(14, f"allocation plan for {len(result.placements)} chains sent to deployer")
            emit(15, "CNF images requested from catalog")
            plan = self.deployer.build_allocation_plan(result)
            emit(16, f"{len(plan.pod_specs)} pod specs resolved with images")
            emit(17, "chaining plan sent to VNFM")
            deployment = self.deployer.apply_plan(plan)
            emit(18, f"deployment {deployment.deployment_id} applying")
            emit(19, f"all CNFs allocated at sim t={deployment.timeline[4].at}s")
            record.deployment_id = deployment.deployment_id
            if self.data_dir is not None:
                timelines = self.data_dir / "timelines"
                timelines.mkdir(parents=True, exist_ok=True)
                self.deployer.export_timeline(
                    deployment.deployment_id,
                    timelines / f"{deployment.deployment_id}.log",
                )
            emit(20, "operator notified of completed allocation")
            record.outcome = Outcome.DEPLOYED
            return record
        except OplaceranError as exc:
            if deployment is not None and self.cluster.holds(deployment.deployment_id):
                self.deployer.release_deployment(deployment.deployment_id)
            return fail(DeployerFailure(str(exc)))

    def get_record(self, run_id: str) -> OrchestrationRecord | None:
        with self._records_lock:
            return self._records.get(run_id)

    def shutdown(self) -> None:
        self.jobs.shutdown()
