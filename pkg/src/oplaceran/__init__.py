"""Placement orchestrator for disaggregated virtualized RAN functions.

The package models a crosshaul-connected compute cluster, computes
placements for vRU/vDU/vCU chains with pluggable solvers, runs placements
as asynchronous token-polled jobs, and executes the resulting allocation
plans against a simulated NFVI with a deterministic deployment timeline.
"""

from .catalogs import (
    CatalogStore,
    CnfImageEntry,
    DEFAULT_CNF_SPECS,
    DEFAULT_SPLIT_PROFILE,
    NfviResourceEntry,
    Scenario,
    SolverDescriptor,
    SolverKind,
    load_scenario,
    load_topology,
    parse_scenario,
    store_scenario,
)
from .deployer import (
    AllocationPlan,
    ClusterSimulator,
    Deployer,
    DeploymentRecord,
    DeploymentStatus,
    PodPhase,
    PodRecord,
    TimelineConfig,
)
from .errors import (
    CatalogUnavailable,
    DeployerFailure,
    DuplicateId,
    InfeasibleRequest,
    InsufficientResources,
    LinkOverCommit,
    MissingEntry,
    NoPath,
    OplaceranError,
    OptimizerFailure,
    ParseError,
    SimulatorUnavailable,
    TooLarge,
    UnknownDeployment,
    UnknownNode,
    UnknownSolver,
    UnknownToken,
    ValidationError,
)
from .feasibility import (
    ObjectiveValue,
    PlacementRequest,
    PlacementResult,
    check_feasibility,
    request_from_scenario,
    validate_request,
)
from .jobs import JobRunner, JobStatus, JobTicket
from .model import (
    Chain,
    ChainPlacement,
    CnfSpec,
    ComputeCapacity,
    CrosshaulTopology,
    Link,
    NodeKind,
    PathFinder,
    RadioFunction,
    ScenarioKind,
    SegmentRequirement,
    SplitOption,
    SplitProfile,
    TopologyNode,
    classify_scenario,
    min_latency_path,
    validate_topology,
)
from .oracle import brute_force_oracle
from .placer import (
    ExternalInputs,
    Orchestrator,
    OrchestrationRecord,
    Outcome,
    WorkflowEvent,
)
from .solvers import SolverRegistry, register_built_ins

__version__ = "0.1.0"
