"""Catalog repository: topology inputs, NFVI resources, solver registry, CNF images.

The repository is backed by plain YAML documents, one per sub-catalog, kept
human-diffable in a data directory. Updates serialize through a single
writer lock; readers always get immutable snapshots of committed state.

The scenario file is the project's one canonical input document. It bundles
everything a placement run needs: ``topology`` (nodes, links), ``nfvi``
(per-node capacities), ``chains`` (vRU pins), ``split_profile``,
``cnf_specs`` and a default ``solver``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import yaml

from .errors import DuplicateId, MissingEntry, ParseError, UnknownNode, ValidationError
from .model import (
    Chain,
    CnfSpec,
    ComputeCapacity,
    CrosshaulTopology,
    Link,
    NodeId,
    NodeKind,
    RadioFunction,
    SegmentRequirement,
    SplitProfile,
    TopologyNode,
    validate_topology,
)

TOPOLOGY_DOC = "topology.yaml"
NFVI_DOC = "nfvi.yaml"
SOLVERS_DOC = "solvers.yaml"
CNFS_DOC = "cnfs.yaml"


class SolverKind(Enum):
    EXACT = "Exact"
    HEURISTIC = "Heuristic"


@dataclass(frozen=True)
class SolverDescriptor:
    solver_id: str
    kind: SolverKind
    description: str = ""


@dataclass(frozen=True)
class NfviResourceEntry:
    """Available compute on one node as of a catalog snapshot.

    ``capacity`` is the total amount reserved for radio functions on the
    node; ``allocated`` is the share already consumed by active
    deployments, so capacity - allocated is free for new placements.
    """

    node: NodeId
    capacity: ComputeCapacity
    allocated: ComputeCapacity = ComputeCapacity(0, 0)
    snapshot_seq: int = 0

    @property
    def free(self) -> ComputeCapacity:
        return self.capacity - self.allocated


@dataclass(frozen=True)
class CnfImageEntry:
    function: RadioFunction
    image_ref: str
    spec: CnfSpec


@dataclass
class Scenario:
    """Parsed scenario document."""

    topology: CrosshaulTopology
    nfvi: list[NfviResourceEntry]
    chains: list[Chain]
    split_profile: SplitProfile
    cnf_specs: dict[RadioFunction, CnfSpec]
    solver_id: str


DEFAULT_CNF_SPECS: dict[RadioFunction, CnfSpec] = {
    RadioFunction.VRU: CnfSpec(RadioFunction.VRU, 400, 50, "registry.local/oai/vru:v1"),
    RadioFunction.VDU: CnfSpec(RadioFunction.VDU, 600, 150, "registry.local/oai/vdu:v1"),
    RadioFunction.VCU: CnfSpec(RadioFunction.VCU, 500, 450, "registry.local/oai/vcu:v1"),
}

DEFAULT_SPLIT_PROFILE = SplitProfile(
    fronthaul_o6=SegmentRequirement(max_latency=2.0, bitrate=152),
    midhaul_o2=SegmentRequirement(max_latency=10.0, bitrate=151),
    backhaul_cn=SegmentRequirement(max_latency=30.0, bitrate=150),
)


# ---------------------------------------------------------------------------
# Scenario document parsing / serialization
# ---------------------------------------------------------------------------


def _require(mapping: dict, key: str, context: str):
    if not isinstance(mapping, dict):
        raise ParseError(f"{context}: expected a mapping, got {type(mapping).__name__}")
    if key not in mapping:
        raise ParseError(f"{context}: missing required field '{key}'")
    return mapping[key]


def _number(value, context: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{context}: expected a number, got {value!r}")
    return value


def _integer(value, context: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{context}: expected an integer, got {value!r}")
    return value


def _capacity(doc, context: str) -> ComputeCapacity:
    return ComputeCapacity(
        cpu=_integer(_require(doc, "cpu", context), f"{context}.cpu"),
        memory=_integer(_require(doc, "memory", context), f"{context}.memory"),
    )


def parse_topology_doc(doc) -> CrosshaulTopology:
    nodes = []
    seen_nodes: set[str] = set()
    for i, node_doc in enumerate(_require(doc, "nodes", "topology")):
        node_id = str(_require(node_doc, "id", f"topology.nodes[{i}]"))
        if not node_id:
            raise ParseError(f"topology.nodes[{i}]: empty node id")
        if node_id in seen_nodes:
            raise ParseError(f"duplicate node id {node_id}")
        seen_nodes.add(node_id)
        kind_raw = str(_require(node_doc, "kind", f"topology.nodes[{i}]"))
        try:
            kind = NodeKind(kind_raw)
        except ValueError:
            raise ParseError(
                f"topology.nodes[{i}]: unknown node kind {kind_raw!r}"
            ) from None
        nodes.append(TopologyNode(id=node_id, kind=kind))

    links = []
    seen_links: set[str] = set()
    for i, link_doc in enumerate(_require(doc, "links", "topology")):
        ctx = f"topology.links[{i}]"
        link_id = str(_require(link_doc, "id", ctx))
        if link_id in seen_links:
            raise ParseError(f"duplicate link id {link_id}")
        seen_links.add(link_id)
        endpoints = _require(link_doc, "endpoints", ctx)
        if not isinstance(endpoints, (list, tuple)) or len(endpoints) != 2:
            raise ParseError(f"{ctx}: endpoints must be a pair of node ids")
        latency = _number(_require(link_doc, "latency", ctx), f"{ctx}.latency")
        capacity = _number(_require(link_doc, "capacity", ctx), f"{ctx}.capacity")
        residual = _number(link_doc.get("residual", capacity), f"{ctx}.residual")
        links.append(
            Link(
                id=link_id,
                endpoints=(str(endpoints[0]), str(endpoints[1])),
                latency=latency,
                capacity=capacity,
                residual=residual,
            )
        )
    return CrosshaulTopology(nodes=nodes, links=links)


def _parse_nfvi(doc, topology: CrosshaulTopology) -> list[NfviResourceEntry]:
    known = {n.id for n in topology.nodes}
    entries = []
    seen: set[str] = set()
    for i, entry_doc in enumerate(doc):
        ctx = f"nfvi[{i}]"
        node = str(_require(entry_doc, "node", ctx))
        if node in seen:
            raise ParseError(f"duplicate nfvi entry for node {node}")
        seen.add(node)
        if node not in known:
            raise ValidationError(f"nfvi entry references unknown node {node}")
        capacity = _capacity(_require(entry_doc, "capacity", ctx), f"{ctx}.capacity")
        allocated = (
            _capacity(entry_doc["allocated"], f"{ctx}.allocated")
            if "allocated" in entry_doc
            else ComputeCapacity(0, 0)
        )
        entries.append(NfviResourceEntry(node=node, capacity=capacity, allocated=allocated))
    return entries


def _parse_chains(doc, topology: CrosshaulTopology) -> list[Chain]:
    workers = set(topology.workers())
    chains = []
    seen_ids: set[str] = set()
    seen_pins: set[str] = set()
    for i, chain_doc in enumerate(doc):
        ctx = f"chains[{i}]"
        chain_id = str(_require(chain_doc, "chain_id", ctx))
        if chain_id in seen_ids:
            raise ParseError(f"duplicate chain id {chain_id}")
        seen_ids.add(chain_id)
        vru_node = str(_require(chain_doc, "vru_node", ctx))
        if vru_node not in workers:
            raise ValidationError(
                f"chain {chain_id}: vRU pin {vru_node} is not a compute worker"
            )
        if vru_node in seen_pins:
            raise ValidationError(f"chain {chain_id}: worker {vru_node} already has a vRU")
        seen_pins.add(vru_node)
        chains.append(Chain(chain_id=chain_id, vru_node=vru_node))
    return chains


def _parse_split_profile(doc) -> SplitProfile:
    segments = {}
    for name in ("fronthaul_o6", "midhaul_o2", "backhaul_cn"):
        seg_doc = _require(doc, name, "split_profile")
        max_latency = _number(
            _require(seg_doc, "max_latency", f"split_profile.{name}"),
            f"split_profile.{name}.max_latency",
        )
        bitrate = _number(
            _require(seg_doc, "bitrate", f"split_profile.{name}"),
            f"split_profile.{name}.bitrate",
        )
        if max_latency <= 0 or bitrate <= 0:
            raise ValidationError(
                f"split_profile.{name}: max_latency and bitrate must be positive"
            )
        segments[name] = SegmentRequirement(max_latency=max_latency, bitrate=bitrate)
    profile = SplitProfile(**segments)
    # Segment strictness ordering, enforced at load time to catch swapped fields.
    if not (
        profile.fronthaul_o6.max_latency
        <= profile.midhaul_o2.max_latency
        <= profile.backhaul_cn.max_latency
    ):
        raise ValidationError(
            "split_profile: latency bounds must satisfy fronthaul <= midhaul <= backhaul"
        )
    return profile


def _parse_cnf_specs(doc) -> dict[RadioFunction, CnfSpec]:
    specs = {}
    for function in RadioFunction:
        spec_doc = _require(doc, function.value, "cnf_specs")
        ctx = f"cnf_specs.{function.value}"
        cpu = _integer(_require(spec_doc, "cpu_demand", ctx), f"{ctx}.cpu_demand")
        memory = _integer(_require(spec_doc, "memory_demand", ctx), f"{ctx}.memory_demand")
        image_ref = str(_require(spec_doc, "image_ref", ctx))
        if cpu <= 0 or memory <= 0:
            raise ValidationError(f"{ctx}: demands must be positive")
        specs[function] = CnfSpec(
            function=function, cpu_demand=cpu, memory_demand=memory, image_ref=image_ref
        )
    return specs


def parse_scenario(text: str | bytes) -> Scenario:
    """Parse and validate a scenario document; raises ParseError or ValidationError."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"malformed scenario document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("scenario document must be a mapping")

    topology = parse_topology_doc(_require(doc, "topology", "scenario"))
    report = validate_topology(topology)
    if not report.ok:
        raise ValidationError(
            "invalid topology: " + "; ".join(str(v) for v in report.violations),
            violations=report.violations,
        )
    nfvi = _parse_nfvi(_require(doc, "nfvi", "scenario"), topology)
    chains = _parse_chains(_require(doc, "chains", "scenario"), topology)
    split_profile = _parse_split_profile(_require(doc, "split_profile", "scenario"))
    cnf_specs = _parse_cnf_specs(_require(doc, "cnf_specs", "scenario"))
    solver_id = str(_require(doc, "solver", "scenario"))
    return Scenario(
        topology=topology,
        nfvi=nfvi,
        chains=chains,
        split_profile=split_profile,
        cnf_specs=cnf_specs,
        solver_id=solver_id,
    )


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(Path(path).read_text())


def load_topology(source: str | bytes) -> CrosshaulTopology:
    """Parse just a topology document (the ``topology`` section of a scenario)."""
    try:
        doc = yaml.safe_load(source)
    except yaml.YAMLError as exc:
        raise ParseError(f"malformed topology document: {exc}") from exc
    if isinstance(doc, dict) and "topology" in doc:
        doc = doc["topology"]
    topology = parse_topology_doc(doc)
    report = validate_topology(topology)
    if not report.ok:
        raise ValidationError(
            "invalid topology: " + "; ".join(str(v) for v in report.violations),
            violations=report.violations,
        )
    return topology


def topology_doc(topology: CrosshaulTopology) -> dict:
    return {
        "nodes": [{"id": n.id, "kind": n.kind.value} for n in topology.nodes],
        "links": [
            {
                "id": l.id,
                "endpoints": list(l.endpoints),
                "latency": l.latency,
                "capacity": l.capacity,
                "residual": l.residual,
            }
            for l in topology.links
        ],
    }


def nfvi_entry_doc(entry: NfviResourceEntry) -> dict:
    return {
        "node": entry.node,
        "capacity": {"cpu": entry.capacity.cpu, "memory": entry.capacity.memory},
        "allocated": {"cpu": entry.allocated.cpu, "memory": entry.allocated.memory},
        "snapshot_seq": entry.snapshot_seq,
    }


def scenario_doc(scenario: Scenario) -> dict:
    return {
        "topology": topology_doc(scenario.topology),
        "nfvi": [
            {
                "node": e.node,
                "capacity": {"cpu": e.capacity.cpu, "memory": e.capacity.memory},
                "allocated": {"cpu": e.allocated.cpu, "memory": e.allocated.memory},
            }
            for e in scenario.nfvi
        ],
        "chains": [{"chain_id": c.chain_id, "vru_node": c.vru_node} for c in scenario.chains],
        "split_profile": {
            name: {"max_latency": seg.max_latency, "bitrate": seg.bitrate}
            for name, seg in (
                ("fronthaul_o6", scenario.split_profile.fronthaul_o6),
                ("midhaul_o2", scenario.split_profile.midhaul_o2),
                ("backhaul_cn", scenario.split_profile.backhaul_cn),
            )
        },
        "cnf_specs": {
            function.value: {
                "cpu_demand": spec.cpu_demand,
                "memory_demand": spec.memory_demand,
                "image_ref": spec.image_ref,
            }
            for function, spec in sorted(
                scenario.cnf_specs.items(), key=lambda kv: kv[0].value
            )
        },
        "solver": scenario.solver_id,
    }


def dump_doc(doc: dict) -> str:
    """Canonical YAML encoding: sorted keys, block style."""
    return yaml.safe_dump(doc, sort_keys=True, default_flow_style=False)


def store_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(dump_doc(scenario_doc(scenario)))


# ---------------------------------------------------------------------------
# Catalog store
# ---------------------------------------------------------------------------


@dataclass
class NfviSnapshot:
    seq: int
    entries: tuple[NfviResourceEntry, ...]

    def by_node(self) -> dict[NodeId, NfviResourceEntry]:
        return {e.node: e for e in self.entries}


class CatalogStore:
    """The four sub-catalogs behind one serialized writer.

    Readers receive immutable snapshots; a snapshot taken at seq S never
    changes, no matter how many commits follow. With a data directory each
    commit also rewrites the corresponding YAML document.
    """

    def __init__(self, data_dir: str | Path | None = None) -> None:
        self._lock = threading.RLock()
        self._data_dir = Path(data_dir) if data_dir is not None else None
        self._topology: CrosshaulTopology | None = None
        self._split_profile: SplitProfile | None = None
        self._nfvi: dict[NodeId, NfviResourceEntry] = {}
        self._nfvi_seq = 0
        self._solvers: dict[str, SolverDescriptor] = {}
        self._cnfs: dict[RadioFunction, CnfImageEntry] = {}
        if self._data_dir is not None:
            self._data_dir.mkdir(parents=True, exist_ok=True)
            self._load_from_disk()

    # -- topology inputs ----------------------------------------------------

    def set_topology_inputs(
        self, topology: CrosshaulTopology, split_profile: SplitProfile | None = None
    ) -> None:
        report = validate_topology(topology)
        if not report.ok:
            raise ValidationError(
                "invalid topology: " + "; ".join(str(v) for v in report.violations),
                violations=report.violations,
            )
        with self._lock:
            self._topology = CrosshaulTopology(
                nodes=list(topology.nodes), links=list(topology.links)
            )
            if split_profile is not None:
                self._split_profile = split_profile
            self._persist_topology()

    def topology(self) -> CrosshaulTopology:
        with self._lock:
            if self._topology is None:
                raise MissingEntry("topology inputs catalog is empty")
            return CrosshaulTopology(
                nodes=list(self._topology.nodes), links=list(self._topology.links)
            )

    def has_topology(self) -> bool:
        with self._lock:
            return self._topology is not None

    def split_profile(self) -> SplitProfile:
        with self._lock:
            if self._split_profile is None:
                raise MissingEntry("no split profile loaded")
            return self._split_profile

    # -- NFVI resources -----------------------------------------------------

    def update_nfvi(self, entries: list[NfviResourceEntry]) -> int:
        """Upsert the given entries atomically; returns the new snapshot seq."""
        with self._lock:
            if self._topology is not None:
                known = {n.id for n in self._topology.nodes}
                for entry in entries:
                    if entry.node not in known:
                        raise UnknownNode(f"nfvi entry references unknown node {entry.node}")
            self._nfvi_seq += 1
            for entry in entries:
                self._nfvi[entry.node] = NfviResourceEntry(
                    node=entry.node,
                    capacity=entry.capacity,
                    allocated=entry.allocated,
                    snapshot_seq=self._nfvi_seq,
                )
            self._persist_nfvi()
            return self._nfvi_seq

    def nfvi_snapshot(self) -> NfviSnapshot:
        with self._lock:
            entries = tuple(self._nfvi[node] for node in sorted(self._nfvi))
            return NfviSnapshot(seq=self._nfvi_seq, entries=entries)

    # -- placement solutions registry ----------------------------------------

    def register_solver(self, descriptor: SolverDescriptor) -> None:
        with self._lock:
            if descriptor.solver_id in self._solvers:
                raise DuplicateId(f"solver {descriptor.solver_id!r} already registered")
            self._solvers[descriptor.solver_id] = descriptor
            self._persist_solvers()

    def solvers(self) -> list[SolverDescriptor]:
        with self._lock:
            return [self._solvers[sid] for sid in sorted(self._solvers)]

    def has_solver(self, solver_id: str) -> bool:
        with self._lock:
            return solver_id in self._solvers

    # -- RAN CNFs registry ----------------------------------------------------

    def set_cnf_catalog(self, specs: dict[RadioFunction, CnfSpec]) -> None:
        with self._lock:
            self._cnfs = {
                function: CnfImageEntry(
                    function=function, image_ref=spec.image_ref, spec=spec
                )
                for function, spec in specs.items()
            }
            self._persist_cnfs()

    def get_cnf_image(self, function: RadioFunction) -> CnfImageEntry:
        with self._lock:
            if function not in self._cnfs:
                raise MissingEntry(f"no CNF image registered for {function.value}")
            return self._cnfs[function]

    def cnf_entries(self) -> list[CnfImageEntry]:
        with self._lock:
            return [self._cnfs[f] for f in sorted(self._cnfs, key=lambda f: f.value)]

    def cnf_specs(self) -> dict[RadioFunction, CnfSpec]:
        with self._lock:
            return {f: e.spec for f, e in self._cnfs.items()}

    # -- persistence ----------------------------------------------------------

    def _doc_path(self, name: str) -> Path | None:
        if self._data_dir is None:
            return None
        return self._data_dir / name

    def _persist_topology(self) -> None:
        path = self._doc_path(TOPOLOGY_DOC)
        if path is None or self._topology is None:
            return
        doc = {"topology": topology_doc(self._topology)}
        if self._split_profile is not None:
            doc["split_profile"] = {
                "fronthaul_o6": {
                    "max_latency": self._split_profile.fronthaul_o6.max_latency,
                    "bitrate": self._split_profile.fronthaul_o6.bitrate,
                },
                "midhaul_o2": {
                    "max_latency": self._split_profile.midhaul_o2.max_latency,
                    "bitrate": self._split_profile.midhaul_o2.bitrate,
                },
                "backhaul_cn": {
                    "max_latency": self._split_profile.backhaul_cn.max_latency,
                    "bitrate": self._split_profile.backhaul_cn.bitrate,
                },
            }
        path.write_text(dump_doc(doc))

    def _persist_nfvi(self) -> None:
        path = self._doc_path(NFVI_DOC)
        if path is None:
            return
        doc = {
            "snapshot_seq": self._nfvi_seq,
            "entries": [nfvi_entry_doc(self._nfvi[n]) for n in sorted(self._nfvi)],
        }
        path.write_text(dump_doc(doc))

    def _persist_solvers(self) -> None:
        path = self._doc_path(SOLVERS_DOC)
        if path is None:
            return
        doc = {
            "solvers": [
                {
                    "solver_id": d.solver_id,
                    "kind": d.kind.value,
                    "description": d.description,
                }
                for d in self.solvers()
            ]
        }
        path.write_text(dump_doc(doc))

    def _persist_cnfs(self) -> None:
        path = self._doc_path(CNFS_DOC)
        if path is None:
            return
        doc = {
            "cnfs": {
                e.function.value: {
                    "image_ref": e.image_ref,
                    "cpu_demand": e.spec.cpu_demand,
                    "memory_demand": e.spec.memory_demand,
                }
                for e in self.cnf_entries()
            }
        }
        path.write_text(dump_doc(doc))

    def _load_from_disk(self) -> None:
        topo_path = self._doc_path(TOPOLOGY_DOC)
        if topo_path is not None and topo_path.exists():
            doc = yaml.safe_load(topo_path.read_text())
            self._topology = parse_topology_doc(doc["topology"])
            if "split_profile" in doc:
                self._split_profile = _parse_split_profile(doc["split_profile"])
        nfvi_path = self._doc_path(NFVI_DOC)
        if nfvi_path is not None and nfvi_path.exists():
            doc = yaml.safe_load(nfvi_path.read_text())
            self._nfvi_seq = int(doc.get("snapshot_seq", 0))
            for entry_doc in doc.get("entries", []):
                entry = NfviResourceEntry(
                    node=entry_doc["node"],
                    capacity=_capacity(entry_doc["capacity"], "nfvi.capacity"),
                    allocated=_capacity(entry_doc["allocated"], "nfvi.allocated"),
                    snapshot_seq=int(entry_doc.get("snapshot_seq", 0)),
                )
                self._nfvi[entry.node] = entry
        solvers_path = self._doc_path(SOLVERS_DOC)
        if solvers_path is not None and solvers_path.exists():
            doc = yaml.safe_load(solvers_path.read_text())
            for solver_doc in doc.get("solvers", []):
                descriptor = SolverDescriptor(
                    solver_id=solver_doc["solver_id"],
                    kind=SolverKind(solver_doc["kind"]),
                    description=solver_doc.get("description", ""),
                )
                self._solvers[descriptor.solver_id] = descriptor
        cnfs_path = self._doc_path(CNFS_DOC)
        if cnfs_path is not None and cnfs_path.exists():
            doc = yaml.safe_load(cnfs_path.read_text())
            for name, spec_doc in doc.get("cnfs", {}).items():
                function = RadioFunction(name)
                spec = CnfSpec(
                    function=function,
                    cpu_demand=int(spec_doc["cpu_demand"]),
                    memory_demand=int(spec_doc["memory_demand"]),
                    image_ref=spec_doc["image_ref"],
                )
                self._cnfs[function] = CnfImageEntry(
                    function=function, image_ref=spec.image_ref, spec=spec
                )
