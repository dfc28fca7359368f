"""Catalog repository: scenario parsing, persistence, snapshot semantics."""

from __future__ import annotations

import yaml
import pytest

from oplaceran import (
    CatalogStore,
    DuplicateId,
    MissingEntry,
    NodeKind,
    ParseError,
    RadioFunction,
    UnknownNode,
    ValidationError,
)
from oplaceran.catalogs import (
    NfviResourceEntry,
    SolverDescriptor,
    SolverKind,
    load_scenario,
    load_topology,
    parse_scenario,
    scenario_doc,
    store_scenario,
)
from oplaceran.model import ComputeCapacity

from support import FIXTURES, MONO, SIXNODE, TIGHT


class TestScenarioParsing:
    def test_fixture_counts(self, sixnode_scenario):
        topology = sixnode_scenario.topology
        by_kind = {}
        for node in topology.nodes:
            by_kind[node.kind] = by_kind.get(node.kind, 0) + 1
        assert by_kind[NodeKind.COMPUTE_WORKER] == 4
        assert by_kind[NodeKind.COMPUTE_MASTER] == 2
        assert by_kind[NodeKind.VIRTUAL_SWITCH] + by_kind[NodeKind.PHYSICAL_SWITCH] == 3
        assert by_kind[NodeKind.CORE_NETWORK_ANCHOR] == 1
        assert len(sixnode_scenario.chains) == 4

    def test_duplicate_node_id_is_parse_error(self):
        text = SIXNODE.read_text().replace("{id: W2, kind: ComputeWorker}",
                                           "{id: W1, kind: ComputeWorker}")
        with pytest.raises(ParseError, match="W1"):
            parse_scenario(text)

    def test_negative_latency_is_validation_error(self):
        text = SIXNODE.read_text().replace("latency: 1.0, capacity: 10000}",
                                           "latency: -1.0, capacity: 10000}", 1)
        with pytest.raises(ValidationError):
            parse_scenario(text)

    def test_unknown_kind_is_parse_error(self):
        text = SIXNODE.read_text().replace("kind: ComputeMaster", "kind: Mainframe")
        with pytest.raises(ParseError, match="Mainframe"):
            parse_scenario(text)

    def test_swapped_split_profile_rejected(self):
        text = SIXNODE.read_text().replace(
            "fronthaul_o6: {max_latency: 2.0, bitrate: 152}",
            "fronthaul_o6: {max_latency: 20.0, bitrate: 152}",
        )
        with pytest.raises(ValidationError, match="fronthaul <= midhaul <= backhaul"):
            parse_scenario(text)

    def test_chain_pin_must_be_worker(self):
        text = SIXNODE.read_text().replace("{chain_id: c1, vru_node: W1}",
                                           "{chain_id: c1, vru_node: M1}")
        with pytest.raises(ValidationError, match="M1"):
            parse_scenario(text)

    def test_load_topology_standalone(self):
        topology = load_topology(SIXNODE.read_text())
        assert len(topology.nodes) == 10
        assert topology.core_anchor() == "CN"

    def test_round_trip_all_fixtures(self, tmp_path):
        for path in (SIXNODE, TIGHT, MONO):
            first = load_scenario(path)
            out = tmp_path / path.name
            store_scenario(first, out)
            second = load_scenario(out)
            assert first == second
            # Stored form is canonical: storing again is byte-identical.
            out2 = tmp_path / (path.name + ".2")
            store_scenario(second, out2)
            assert out.read_text() == out2.read_text()


class TestCatalogStore:
    def _loaded(self, scenario, tmp_path=None) -> CatalogStore:
        store = CatalogStore(tmp_path)
        store.set_topology_inputs(scenario.topology, scenario.split_profile)
        store.set_cnf_catalog(scenario.cnf_specs)
        store.update_nfvi(scenario.nfvi)
        return store

    def test_update_nfvi_paper_capacities(self, sixnode_scenario):
        store = self._loaded(sixnode_scenario)
        snapshot = store.nfvi_snapshot()
        by_node = snapshot.by_node()
        assert by_node["W1"].capacity == ComputeCapacity(5000, 2000)
        assert by_node["W2"].capacity == ComputeCapacity(1000, 200)
        assert by_node["W3"].capacity == ComputeCapacity(2000, 1200)
        assert by_node["W4"].capacity == ComputeCapacity(1000, 200)

    def test_empty_update_is_noop_but_advances_seq(self, sixnode_scenario):
        store = self._loaded(sixnode_scenario)
        before = store.nfvi_snapshot()
        seq = store.update_nfvi([])
        after = store.nfvi_snapshot()
        assert seq == before.seq + 1
        assert after.entries == before.entries

    def test_unknown_node_rejected(self, sixnode_scenario):
        store = self._loaded(sixnode_scenario)
        entry = NfviResourceEntry(node="W9", capacity=ComputeCapacity(100, 100))
        with pytest.raises(UnknownNode, match="W9"):
            store.update_nfvi([entry])

    def test_snapshot_isolation(self, sixnode_scenario):
        store = self._loaded(sixnode_scenario)
        snapshot = store.nfvi_snapshot()
        stale_w1 = snapshot.by_node()["W1"]
        store.update_nfvi(
            [NfviResourceEntry(node="W1", capacity=ComputeCapacity(1, 1))]
        )
        # The held snapshot still shows the old entry at the old seq.
        assert snapshot.by_node()["W1"] is stale_w1
        assert snapshot.by_node()["W1"].capacity == ComputeCapacity(5000, 2000)
        assert store.nfvi_snapshot().by_node()["W1"].capacity == ComputeCapacity(1, 1)

    def test_idempotent_update_modulo_seq(self, sixnode_scenario, tmp_path):
        store = self._loaded(sixnode_scenario, tmp_path)
        store.update_nfvi(sixnode_scenario.nfvi)
        first = yaml.safe_load((tmp_path / "nfvi.yaml").read_text())
        store.update_nfvi(sixnode_scenario.nfvi)
        second = yaml.safe_load((tmp_path / "nfvi.yaml").read_text())

        def strip_seq(doc):
            doc = dict(doc)
            doc.pop("snapshot_seq")
            return [
                {k: v for k, v in entry.items() if k != "snapshot_seq"}
                for entry in doc["entries"]
            ]

        assert strip_seq(first) == strip_seq(second)
        assert second["snapshot_seq"] == first["snapshot_seq"] + 1

    def test_register_solver_and_duplicate(self, sixnode_scenario):
        store = self._loaded(sixnode_scenario)
        descriptor = SolverDescriptor("aggregation-max", SolverKind.EXACT, "exact")
        store.register_solver(descriptor)
        with pytest.raises(DuplicateId):
            store.register_solver(descriptor)

    def test_built_in_listing(self, orchestrator):
        ids = {d.solver_id for d in orchestrator.catalogs.solvers()}
        assert ids == {"aggregation-max", "du-pinned", "greedy"}

    def test_cnf_catalog(self, sixnode_scenario):
        store = self._loaded(sixnode_scenario)
        vru = store.get_cnf_image(RadioFunction.VRU)
        demands = [
            store.get_cnf_image(f).spec.cpu_demand for f in RadioFunction
        ]
        assert vru.spec.cpu_demand == min(demands)
        vcu = store.get_cnf_image(RadioFunction.VCU)
        assert vcu.image_ref
        empty = CatalogStore()
        with pytest.raises(MissingEntry):
            empty.get_cnf_image(RadioFunction.VDU)

    def test_persistence_round_trip(self, sixnode_scenario, tmp_path):
        store = self._loaded(sixnode_scenario, tmp_path)
        store.register_solver(SolverDescriptor("custom", SolverKind.HEURISTIC, "x"))
        reloaded = CatalogStore(tmp_path)
        assert reloaded.topology() == store.topology()
        assert reloaded.split_profile() == store.split_profile()
        assert reloaded.nfvi_snapshot().entries == store.nfvi_snapshot().entries
        assert reloaded.solvers() == store.solvers()
        assert reloaded.cnf_entries() == store.cnf_entries()

    def test_scenario_doc_shape(self, sixnode_scenario):
        doc = scenario_doc(sixnode_scenario)
        assert set(doc) == {
            "topology",
            "nfvi",
            "chains",
            "split_profile",
            "cnf_specs",
            "solver",
        }
        assert {n["kind"] for n in doc["topology"]["nodes"]} >= {
            "ComputeWorker",
            "CoreNetworkAnchor",
        }
