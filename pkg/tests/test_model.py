"""Domain model: topology validation, routing, scenario classification."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import product

import pytest

from oplaceran import (
    Chain,
    ChainPlacement,
    CrosshaulTopology,
    Link,
    NodeKind,
    NoPath,
    ScenarioKind,
    TopologyNode,
    classify_scenario,
    min_latency_path,
    validate_topology,
)
from oplaceran.model import PathFinder, splits_for, SplitOption


# ---------------------------------------------------------------------------
# Independent routing oracle: enumerate every simple path and take the best
# (latency, hops, node sequence) key. Used to certify min_latency_path.
# ---------------------------------------------------------------------------


def enumerate_best_path(topology: CrosshaulTopology, src: str, dst: str):
    adjacency: dict[str, list[Link]] = {}
    for link in topology.links:
        a, b = link.endpoints
        adjacency.setdefault(a, []).append(link)
        adjacency.setdefault(b, []).append(link)

    best = None

    def walk(node, seen, links, latency):
        nonlocal best
        if node == dst:
            key = (latency, len(links), tuple(seen))
            if best is None or key < best[0]:
                best = (key, list(links))
            return
        for link in adjacency.get(node, []):
            nxt = link.other_end(node)
            if nxt in seen:
                continue
            seen.append(nxt)
            links.append(link.id)
            walk(nxt, seen, links, latency + Fraction(link.latency))
            links.pop()
            seen.pop()

    if src == dst:
        return [], Fraction(0)
    walk(src, [src], [], Fraction(0))
    if best is None:
        return None
    return best[1], best[0][0]


def random_topology(rng: random.Random, n_nodes: int) -> CrosshaulTopology:
    kinds = [NodeKind.CORE_NETWORK_ANCHOR] + [
        rng.choice(
            [
                NodeKind.COMPUTE_WORKER,
                NodeKind.COMPUTE_MASTER,
                NodeKind.VIRTUAL_SWITCH,
                NodeKind.PHYSICAL_SWITCH,
            ]
        )
        for _ in range(n_nodes - 1)
    ]
    nodes = [TopologyNode(f"n{i:02d}", kind) for i, kind in enumerate(kinds)]
    ids = [n.id for n in nodes]
    links = []
    # Random spanning tree keeps everything connected, then extra edges.
    for i in range(1, len(ids)):
        j = rng.randrange(i)
        links.append((ids[j], ids[i]))
    extra = rng.randrange(0, n_nodes)
    while extra > 0:
        a, b = rng.sample(ids, 2)
        pair = tuple(sorted((a, b)))
        if all(tuple(sorted(l)) != pair for l in links):
            links.append((a, b))
        extra -= 1
    link_objs = [
        Link(
            id=f"l{i:02d}",
            endpoints=pair,
            latency=rng.choice([0.0, 0.5, 1.0, 2.0, 3.0]),
            capacity=1000,
            residual=1000,
        )
        for i, pair in enumerate(links)
    ]
    return CrosshaulTopology(nodes=nodes, links=link_objs)


# ---------------------------------------------------------------------------
# min_latency_path
# ---------------------------------------------------------------------------


class TestRouting:
    def test_identity_path(self, sixnode_scenario):
        links, latency = min_latency_path(sixnode_scenario.topology, "W1", "W1")
        assert links == []
        assert latency == 0

    def test_fixture_worker_to_worker(self, sixnode_scenario):
        links, latency = min_latency_path(sixnode_scenario.topology, "W1", "W3")
        assert latency == 2.0
        assert links == ["W1-vSw1", "vSw1-pSw", "vSw2-pSw", "W3-vSw2"]

    def test_fixture_worker_to_cn(self, sixnode_scenario):
        links, latency = min_latency_path(sixnode_scenario.topology, "W1", "CN")
        assert latency == 1.0
        assert links == ["W1-vSw1", "vSw1-pSw", "CN-pSw"]

    def test_no_path_on_disconnected(self):
        topology = CrosshaulTopology(
            nodes=[
                TopologyNode("a", NodeKind.COMPUTE_WORKER),
                TopologyNode("b", NodeKind.COMPUTE_WORKER),
            ],
            links=[],
        )
        with pytest.raises(NoPath):
            min_latency_path(topology, "a", "b")

    def test_optimality_against_enumeration(self):
        rng = random.Random(7)
        for _ in range(50):
            topology = random_topology(rng, rng.randint(3, 12))
            finder = PathFinder(topology)
            ids = [n.id for n in topology.nodes]
            for src, dst in [(rng.choice(ids), rng.choice(ids)) for _ in range(6)]:
                expect = enumerate_best_path(topology, src, dst)
                got_links, got_latency = finder.path(src, dst)
                assert expect is not None
                assert got_latency == expect[1]
                # Full tie-break agreement: same link sequence, not just cost.
                assert list(got_links) == expect[0]

    def test_tie_break_prefers_fewer_hops_then_node_ids(self):
        # Two zero-cost routes a->d: direct (1 hop) and via b (2 hops).
        nodes = [
            TopologyNode("a", NodeKind.COMPUTE_WORKER),
            TopologyNode("b", NodeKind.VIRTUAL_SWITCH),
            TopologyNode("c", NodeKind.VIRTUAL_SWITCH),
            TopologyNode("d", NodeKind.CORE_NETWORK_ANCHOR),
        ]
        links = [
            Link("a-b", ("a", "b"), 0.0, 100, 100),
            Link("b-d", ("b", "d"), 0.0, 100, 100),
            Link("a-c", ("a", "c"), 0.0, 100, 100),
            Link("c-d", ("c", "d"), 0.0, 100, 100),
            Link("a-d", ("a", "d"), 0.0, 100, 100),
        ]
        topology = CrosshaulTopology(nodes=nodes, links=links)
        links_found, latency = min_latency_path(topology, "a", "d")
        assert latency == 0.0
        assert links_found == ["a-d"]
        # Remove the direct link: between a-b-d and a-c-d the smaller
        # node-id sequence (via b) must win.
        topology.links = [l for l in topology.links if l.id != "a-d"]
        links_found, _ = min_latency_path(topology, "a", "d")
        assert links_found == ["a-b", "b-d"]

    def test_deterministic_between_instances(self, sixnode_scenario):
        first = PathFinder(sixnode_scenario.topology)
        second = PathFinder(sixnode_scenario.topology)
        for src in ("W1", "W2", "W3", "W4"):
            for dst in ("W1", "W2", "W3", "W4", "CN"):
                assert first.path(src, dst) == second.path(src, dst)
                assert first.path(src, dst) == first.path(src, dst)


# ---------------------------------------------------------------------------
# validate_topology
# ---------------------------------------------------------------------------


class TestValidateTopology:
    def test_fixture_is_valid(self, sixnode_scenario):
        report = validate_topology(sixnode_scenario.topology)
        assert report.ok

    def test_missing_cn_anchor(self):
        topology = CrosshaulTopology(
            nodes=[TopologyNode("w", NodeKind.COMPUTE_WORKER)], links=[]
        )
        report = validate_topology(topology)
        assert not report.ok
        assert any("missing CN anchor" in str(v) for v in report.violations)

    def test_disconnected_worker(self):
        topology = CrosshaulTopology(
            nodes=[
                TopologyNode("w1", NodeKind.COMPUTE_WORKER),
                TopologyNode("w2", NodeKind.COMPUTE_WORKER),
                TopologyNode("cn", NodeKind.CORE_NETWORK_ANCHOR),
            ],
            links=[Link("l0", ("w1", "cn"), 1.0, 100, 100)],
        )
        report = validate_topology(topology)
        assert any(v.kind == "disconnected" and v.node_id == "w2" for v in report.violations)

    def test_duplicate_node_and_bad_link(self):
        topology = CrosshaulTopology(
            nodes=[
                TopologyNode("x", NodeKind.COMPUTE_WORKER),
                TopologyNode("x", NodeKind.COMPUTE_MASTER),
                TopologyNode("cn", NodeKind.CORE_NETWORK_ANCHOR),
            ],
            links=[
                Link("l0", ("x", "cn"), -1.0, 100, 100),
                Link("l1", ("x", "ghost"), 1.0, 0, 0),
            ],
        )
        report = validate_topology(topology)
        kinds = {v.kind for v in report.violations}
        assert "node-id" in kinds
        assert "link-latency" in kinds
        assert "link-capacity" in kinds
        assert "link-endpoint" in kinds

    def test_validation_soundness_routing_never_fails(self):
        # Any topology passing validation must route between all compute
        # nodes and the CN anchor.
        rng = random.Random(21)
        checked = 0
        for _ in range(60):
            topology = random_topology(rng, rng.randint(3, 10))
            report = validate_topology(topology)
            if not report.ok:
                continue
            checked += 1
            finder = PathFinder(topology)
            cn = topology.core_anchor()
            for node in topology.compute_nodes():
                finder.path(node, cn)
                for other in topology.compute_nodes():
                    finder.path(node, other)
        assert checked > 10


# ---------------------------------------------------------------------------
# classify_scenario
# ---------------------------------------------------------------------------


def _placement(vru, vdu, vcu) -> ChainPlacement:
    return ChainPlacement(
        chain_id="c",
        vru_node=vru,
        vdu_node=vdu,
        vcu_node=vcu,
        fronthaul_path=(),
        midhaul_path=(),
        backhaul_path=("l",),
        splits_used=splits_for(vru, vdu, vcu),
    )


class TestClassifyScenario:
    def test_monolithic(self):
        assert classify_scenario(_placement("W1", "W1", "W1")) is ScenarioKind.DRAN_MONOLITHIC

    def test_cran_du_ru_integrated(self):
        assert (
            classify_scenario(_placement("W2", "W2", "W1"))
            is ScenarioKind.CRAN_DU_RU_INTEGRATED
        )

    def test_cu_du_colocated(self):
        assert classify_scenario(_placement("W2", "W1", "W1")) is ScenarioKind.CU_DU_COLOCATED

    def test_fully_split(self):
        assert classify_scenario(_placement("W1", "W2", "W3")) is ScenarioKind.FULLY_SPLIT

    def test_total_partition(self):
        # Every triple over three symbolic nodes maps to exactly one kind.
        seen = set()
        for vru, vdu, vcu in product("ABC", repeat=3):
            kind = classify_scenario(_placement(vru, vdu, vcu))
            assert isinstance(kind, ScenarioKind)
            seen.add(kind)
        assert seen == set(ScenarioKind)

    def test_splits_used(self):
        p = _placement("W1", "W1", "W2")
        assert p.splits_used == frozenset({SplitOption.O2})
        p = _placement("W1", "W2", "W2")
        assert p.splits_used == frozenset({SplitOption.O6})
        p = _placement("W1", "W1", "W1")
        assert p.splits_used == frozenset()
