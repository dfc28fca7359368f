"""Feasibility kernel: examples, violations, independent cross-check."""

from __future__ import annotations

import random

from oplaceran import check_feasibility, request_from_scenario
from oplaceran.feasibility import PlacementRequest
from oplaceran.model import PathFinder, RadioFunction, make_placement

from support import random_scenario


def full_placements(request: PlacementRequest, assignment: dict[str, tuple[str, str]]):
    """Build chain placements with min-latency paths for a (vdu, vcu) map."""
    paths = PathFinder(request.topology)
    cn = request.topology.core_anchor()
    return [
        make_placement(chain, *assignment[chain.chain_id], paths=paths, cn=cn)
        for chain in sorted(request.chains, key=lambda c: c.chain_id)
    ]


def straight_line_check(placements, request: PlacementRequest) -> bool:
    """Independent re-statement of the constraint arithmetic, plain loops only."""
    link_by_id = {}
    for link in request.topology.links:
        link_by_id[link.id] = link
    profile = request.split_profile
    segment_req = {
        "fh": (profile.fronthaul_o6.max_latency, profile.fronthaul_o6.bitrate),
        "mh": (profile.midhaul_o2.max_latency, profile.midhaul_o2.bitrate),
        "bh": (profile.backhaul_cn.max_latency, profile.backhaul_cn.bitrate),
    }

    link_sum = {}
    cpu_sum = {}
    mem_sum = {}
    for p in placements:
        for seg, path in (("fh", p.fronthaul_path), ("mh", p.midhaul_path), ("bh", p.backhaul_path)):
            bound, rate = segment_req[seg]
            latency = 0.0
            for link_id in path:
                latency = latency + link_by_id[link_id].latency
                link_sum[link_id] = link_sum.get(link_id, 0) + rate
            if latency > bound:
                return False
        for function, node in (
            (RadioFunction.VRU, p.vru_node),
            (RadioFunction.VDU, p.vdu_node),
            (RadioFunction.VCU, p.vcu_node),
        ):
            spec = request.cnf_specs[function]
            cpu_sum[node] = cpu_sum.get(node, 0) + spec.cpu_demand
            mem_sum[node] = mem_sum.get(node, 0) + spec.memory_demand

    free = {}
    for entry in request.nfvi:
        free[entry.node] = (
            entry.capacity.cpu - entry.allocated.cpu,
            entry.capacity.memory - entry.allocated.memory,
        )
    for node in cpu_sum:
        cpu_free, mem_free = free.get(node, (0, 0))
        if cpu_sum[node] > cpu_free or mem_sum[node] > mem_free:
            return False
    for link_id in link_sum:
        if link_sum[link_id] > link_by_id[link_id].residual:
            return False
    return True


class TestKernelExamples:
    def test_all_monolithic_on_fixture_is_infeasible(self, sixnode_scenario):
        request = request_from_scenario(sixnode_scenario)
        placements = full_placements(
            request, {c.chain_id: (c.vru_node, c.vru_node) for c in request.chains}
        )
        verdict = check_feasibility(placements, request)
        assert not verdict.feasible
        w2 = [v for v in verdict.violations if v.node_id == "W2"]
        assert {v.kind for v in w2} == {"node-cpu", "node-memory"}
        assert any("node W2 cpu 1500 > 1000" == v.message for v in w2)

    def test_single_monolithic_chain_feasible(self, mono_scenario):
        request = request_from_scenario(mono_scenario)
        placements = full_placements(request, {"c1": ("W1", "W1")})
        verdict = check_feasibility(placements, request)
        assert verdict.feasible
        assert placements[0].fronthaul_path == ()
        assert placements[0].midhaul_path == ()

    def test_fronthaul_bound_violation_message(self, sixnode_scenario):
        from dataclasses import replace
        from oplaceran.model import SegmentRequirement

        request = request_from_scenario(sixnode_scenario)
        request.split_profile = replace(
            request.split_profile,
            fronthaul_o6=SegmentRequirement(max_latency=1.0, bitrate=152),
        )
        request.chains = [c for c in request.chains if c.chain_id == "c2"]
        placements = full_placements(request, {"c2": ("W1", "W1")})
        verdict = check_feasibility(placements, request)
        assert any(
            v.kind == "latency" and "fronthaul latency 2 > 1" in v.message
            for v in verdict.violations
        )

    def test_chain_cover_mismatch(self, sixnode_scenario):
        request = request_from_scenario(sixnode_scenario)
        placements = full_placements(
            request, {c.chain_id: ("W1", "W1") for c in request.chains}
        )
        verdict = check_feasibility(placements[:-1], request)
        assert not verdict.feasible
        assert verdict.violations[0].kind == "chain-cover"

    def test_colocated_segments_consume_no_bandwidth(self, mono_scenario):
        request = request_from_scenario(mono_scenario)
        placements = full_placements(request, {"c1": ("W1", "W1")})
        # Only the backhaul should reserve bandwidth.
        from oplaceran.feasibility import aggregate_loads

        _, link_loads = aggregate_loads(
            placements, request.cnf_specs, request.split_profile
        )
        assert set(link_loads) == {"W1-vSw1", "vSw1-pSw", "CN-pSw"}
        assert all(v == 150 for v in link_loads.values())


class TestKernelCrossCheck:
    def test_random_placements_agree_with_straight_line(self):
        rng = random.Random(99)
        disagreements = 0
        checked = 0
        for _ in range(300):
            scenario = random_scenario(rng, rng.randint(2, 5), rng.randint(1, 3))
            request = request_from_scenario(scenario)
            workers = request.topology.workers()
            for _ in range(4):
                assignment = {
                    c.chain_id: (rng.choice(workers), rng.choice(workers))
                    for c in request.chains
                }
                placements = full_placements(request, assignment)
                kernel = check_feasibility(placements, request).feasible
                plain = straight_line_check(placements, request)
                checked += 1
                if kernel != plain:
                    disagreements += 1
        assert checked == 1200
        assert disagreements == 0
