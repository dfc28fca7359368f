"""Exhaustive placement enumeration used to certify the exact solvers.

The oracle enumerates every joint (vdu, vcu) assignment over the workers,
keeps cumulative bandwidth and compute accounting while it walks the
assignment tree, and returns the feasible assignment that minimizes the
selected objective under the same canonical tie-break the solvers use. It
shares only the feasibility arithmetic (and routing) with the solvers;
the enumeration itself is deliberately plain.

A guard refuses instances whose raw assignment count exceeds ten million.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import InfeasibleRequest, TooLarge, ValidationError
from .feasibility import (
    PlacementRequest,
    PlacementResult,
    check_feasibility,
    make_result,
    validate_request,
)
from .model import PathFinder, RadioFunction, make_placement
from .solvers import DU_PINNED_ALPHA, DU_PINNED_BETA

ENUMERATION_GUARD = 10_000_000

OBJECTIVE_KINDS = ("aggregation", "du-pinned")


def brute_force_oracle(
    request: PlacementRequest, objective_kind: str = "aggregation"
) -> PlacementResult:
    if objective_kind not in OBJECTIVE_KINDS:
        raise ValidationError(
            f"unknown objective kind {objective_kind!r}; expected one of {OBJECTIVE_KINDS}"
        )
    validate_request(request)
    solver_label = f"oracle-{objective_kind}"
    if not request.chains:
        return make_result([], request, solver_label)

    topology = request.topology
    workers = topology.workers()
    cn = topology.core_anchor()
    if cn is None:
        raise ValidationError("topology has no core network anchor")
    chains = sorted(request.chains, key=lambda c: c.chain_id)

    per_chain = len(workers) if objective_kind == "du-pinned" else len(workers) ** 2
    total = per_chain ** len(chains)
    if total > ENUMERATION_GUARD:
        raise TooLarge(
            f"{total} assignments exceed the enumeration guard of {ENUMERATION_GUARD}"
        )

    node_index = {node: i for i, node in enumerate(sorted(n.id for n in topology.nodes))}
    link_index = {link.id: i for i, link in enumerate(topology.links)}
    worker_bit = {w: 1 << i for i, w in enumerate(workers)}

    free_cpu = [0] * len(node_index)
    free_mem = [0] * len(node_index)
    for entry in request.nfvi:
        free_cpu[node_index[entry.node]] = entry.free.cpu
        free_mem[node_index[entry.node]] = entry.free.memory
    link_avail = [0.0] * len(link_index)
    for link in topology.links:
        link_avail[link_index[link.id]] = link.residual

    vru = request.cnf_specs[RadioFunction.VRU]
    for chain in chains:
        i = node_index[chain.vru_node]
        free_cpu[i] -= vru.cpu_demand
        free_mem[i] -= vru.memory_demand
        if free_cpu[i] < 0 or free_mem[i] < 0:
            raise InfeasibleRequest(f"worker {chain.vru_node} cannot host its pinned vRU")

    paths = PathFinder(topology)
    profile = request.split_profile
    fh_bound = Fraction(profile.fronthaul_o6.max_latency)
    mh_bound = Fraction(profile.midhaul_o2.max_latency)
    bh_bound = Fraction(profile.backhaul_cn.max_latency)
    vdu_spec = request.cnf_specs[RadioFunction.VDU]
    vcu_spec = request.cnf_specs[RadioFunction.VCU]

    # Per-chain candidate table. Position-independent constraints (segment
    # latency, single-node overflow) are resolved here; everything that
    # depends on the other chains stays in the enumeration below.
    chain_options = []
    for chain in chains:
        options = []
        vdu_candidates = [chain.vru_node] if objective_kind == "du-pinned" else workers
        for vdu in vdu_candidates:
            fh_path, fh_lat = paths.path(chain.vru_node, vdu)
            if fh_lat > fh_bound:
                continue
            for vcu in workers:
                mh_path, mh_lat = paths.path(vdu, vcu)
                if mh_lat > mh_bound:
                    continue
                bh_path, bh_lat = paths.path(vcu, cn)
                if bh_lat > bh_bound:
                    continue
                node_need: dict[int, list[int]] = {}
                for node, spec in ((vdu, vdu_spec), (vcu, vcu_spec)):
                    cell = node_need.setdefault(node_index[node], [0, 0])
                    cell[0] += spec.cpu_demand
                    cell[1] += spec.memory_demand
                if any(
                    need[0] > free_cpu[i] or need[1] > free_mem[i]
                    for i, need in node_need.items()
                ):
                    continue
                link_need: dict[int, float] = {}
                for path, rate in (
                    (fh_path, profile.fronthaul_o6.bitrate),
                    (mh_path, profile.midhaul_o2.bitrate),
                    (bh_path, profile.backhaul_cn.bitrate),
                ):
                    for link_id in path:
                        idx = link_index[link_id]
                        link_need[idx] = link_need.get(idx, 0) + rate
                if any(link_need[i] > link_avail[i] for i in link_need):
                    continue
                options.append(
                    {
                        "vdu": vdu,
                        "vcu": vcu,
                        "nodes": tuple((i, n[0], n[1]) for i, n in sorted(node_need.items())),
                        "links": tuple(sorted(link_need.items())),
                        "mask": worker_bit[vdu] | worker_bit[vcu],
                        "vcu_mask": worker_bit[vcu],
                        "cn_hops": len(bh_path),
                        "latency": fh_lat + mh_lat + bh_lat,
                    }
                )
        if not options:
            raise InfeasibleRequest(
                f"chain {chain.chain_id}: every candidate violates a per-chain bound"
            )
        options.sort(key=lambda o: (o["vdu"], o["vcu"]))
        chain_options.append(options)

    alpha = Fraction(DU_PINNED_ALPHA)
    beta = Fraction(DU_PINNED_BETA)
    n = len(chains)
    best_key = None
    best_choice = None
    stack = [None] * n

    def enumerate_from(depth, mask, vcu_mask, cn_sum, latency, vector):
        nonlocal best_key, best_choice
        if depth == n:
            if objective_kind == "aggregation":
                key = (mask.bit_count(), cn_sum, vector)
            else:
                key = (alpha * vcu_mask.bit_count() + beta * latency, vector)
            if best_key is None or key < best_key:
                best_key = key
                best_choice = list(stack)
            return
        for option in chain_options[depth]:
            fits = True
            for i, cpu, mem in option["nodes"]:
                if free_cpu[i] < cpu or free_mem[i] < mem:
                    fits = False
                    break
            if fits:
                for i, rate in option["links"]:
                    if link_avail[i] < rate:
                        fits = False
                        break
            if not fits:
                continue
            for i, cpu, mem in option["nodes"]:
                free_cpu[i] -= cpu
                free_mem[i] -= mem
            for i, rate in option["links"]:
                link_avail[i] -= rate
            stack[depth] = option
            enumerate_from(
                depth + 1,
                mask | option["mask"],
                vcu_mask | option["vcu_mask"],
                cn_sum + option["cn_hops"],
                latency + option["latency"],
                vector + (option["vdu"], option["vcu"]),
            )
            for i, cpu, mem in option["nodes"]:
                free_cpu[i] += cpu
                free_mem[i] += mem
            for i, rate in option["links"]:
                link_avail[i] += rate

    enumerate_from(0, 0, 0, 0, Fraction(0), ())
    if best_choice is None:
        raise InfeasibleRequest(
            "no joint assignment satisfies worker capacities and link bandwidth"
        )

    placements = [
        make_placement(chain, option["vdu"], option["vcu"], paths, cn)
        for chain, option in zip(chains, best_choice)
    ]
    verdict = check_feasibility(placements, request)
    if not verdict.feasible:
        raise RuntimeError(
            "oracle accounting disagrees with the feasibility kernel: "
            + "; ".join(str(v) for v in verdict.violations)
        )
    cost = best_key[0] if objective_kind == "du-pinned" else Fraction(0)
    return make_result(placements, request, solver_label, cost=cost)
