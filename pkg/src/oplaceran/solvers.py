"""Built-in placement solvers behind the pluggable solver contract.

Three solvers ship by default:

* ``aggregation-max`` (exact): minimizes the number of distinct workers
  hosting vDUs/vCUs, then the summed vCU-to-core hop count, then picks the
  lexicographically smallest (vdu, vcu) node vector. Solved by depth-first
  search over per-chain candidates with a sound bound on the partial
  objective.
* ``du-pinned`` (exact): models the multi-CU style where each chain's vDU
  is fixed on its vRU worker; minimizes
  ``alpha * |distinct vCU workers| + beta * total path latency`` with the
  same canonical tie-break.
* ``greedy`` (heuristic): commits chains one by one in chain-id order,
  trying candidates ordered by (fewest newly opened workers, lowest added
  latency, smallest node ids).

A solver is any callable from PlacementRequest to PlacementResult; built-ins
register through the same path as external ones.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .catalogs import SolverDescriptor, SolverKind
from .errors import DuplicateId, InfeasibleRequest, UnknownSolver, ValidationError
from .feasibility import (
    PlacementRequest,
    PlacementResult,
    make_result,
    validate_request,
)
from .model import (
    Chain,
    ComputeCapacity,
    NodeId,
    PathFinder,
    RadioFunction,
    make_placement,
)

DU_PINNED_ALPHA = 100
DU_PINNED_BETA = 1

SolveFn = Callable[[PlacementRequest], PlacementResult]


class SolverRegistry:
    """Pool of placement solutions, selectable by id."""

    def __init__(self) -> None:
        self._solvers: dict[str, tuple[SolverDescriptor, SolveFn]] = {}

    def register(self, descriptor: SolverDescriptor, solve_fn: SolveFn) -> None:
        if descriptor.solver_id in self._solvers:
            raise DuplicateId(f"solver {descriptor.solver_id!r} already registered")
        self._solvers[descriptor.solver_id] = (descriptor, solve_fn)

    def has(self, solver_id: str) -> bool:
        return solver_id in self._solvers

    def descriptors(self) -> list[SolverDescriptor]:
        return [self._solvers[sid][0] for sid in sorted(self._solvers)]

    def solve(self, request: PlacementRequest) -> PlacementResult:
        if request.solver_id not in self._solvers:
            raise UnknownSolver(f"unknown solver {request.solver_id!r}")
        _, solve_fn = self._solvers[request.solver_id]
        started = time.perf_counter()
        result = solve_fn(request)
        result.solve_time = time.perf_counter() - started
        return result


def built_in_descriptors() -> list[SolverDescriptor]:
    return [
        SolverDescriptor(
            "aggregation-max",
            SolverKind.EXACT,
            "exact search minimizing the set of workers hosting vDUs and vCUs",
        ),
        SolverDescriptor(
            "du-pinned",
            SolverKind.EXACT,
            "exact search with vDUs fixed on their vRU workers, minimizing vCU cost",
        ),
        SolverDescriptor(
            "greedy",
            SolverKind.HEURISTIC,
            "first-fit heuristic preferring already-opened workers",
        ),
    ]


def register_built_ins(registry: SolverRegistry) -> None:
    fns = {
        "aggregation-max": solve_aggregation_max,
        "du-pinned": solve_du_pinned,
        "greedy": solve_greedy,
    }
    for descriptor in built_in_descriptors():
        registry.register(descriptor, fns[descriptor.solver_id])


# ---------------------------------------------------------------------------
# Candidate precomputation shared by the built-in search strategies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Option:
    """One (vdu, vcu) choice for a chain with its precomputed footprint."""

    vdu: NodeId
    vcu: NodeId
    node_delta: tuple[tuple[NodeId, int, int], ...]
    link_delta: tuple[tuple[str, float], ...]
    latency: Fraction
    cn_hops: int


@dataclass
class _SearchContext:
    request: PlacementRequest
    chains: list[Chain]
    paths: PathFinder
    cn: NodeId
    free: dict[NodeId, list[int]]
    residual: dict[str, float]
    options: list[list[_Option]]


def _build_context(request: PlacementRequest, pin_vdu: bool) -> _SearchContext:
    validate_request(request)
    topology = request.topology
    cn = topology.core_anchor()
    if cn is None:
        raise ValidationError("topology has no core network anchor")
    paths = PathFinder(topology)
    chains = sorted(request.chains, key=lambda c: c.chain_id)
    workers = topology.workers()

    free = {
        node: [cap.cpu, cap.memory] for node, cap in request.free_capacity().items()
    }
    for node in workers:
        free.setdefault(node, [0, 0])
    residual = {link.id: link.residual for link in topology.links}

    # Pinned vRUs consume their worker up front in every assignment.
    vru = request.cnf_specs[RadioFunction.VRU]
    for chain in chains:
        cell = free[chain.vru_node]
        cell[0] -= vru.cpu_demand
        cell[1] -= vru.memory_demand
        if cell[0] < 0 or cell[1] < 0:
            raise InfeasibleRequest(
                f"worker {chain.vru_node} cannot host its pinned vRU"
            )

    profile = request.split_profile
    fh_bound = Fraction(profile.fronthaul_o6.max_latency)
    mh_bound = Fraction(profile.midhaul_o2.max_latency)
    bh_bound = Fraction(profile.backhaul_cn.max_latency)
    vdu_spec = request.cnf_specs[RadioFunction.VDU]
    vcu_spec = request.cnf_specs[RadioFunction.VCU]

    options: list[list[_Option]] = []
    for chain in chains:
        chain_options: list[_Option] = []
        vdu_candidates = [chain.vru_node] if pin_vdu else workers
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
                demand: dict[NodeId, list[int]] = {}
                for node, spec in ((vdu, vdu_spec), (vcu, vcu_spec)):
                    cell = demand.setdefault(node, [0, 0])
                    cell[0] += spec.cpu_demand
                    cell[1] += spec.memory_demand
                # Standalone capacity filter: an option exceeding a node's
                # total free capacity can never join a feasible assignment.
                if any(
                    d[0] > free[node][0] or d[1] > free[node][1]
                    for node, d in demand.items()
                ):
                    continue
                links: dict[str, float] = {}
                for path, rate in (
                    (fh_path, profile.fronthaul_o6.bitrate),
                    (mh_path, profile.midhaul_o2.bitrate),
                    (bh_path, profile.backhaul_cn.bitrate),
                ):
                    for link_id in path:
                        links[link_id] = links.get(link_id, 0) + rate
                if any(links[l] > residual[l] for l in links):
                    continue
                chain_options.append(
                    _Option(
                        vdu=vdu,
                        vcu=vcu,
                        node_delta=tuple(
                            (node, d[0], d[1]) for node, d in sorted(demand.items())
                        ),
                        link_delta=tuple(sorted(links.items())),
                        latency=fh_lat + mh_lat + bh_lat,
                        cn_hops=len(bh_path),
                    )
                )
        if not chain_options:
            raise InfeasibleRequest(
                f"chain {chain.chain_id}: no (vDU, vCU) candidate satisfies the "
                f"split-profile bounds and worker capacities"
            )
        chain_options.sort(key=lambda o: (o.vdu, o.vcu))
        options.append(chain_options)

    return _SearchContext(
        request=request,
        chains=chains,
        paths=paths,
        cn=cn,
        free=free,
        residual=residual,
        options=options,
    )


def _apply(ctx: _SearchContext, option: _Option) -> bool:
    """Charge an option against the running capacities; False if it does not fit."""
    for node, cpu, mem in option.node_delta:
        cell = ctx.free[node]
        if cell[0] < cpu or cell[1] < mem:
            return False
    for link_id, rate in option.link_delta:
        if ctx.residual[link_id] < rate:
            return False
    for node, cpu, mem in option.node_delta:
        cell = ctx.free[node]
        cell[0] -= cpu
        cell[1] -= mem
    for link_id, rate in option.link_delta:
        ctx.residual[link_id] -= rate
    return True


def _undo(ctx: _SearchContext, option: _Option) -> None:
    for node, cpu, mem in option.node_delta:
        cell = ctx.free[node]
        cell[0] += cpu
        cell[1] += mem
    for link_id, rate in option.link_delta:
        ctx.residual[link_id] += rate


def _result_from_choice(
    ctx: _SearchContext, choice: list[_Option], solver_id: str, cost: Fraction = Fraction(0)
) -> PlacementResult:
    placements = [
        make_placement(chain, option.vdu, option.vcu, ctx.paths, ctx.cn)
        for chain, option in zip(ctx.chains, choice)
    ]
    return make_result(placements, ctx.request, solver_id, cost)


def _empty_result(request: PlacementRequest, solver_id: str) -> PlacementResult:
    return make_result([], request, solver_id)


# ---------------------------------------------------------------------------
# aggregation-max
# ---------------------------------------------------------------------------


def solve_aggregation_max(request: PlacementRequest) -> PlacementResult:
    if not request.chains:
        return _empty_result(request, "aggregation-max")
    ctx = _build_context(request, pin_vdu=False)
    n = len(ctx.chains)

    best_key: list | None = None
    best_choice: list[_Option] | None = None
    stack: list[_Option] = []

    def search(depth: int, hosts: frozenset[NodeId], cn_sum: int, vector: tuple) -> None:
        nonlocal best_key, best_choice
        if best_key is not None:
            # Partial objective only grows, so prune strictly-worse prefixes;
            # equal prefixes must be explored for the lexicographic tie-break.
            partial = (len(hosts), cn_sum)
            incumbent = (best_key[0], best_key[1])
            if partial > incumbent:
                return
            if partial == incumbent and vector > tuple(best_key[2][: len(vector)]):
                return
        if depth == n:
            key = [len(hosts), cn_sum, vector]
            if best_key is None or key < best_key:
                best_key = key
                best_choice = list(stack)
            return
        for option in ctx.options[depth]:
            if not _apply(ctx, option):
                continue
            stack.append(option)
            search(
                depth + 1,
                hosts | {option.vdu, option.vcu},
                cn_sum + option.cn_hops,
                vector + (option.vdu, option.vcu),
            )
            stack.pop()
            _undo(ctx, option)

    search(0, frozenset(), 0, ())
    if best_choice is None:
        raise InfeasibleRequest(
            "no joint assignment satisfies worker capacities and link bandwidth"
        )
    return _result_from_choice(ctx, best_choice, "aggregation-max")


# ---------------------------------------------------------------------------
# du-pinned
# ---------------------------------------------------------------------------


def solve_du_pinned(request: PlacementRequest) -> PlacementResult:
    if not request.chains:
        return _empty_result(request, "du-pinned")
    ctx = _build_context(request, pin_vdu=True)
    n = len(ctx.chains)
    alpha = Fraction(DU_PINNED_ALPHA)
    beta = Fraction(DU_PINNED_BETA)

    # Admissible completion bound: each remaining chain adds at least its
    # cheapest candidate latency and possibly no new vCU worker.
    min_tail = [Fraction(0)] * (n + 1)
    for i in range(n - 1, -1, -1):
        min_tail[i] = min_tail[i + 1] + min(o.latency for o in ctx.options[i]) * beta

    best_key: list | None = None
    best_choice: list[_Option] | None = None
    stack: list[_Option] = []

    def search(depth: int, vcu_hosts: frozenset[NodeId], latency: Fraction, vector: tuple) -> None:
        nonlocal best_key, best_choice
        cost_so_far = alpha * len(vcu_hosts) + beta * latency
        if best_key is not None and cost_so_far + min_tail[depth] > best_key[0]:
            return
        if depth == n:
            key = [cost_so_far, vector]
            if best_key is None or key < best_key:
                best_key = key
                best_choice = list(stack)
            return
        for option in ctx.options[depth]:
            if not _apply(ctx, option):
                continue
            stack.append(option)
            search(
                depth + 1,
                vcu_hosts | {option.vcu},
                latency + option.latency,
                vector + (option.vdu, option.vcu),
            )
            stack.pop()
            _undo(ctx, option)

    search(0, frozenset(), Fraction(0), ())
    if best_choice is None:
        raise InfeasibleRequest(
            "no vCU assignment satisfies worker capacities with pinned vDUs"
        )
    return _result_from_choice(ctx, best_choice, "du-pinned", cost=best_key[0])


def du_pinned_cost(result: PlacementResult) -> Fraction:
    """Recompute the du-pinned objective from a finished result (for cross-checks)."""
    vcu_hosts = {p.vcu_node for p in result.placements}
    latency = Fraction(0)
    for p in result.placements:
        fh, mh, bh = result.segment_latencies[p.chain_id]
        latency += Fraction(fh) + Fraction(mh) + Fraction(bh)
    return Fraction(DU_PINNED_ALPHA) * len(vcu_hosts) + Fraction(DU_PINNED_BETA) * latency


# ---------------------------------------------------------------------------
# greedy
# ---------------------------------------------------------------------------


def solve_greedy(request: PlacementRequest) -> PlacementResult:
    if not request.chains:
        return _empty_result(request, "greedy")
    ctx = _build_context(request, pin_vdu=False)

    opened: set[NodeId] = set()
    choice: list[_Option] = []
    for chain, chain_options in zip(ctx.chains, ctx.options):
        ranked = sorted(
            chain_options,
            key=lambda o: (
                len({o.vdu, o.vcu} - opened),
                o.latency,
                o.vdu,
                o.vcu,
            ),
        )
        committed = None
        for option in ranked:
            if _apply(ctx, option):
                committed = option
                break
        if committed is None:
            raise InfeasibleRequest(
                f"greedy dead-end: chain {chain.chain_id} has no feasible candidate "
                f"given prior commitments"
            )
        opened.update({committed.vdu, committed.vcu})
        choice.append(committed)

    return _result_from_choice(ctx, choice, "greedy")
