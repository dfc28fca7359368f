"""Shared test helpers: fixture paths and randomized scenario generation."""

from __future__ import annotations

import random
from pathlib import Path

from oplaceran import (
    Chain,
    CnfSpec,
    CrosshaulTopology,
    Link,
    NodeKind,
    RadioFunction,
    Scenario,
    SegmentRequirement,
    SplitProfile,
    TopologyNode,
)
from oplaceran.catalogs import NfviResourceEntry
from oplaceran.model import ComputeCapacity

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
SIXNODE = FIXTURES / "sixnode.scn"
TIGHT = FIXTURES / "tight.scn"
MONO = FIXTURES / "mono.scn"


def random_scenario(rng: random.Random, n_workers: int, n_chains: int) -> Scenario:
    """Scenario in fixture-like ranges over a randomized switch fabric.

    Workers attach to one of two virtual switches or directly to the
    physical switch; the core network hangs off the physical switch. Sizes
    and bounds are drawn so that a healthy share of instances is feasible
    while plenty remain infeasible.
    """
    assert n_chains <= n_workers
    workers = [f"W{i + 1}" for i in range(n_workers)]
    nodes = [TopologyNode(w, NodeKind.COMPUTE_WORKER) for w in workers]
    nodes += [
        TopologyNode("vSw1", NodeKind.VIRTUAL_SWITCH),
        TopologyNode("vSw2", NodeKind.VIRTUAL_SWITCH),
        TopologyNode("pSw", NodeKind.PHYSICAL_SWITCH),
        TopologyNode("CN", NodeKind.CORE_NETWORK_ANCHOR),
    ]
    links = [
        Link("vSw1-pSw", ("vSw1", "pSw"), 0.0, 10000, 10000),
        Link("vSw2-pSw", ("vSw2", "pSw"), 0.0, 10000, 10000),
        Link("CN-pSw", ("CN", "pSw"), 0.0, 10000, 10000),
    ]
    for w in workers:
        attach = rng.choice(["vSw1", "vSw2", "pSw"])
        latency = rng.choice([0.5, 1.0, 1.0, 2.0])
        capacity = rng.choice([500, 1000, 2000, 10000])
        links.append(Link(f"{w}-{attach}", (w, attach), latency, capacity, capacity))
    topology = CrosshaulTopology(nodes=nodes, links=links)

    nfvi = [
        NfviResourceEntry(
            node=w,
            capacity=ComputeCapacity(
                cpu=rng.randrange(800, 5200, 100),
                memory=rng.randrange(100, 2100, 50),
            ),
        )
        for w in workers
    ]
    chains = [
        Chain(chain_id=f"c{i + 1}", vru_node=w)
        for i, w in enumerate(rng.sample(workers, n_chains))
    ]
    fronthaul = rng.choice([1.0, 2.0, 3.0, 4.0])
    midhaul = fronthaul + rng.choice([0.0, 2.0, 6.0])
    backhaul = midhaul + rng.choice([0.0, 10.0, 20.0])
    profile = SplitProfile(
        fronthaul_o6=SegmentRequirement(fronthaul, rng.choice([100, 152, 200, 400])),
        midhaul_o2=SegmentRequirement(midhaul, rng.choice([100, 151, 200])),
        backhaul_cn=SegmentRequirement(backhaul, rng.choice([100, 150, 200])),
    )
    vru_cpu = rng.randrange(200, 600, 50)
    vru_mem = rng.randrange(50, 200, 25)
    specs = {
        RadioFunction.VRU: CnfSpec(RadioFunction.VRU, vru_cpu, vru_mem, "registry.local/r"),
        RadioFunction.VDU: CnfSpec(
            RadioFunction.VDU,
            vru_cpu + rng.randrange(0, 400, 100),
            vru_mem + rng.randrange(0, 300, 50),
            "registry.local/d",
        ),
        RadioFunction.VCU: CnfSpec(
            RadioFunction.VCU,
            vru_cpu + rng.randrange(0, 300, 100),
            vru_mem + rng.randrange(0, 500, 100),
            "registry.local/c",
        ),
    }
    return Scenario(
        topology=topology,
        nfvi=nfvi,
        chains=chains,
        split_profile=profile,
        cnf_specs=specs,
        solver_id="aggregation-max",
    )
