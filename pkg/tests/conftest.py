from __future__ import annotations

import pytest

from oplaceran import Orchestrator
from oplaceran.catalogs import load_scenario

from support import MONO, SIXNODE, TIGHT


@pytest.fixture()
def sixnode_scenario():
    return load_scenario(SIXNODE)


@pytest.fixture()
def mono_scenario():
    return load_scenario(MONO)


@pytest.fixture()
def tight_scenario():
    return load_scenario(TIGHT)


@pytest.fixture()
def orchestrator():
    orch = Orchestrator(poll_interval=0.002)
    yield orch
    orch.shutdown()
