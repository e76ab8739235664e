import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from txlogscan.abi import builtin_registry  # noqa: E402
from txlogscan.events import build_trace  # noqa: E402
from txlogscan.ingestion import load_fixture  # noqa: E402
from txlogscan.pipeline import incident_fixture  # noqa: E402

INCIDENTS = ("xsurge", "beautychain", "mevbot", "governmental")


@pytest.fixture(scope="session")
def registry():
    return builtin_registry()


@pytest.fixture(scope="session")
def receipts():
    return {name: load_fixture(incident_fixture(name)) for name in (*INCIDENTS, "empty")}


@pytest.fixture(scope="session")
def traces(receipts, registry):
    return {name: build_trace(r, registry) for name, r in receipts.items()}
