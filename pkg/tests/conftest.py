import json
import subprocess
import sys
from pathlib import Path

import pytest

from akaprime import provisioning
from akaprime.entities import NetworkType
from akaprime.harness import Outcome, Scenario

ROOT = Path(__file__).resolve().parents[1]
ORACLE = ROOT / "tools" / "oracle.py"
GOLDEN = Path(__file__).resolve().parent / "golden"

SEED = bytes.fromhex("aa" * 32)
NET_SEED = bytes.fromhex("bb" * 32)


def run_oracle(requests: list[dict]) -> list[bytes]:
    """Invoke the standalone oracle script and collect its hex outputs."""
    proc = subprocess.run([sys.executable, str(ORACLE)],
                          input=json.dumps(requests), capture_output=True,
                          text=True, check=True)
    return [bytes.fromhex(line) for line in proc.stdout.split()]


def golden_bytes(name: str) -> bytes:
    return bytes.fromhex((GOLDEN / name).read_text().strip())


def make_scenario(store=None, n=3, **overrides) -> Scenario:
    if store is None:
        store = provisioning.generate_subscribers(n, SEED)
    defaults = dict(
        subscribers=store,
        imsi=store.records()[0].supi.imsi,
        serving_mcc="001",
        serving_mnc="01",
        network_type=NetworkType.PUBLIC,
        rng_seed=NET_SEED,
        expected_outcome=Outcome.SUCCESS,
    )
    defaults.update(overrides)
    return Scenario(**defaults)


@pytest.fixture
def store():
    return provisioning.generate_subscribers(3, SEED)
