import os
import sys
from pathlib import Path

import pytest

ADAPTER_SRC = Path(__file__).resolve().parents[1] / "src"
if str(ADAPTER_SRC) not in sys.path:
    sys.path.insert(0, str(ADAPTER_SRC))


@pytest.fixture()
def adapter_env():
    """Environment for spawning the adapter regardless of install state."""
    env = dict(os.environ)
    env["PYTHONPATH"] = str(ADAPTER_SRC) + os.pathsep + env.get("PYTHONPATH", "")
    return env


@pytest.fixture()
def golden_dir():
    return Path(__file__).parent / "golden"
