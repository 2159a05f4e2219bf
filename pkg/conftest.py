import sys
import os

import pytest

# Add the project root directory to Python path
project_root = os.path.dirname(os.path.abspath(__file__))
if project_root not in sys.path:
    sys.path.insert(0, project_root)


@pytest.fixture(autouse=True)
def no_worker_override(monkeypatch):
    """Keep a worker count exported in the shell out of the tests."""
    monkeypatch.delenv("RXNEURAL_WORKERS", raising=False)
