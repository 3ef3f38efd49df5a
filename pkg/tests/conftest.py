import sys
from pathlib import Path

import pytest

from dali.clock import LogicalClock

# make sibling helper modules (oracle_policy, policygen) importable from any test
sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def clock():
    return LogicalClock()
