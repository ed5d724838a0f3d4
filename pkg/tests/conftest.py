import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mock_detector import MockDetector


@pytest.fixture
def mock_detector():
    server = MockDetector().start()
    yield server
    server.stop()
