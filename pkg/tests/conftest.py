import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # hp_oracle importable

from ambistop.model import make_model


@pytest.fixture(scope="session")
def floor05():
    """Single-boundary floor regime parameters."""
    return make_model(0.0, 0.5, 0.05, 0.5)


@pytest.fixture(scope="session")
def floor175():
    """Two-boundary floor regime parameters."""
    return make_model(0.0, 0.5, 0.05, 1.75)


@pytest.fixture(scope="session")
def exchange_model():
    return make_model(0.02, 0.1, 0.05, 0.5)


@pytest.fixture(scope="session")
def model_zoo():
    """A spread of valid models covering both signs of r - mu - kappa*sigma."""
    return [
        make_model(0.0, 0.5, 0.05, 0.0),
        make_model(0.0, 0.5, 0.05, 0.5),
        make_model(0.0, 0.5, 0.05, 1.75),
        make_model(0.02, 0.1, 0.05, 0.5),
        make_model(-0.03, 0.25, 0.08, 1.2),
        make_model(0.05, 0.3, 0.08, 1.0),
    ]
