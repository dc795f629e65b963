import sys
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parents[1]
TOY = REPO / "tests" / "data" / "toy"

# The deterministic hash-based scorer lives with the toy-data generator so
# the committed fixtures and the in-test scorer can never drift apart.
sys.path.insert(0, str(REPO / "tools"))
from make_toy_fixtures import EMBED_DIM, HashScorer, RecordingScorer  # noqa: E402,F401


@pytest.fixture
def toy_dir() -> Path:
    return TOY


@pytest.fixture
def hash_scorer() -> HashScorer:
    return HashScorer()


@pytest.fixture
def amazon_task():
    from parc import load_task

    return load_task(TOY / "task_amazon.json")
