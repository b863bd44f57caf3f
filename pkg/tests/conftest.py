import os
import sys
from pathlib import Path

import pytest

# Add project root to sys.path so the 'rddl' package is importable during tests
ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)


@pytest.fixture
def corpus_path() -> Path:
    return Path(ROOT) / "corpus"


@pytest.fixture
def models_path(corpus_path: Path) -> Path:
    return corpus_path / "models"


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for key in list(os.environ):
        if key.startswith("RDDL_") and key != "RDDL_LOG_LEVEL":
            monkeypatch.delenv(key, raising=False)
