import json
import sys
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

# Make the repo-local helper scripts importable from tests.
sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return FIXTURES


@pytest.fixture()
def resume_fixture() -> dict:
    return json.loads((FIXTURES / "resume_full.json").read_text(encoding="utf-8"))


@pytest.fixture()
def job_posting_text() -> str:
    return (FIXTURES / "job_posting.txt").read_text(encoding="utf-8")


@pytest.fixture()
def resume_plain_text() -> str:
    return (FIXTURES / "resume_plain.txt").read_text(encoding="utf-8")
