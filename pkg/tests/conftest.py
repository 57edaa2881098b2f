import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"


@pytest.fixture
def corpus_dir() -> Path:
    return CORPUS


ACCEPTANCE_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = {}


@pytest.fixture
def acceptance(request):
    """Call with (number, title) and run the checks inside the returned context."""
    results = request.config.stash[ACCEPTANCE_KEY]

    class _Criterion:
        def __init__(self, number, title):
            self.number, self.title = number, title

        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            status = "PASS" if exc_type is None else "FAIL"
            line = f"ACCEPTANCE {self.number:>2} {status}  {self.title}"
            results[self.number] = line
            print(line)
            return False

    return _Criterion


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(ACCEPTANCE_KEY, {})
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
