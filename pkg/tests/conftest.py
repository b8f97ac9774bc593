import shutil
from importlib import resources

import pytest

from modviz.forms import delta_coefficients

ACCEPTANCE_RESULTS = []


@pytest.fixture(scope="session")
def delta400():
    return delta_coefficients(400)


@pytest.fixture(scope="session")
def bundled_forms_dir():
    return resources.files("modviz") / "data" / "forms"


@pytest.fixture
def warm_cache(tmp_path, bundled_forms_dir):
    """A cache directory seeded with the shipped coefficient files (bucket 512)."""
    cache = tmp_path / "cache"
    cache.mkdir()
    for entry in bundled_forms_dir.iterdir():
        if entry.name.endswith(".json"):
            label = entry.name[:-5]
            shutil.copyfile(entry, cache / f"{label}__512.json")
    return cache


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:>2}. {title}: {detail}")
