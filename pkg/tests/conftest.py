import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from socopart.instance_io import BUNDLED, load_bundled  # noqa: E402

# criterion id -> list of (check name, ok, detail)
ACCEPTANCE: dict[str, list[tuple[str, bool, str]]] = {}


def record(criterion: str, check: str, ok: bool, detail: str = "") -> None:
    ACCEPTANCE.setdefault(criterion, []).append((check, bool(ok), detail))


@pytest.fixture(scope="session")
def instances():
    return {name: load_bundled(name) for name in BUNDLED}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE, key=lambda c: int(c.split()[0])):
        checks = ACCEPTANCE[crit]
        ok = all(c[1] for c in checks)
        failed = [f"{name} ({detail})" for name, good, detail in checks if not good]
        line = f"criterion {crit}: {'PASS' if ok else 'FAIL'} [{len(checks)} checks]"
        if failed:
            line += " failing: " + "; ".join(failed)
        terminalreporter.write_line(line)
