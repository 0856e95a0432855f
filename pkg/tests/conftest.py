import pytest

from coarselab.graph_core import build_ball


@pytest.fixture(scope="session")
def balls():
    """Cache of explicit balls keyed by (spec, radius)."""
    cache = {}

    def get(spec, radius):
        if (spec, radius) not in cache:
            cache[spec, radius] = build_ball(spec, radius)
        return cache[spec, radius]

    return get


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str = "") -> bool:
    """Store and print the outcome of acceptance criterion n."""
    ACCEPTANCE[n] = (ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
