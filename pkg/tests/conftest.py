import functools

import pytest

from fbplab.fbp_solver import RunConfig, run_to_steady

_RESULTS: dict[int, str] = {}


@functools.lru_cache(maxsize=None)
def steady_run(n: int, dt: float, choice: str):
    """Shared solver runs; several acceptance criteria reuse the same cells."""
    return run_to_steady(RunConfig(N=n, dt=dt, residual_choice=choice))


@pytest.fixture
def record():
    """Record a one-line verdict for an acceptance criterion."""

    def _record(number: int, ok: bool, detail: str) -> bool:
        _RESULTS[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(_RESULTS[number])
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_RESULTS):
        terminalreporter.write_line(_RESULTS[k])
