import numpy as np
import pytest

from slipns.grid import ZGrid, _boole_weights, _stretch, _stretch_prime


def stretched_grid(n: int, c: float = 3.0, L: float = 40.0) -> ZGrid:
    """Fixed-shape stretched grid, so refinement only changes the spacing."""
    xi = np.linspace(0.0, 1.0, n)
    nodes = _stretch(xi, c, L)
    nodes[0], nodes[-1] = 0.0, L
    return ZGrid(nodes, _boole_weights(n) * _stretch_prime(xi, c, L), L, c)


@pytest.fixture(scope="session")
def grid3():
    return ZGrid.graded(401, 1e-3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record the verdict line of a numbered acceptance criterion."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(number: int, ok: bool, detail: str) -> bool:
        lines[number] = f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}: {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
