import numpy as np
import pytest

from qwalk2d.lattice import CouplingModel, LatticeSpec, build_lattice


def make_lattice(rows, cols, nearest=0.5, kappa=0.2, cutoff=31.0, **kw):
    model = CouplingModel.uniform_nearest(nearest, kappa)
    return build_lattice(LatticeSpec(rows=rows, cols=cols, coupling=model, cutoff_um=cutoff, **kw))


def chain(n, nearest=0.5, cutoff=20.0):
    """1 x n chain; the default cutoff keeps nearest neighbours only."""
    return make_lattice(1, n, nearest=nearest, cutoff=cutoff)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


@pytest.fixture
def record():
    def _record(label: str, passed: bool, detail: str = "") -> bool:
        ACCEPTANCE_RESULTS.append((label, bool(passed), detail))
        return bool(passed)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}")
