import numpy as np
import pytest

from dressedqnn import _pykernels, qstate

_ACCEPTANCE_LINES = []


def backends():
    out = [pytest.param(_pykernels, id="python")]
    try:
        from dressedqnn import _kernels
    except ImportError:
        return out
    return out + [pytest.param(_kernels, id="cython")]


@pytest.fixture(params=backends())
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    monkeypatch.setattr(qstate, "kernels", request.param)
    from dressedqnn import circuits

    monkeypatch.setattr(circuits, "kernels", request.param)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
