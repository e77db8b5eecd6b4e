import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.fixture
def measured(request):
    """Dict whose contents are echoed next to the criterion's PASS/FAIL line."""
    values: dict = {}
    request.node._measured = values
    return values


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": True, "values": {}})
    if rep.failed:
        entry["passed"] = False
    entry["values"].update(getattr(item, "_measured", {}))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        values = ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in e["values"].items())
        status = "PASS" if e["passed"] else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2} {status}  {e['title']}  [{values}]")


@pytest.fixture(scope="session")
def ref_grid():
    from toa_lab.wavepacket import make_grid

    return make_grid(-20.0, 20.0, 4096)


@pytest.fixture(scope="session")
def ref_wf(ref_grid):
    from toa_lab.wavepacket import GaussianPacketSpec, gaussian_packet

    return gaussian_packet(GaussianPacketSpec.reference(), ref_grid)
