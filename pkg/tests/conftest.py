import numpy as np
import pytest

from uaga.graph import Graph, barabasi_albert_graph, erdos_renyi_graph

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion gate")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        number, title = mark.args
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        _ACCEPTANCE[number] = (rep.outcome, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        outcome, title, detail = _ACCEPTANCE[number]
        status = "PASS" if outcome == "passed" else "FAIL"
        tr.write_line(f"{status}  {number:>2}  {title}" + (f"  [{detail}]" if detail else ""))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def path_graph():
    return Graph.from_edges(3, [(0, 1), (1, 2)], ("a", "b", "c"))


@pytest.fixture
def star():
    return Graph.from_edges(7, [(0, i) for i in range(1, 7)])


@pytest.fixture(scope="session")
def ba300():
    return barabasi_albert_graph(300, 3, 1)


@pytest.fixture
def small_er():
    return erdos_renyi_graph(40, 0.12, 3)
