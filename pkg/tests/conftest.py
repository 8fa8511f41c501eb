import pytest

from linlab.lts import HarnessBounds

CRITERIA = {
    1: "results table",
    2: "scripted adversaries",
    3: "example-tree verdicts",
    4: "canonical mappings",
    5: "generic complete implementation",
    6: "simulation matrix",
    7: "oracle equivalences",
    8: "structural properties",
}

_outcomes: dict[int, list[tuple[str, str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): test backs acceptance criterion n")


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        if hasattr(report, "wasxfail"):
            outcome = "xfailed" if report.skipped else "xpassed"
        else:
            outcome = report.outcome
        _outcomes.setdefault(crit, []).append((report.nodeid, outcome))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        report.criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, name in CRITERIA.items():
        results = _outcomes.get(n)
        if not results:
            continue
        bad = [r for r in results if r[1] not in ("passed", "xfailed")]
        notes = sum(1 for r in results if r[1] == "xfailed")
        status = "PASS" if not bad else "FAIL"
        extra = f" ({notes} expected failure ledgered)" if notes else ""
        terminalreporter.write_line(f"criterion {n} {name}: {status} [{len(results)} checks]{extra}")




def class_bounds() -> HarnessBounds:
    """Two single-write writers and one single-read reader, depth 16."""
    return HarnessBounds(threads=("A", "B", "C"), ops=1, menu={"A": "w1", "B": "w2", "C": "r"}, max_depth=16)


@pytest.fixture(scope="session")
def wsr_tree():
    from linlab.lts import enumerate_executions
    from linlab.registers import make_register

    bounds = class_bounds()
    return enumerate_executions(make_register("wsr", bounds), bounds)


@pytest.fixture(scope="session")
def dr_tree():
    from linlab.lts import enumerate_executions
    from linlab.registers import make_register

    bounds = class_bounds()
    return enumerate_executions(make_register("dr", bounds), bounds)
