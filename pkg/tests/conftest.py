import collections

import pytest

_OUTCOMES = collections.defaultdict(list)

TITLES = {
    1: "Hardy suite",
    2: "exact-solution oracle",
    3: "FD vs exact convergence",
    4: "window detection",
    5: "lambda stabilization",
    6: "Black-Scholes",
    7: "invariance suite",
    8: "ink-spots suite",
    9: "Muckenhoupt weights",
    10: "norm equivalence",
}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _OUTCOMES[mark.args[0]].append((item.name, rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_OUTCOMES):
        runs = _OUTCOMES[n]
        bad = [name for name, ok in runs if not ok]
        status = "PASS" if not bad else "FAIL"
        tail = f" (failed: {', '.join(bad)})" if bad else ""
        terminalreporter.write_line(
            f"criterion {n:>2} {TITLES.get(n, ''):<26} {status}  [{len(runs)} checks]{tail}")
