"""Per-criterion PASS/FAIL summary for tests tagged with ``@pytest.mark.criterion(n)``."""

CRITERIA = {
    1: "pruning keeps the graph valid",
    2: "worst-case pruning ratio",
    3: "shadow sets and sizes match brute force",
    4: "mark ratio at most 1/20",
    5: "batched pruner",
    6: "load balancer invariant and recourse",
    7: "dynamic router bounds and recourse",
    8: "noncritical sampler statistics",
    9: "greedy reach sets",
    10: "escape and general path sampling",
    11: "embedded pruning",
    12: "lower-bound family",
    13: "CLI determinism",
}

_tagged = {}
_outcome = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion the test covers")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            _tagged[item.nodeid] = mark.args[0]


def pytest_runtest_logreport(report):
    n = _tagged.get(report.nodeid)
    if n is None:
        return
    ok = _outcome.get(n, True)
    if report.failed or (report.when == "call" and report.skipped):
        ok = False
    _outcome[n] = ok


def pytest_terminal_summary(terminalreporter):
    if not _tagged:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        if n not in set(_tagged.values()):
            continue
        if n not in _outcome:
            status = "FAIL (not run)"
        else:
            status = "PASS" if _outcome[n] else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d} {status}  {title}")
