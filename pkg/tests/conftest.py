import pytest

_CRITERIA: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number k")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    k = mark.args[0]
    detail = "; ".join(str(v) for name, v in item.user_properties if name == "detail")
    if rep.when == "call":
        status = "PASS" if rep.passed else "FAIL"
        _CRITERIA.setdefault(k, []).append((status, item.name, detail))
    elif rep.when == "setup" and rep.skipped:
        reason = rep.longrepr[2] if isinstance(rep.longrepr, tuple) else str(rep.longrepr)
        _CRITERIA.setdefault(k, []).append(("SKIP", item.name, reason))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        rows = _CRITERIA[k]
        statuses = {s for s, _, _ in rows}
        overall = "FAIL" if "FAIL" in statuses else ("SKIP" if statuses == {"SKIP"} else "PASS")
        details = " | ".join(d for _, _, d in rows if d)
        tr.write_line(f"criterion {k:2d}: {overall}  {details}")


@pytest.fixture
def detail(request):
    """Attach a one-line measurement to the acceptance summary."""
    def add(text):
        request.node.user_properties.append(("detail", text))
        print(text)
    return add
