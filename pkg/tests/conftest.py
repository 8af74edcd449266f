"""Collects acceptance outcomes and prints one verdict line per criterion.

Acceptance tests carry ``@pytest.mark.criterion(number, title)`` and may call
``record_property("measured", text)``; the text is echoed in the summary.
"""

from collections import OrderedDict

_RESULTS: "OrderedDict[str, dict]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion decided by this test")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        number, title = marker.args
        entry = _RESULTS.setdefault(str(number), {"title": title, "parts": []})
        measured = [v for k, v in item.user_properties if k == "measured"]
        entry["parts"].append((item.name, call.excinfo is None, measured))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, entry in sorted(_RESULTS.items(), key=lambda kv: int(kv[0])):
        ok = all(p for _, p, _ in entry["parts"])
        terminalreporter.write_line(f"ACCEPTANCE #{number} {entry['title']}: {'PASS' if ok else 'FAIL'}")
        for name, passed, measured in entry["parts"]:
            terminalreporter.write_line(f"    {'pass' if passed else 'FAIL'}  {name}: {'; '.join(measured)}")
