import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=400)
settings.load_profile(os.environ.get("YIL_HYPOTHESIS_PROFILE", "default"))

# acceptance outcomes keyed by criterion number: list of (test name, passed, detail)
_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(key): acceptance criterion checked by the test")


@pytest.fixture
def detail(request):
    """Attach a one-line measurement summary to the current acceptance test."""
    notes = []
    request.node.user_properties.append(("detail", notes))

    def note(text: str) -> None:
        notes.append(text)
        print(text)

    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    notes = dict(item.user_properties).get("detail", [])
    _CRITERIA.setdefault(str(marker.args[0]), []).append((item.name, report.passed, "; ".join(notes)))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for key in sorted(_CRITERIA, key=int):
        entries = _CRITERIA[key]
        status = "PASS" if all(passed for _, passed, _ in entries) else "FAIL"
        text = " | ".join(f"{name}: {'pass' if passed else 'fail'}" + (f" ({d})" if d else "")
                          for name, passed, d in entries)
        terminalreporter.write_line(f"criterion {key}: {status}  {text}")
