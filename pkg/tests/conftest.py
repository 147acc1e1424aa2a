import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("thorough", max_examples=1000, deadline=None)
settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")

from imucal import synth  # noqa: E402


@pytest.fixture(scope="session")
def truth():
    return synth.example_truth()


@pytest.fixture(scope="session")
def seq12(truth):
    return synth.make_protocol_sequence(12, truth, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def verdict(request):
    """Record one acceptance verdict line and fail the test if ``ok`` is false."""

    def record(n, ok, detail):
        line = f"ACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}"
        request.node.user_properties.append(("acceptance", line))
        assert ok, detail

    return record


_VERDICTS = []


def pytest_runtest_logreport(report):
    if report.when == "call":
        _VERDICTS.extend(v for k, v in report.user_properties if k == "acceptance")


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
