import numpy as np
import pytest

from smcodec._backend import available_backends
from smcodec.cipher import ImageBuffer
from smcodec.harness.pgm import bundled_image

BACKENDS = available_backends()


@pytest.fixture(scope="session")
def lena():
    return bundled_image("lena")


@pytest.fixture(scope="session")
def lena_crop(lena):
    """128x128 centre crop, large enough for the statistical decode tests."""
    a = lena.as_array()[192:320, 192:320]
    return ImageBuffer.from_array(np.ascontiguousarray(a))


@pytest.fixture(params=sorted(BACKENDS))
def backend(request):
    return BACKENDS[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- acceptance reporting: one line per criterion in the terminal summary

_ACCEPTANCE = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = dict(item.user_properties).get("detail", "")
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        _ACCEPTANCE.append((marker.args[0], marker.kwargs.get("title", item.name), status, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, status, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        line = f"[{status}] criterion {num}: {title}"
        if detail:
            line += f" | {detail}"
        terminalreporter.write_line(line)
