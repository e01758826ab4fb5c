import json
from fractions import Fraction
from pathlib import Path

import pytest

from sphereimm.polycore import Polynomial, PolynomialMap, variables

DATA = Path(__file__).parent / "data"

_acceptance: dict[str, tuple[str, str]] = {}


def poly_from_terms(terms, num_vars=3) -> Polynomial:
    return Polynomial(num_vars, {tuple(e): Fraction(c) for e, c in terms})


def map_from_terms(components, num_vars=3) -> PolynomialMap:
    return PolynomialMap(num_vars, tuple(poly_from_terms(c, num_vars) for c in components))


def fixture_map(s=1) -> PolynomialMap:
    x, y, z = variables(3)
    return PolynomialMap(3, (x * Fraction(s), y, x * z, y * z))


@pytest.fixture(scope="session")
def oracles():
    return json.loads((DATA / "oracles.json").read_text())


@pytest.fixture
def whitney():
    return fixture_map()


def record_acceptance(name: str, passed: bool, detail: str = "") -> None:
    _acceptance[name] = ("PASS" if passed else "FAIL", detail)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call":
        return
    name = marker.args[0]
    if name not in _acceptance or rep.failed:
        detail = f"{rep.duration:.1f}s" if rep.passed else str(rep.longrepr).splitlines()[-1][:160]
        record_acceptance(name, rep.passed, detail)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance):
        status, detail = _acceptance[name]
        terminalreporter.write_line(f"{status} {name} {detail}".rstrip())
