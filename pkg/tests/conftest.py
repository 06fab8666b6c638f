import numpy as np
import pytest

from liebscher.analytics import CLParams

# product exponents of the two-curve example used throughout the tests
EX_P = (1.0 / 3.0, 2.0 / 3.0)
EX_Q = (3.0 / 4.0, 1.0 / 4.0)


@pytest.fixture
def ex_params():
    return CLParams(EX_P, EX_Q)


@pytest.fixture
def ex_matrix(ex_params):
    """Iterative exponents of the same copula (slot 1 carries (2/3, 1/4))."""
    return np.array([[1.0, 1.0], [2.0 / 3.0, 1.0 / 4.0]])


def random_cl_params(rng, K):
    """Random product exponents with K pairs, both columns on the simplex."""
    p = rng.dirichlet(np.ones(K))
    q = rng.dirichlet(np.ones(K))
    return CLParams(p, q)


def ks_critical_1pct(n):
    # asymptotic one-sample Kolmogorov-Smirnov critical value at level 1%
    return 1.628 / np.sqrt(n)


class Checks:
    """Named sub-checks of one acceptance criterion.

    Every check is evaluated and recorded before the test asserts, so a
    failing criterion still reports all of its measurements.
    """

    def __init__(self, record_property):
        self.items = []
        self._record = record_property

    def __call__(self, name, ok, detail=""):
        self.items.append((name, bool(ok), detail))

    def verify(self):
        self._record("checks", [(n, ok, d) for n, ok, d in self.items])
        failed = [f"{n} ({d})" for n, ok, d in self.items if not ok]
        assert not failed, "failed sub-checks: " + "; ".join(failed)


@pytest.fixture
def checks(record_property):
    return Checks(record_property)


_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _ACCEPTANCE.append(report)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for rep in _ACCEPTANCE:
        name = rep.nodeid.split("::")[-1].removeprefix("test_")
        tr.write_line(f"{'PASS' if rep.passed else 'FAIL'}  {name}  ({rep.duration:.1f} s)")
        for key, value in rep.user_properties:
            if key == "checks":
                for sub, ok, detail in value:
                    tr.write_line(f"    {'ok  ' if ok else 'FAIL'}  {sub}: {detail}")
