import pytest

from qnr.primes import sieve_primes

from oracles import naive_sieve

_ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def table():
    return sieve_primes(10**5)


@pytest.fixture(scope="session")
def small_primes():
    return naive_sieve(200_000)


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion, then assert."""

    def _report(number, text, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {text}"
        if detail:
            line += f"  ({detail})"
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
