import math

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def trial_division_primes(lo, hi):
    """Independent oracle: primes in (lo, hi] by trial division."""
    out = []
    for n in range(max(lo + 1, 2), hi + 1):
        if all(n % q for q in range(2, math.isqrt(n) + 1)):
            out.append(n)
    return out


@pytest.fixture
def tp():
    return trial_division_primes


ACCEPTANCE: list[str] = []


class _Criterion:
    def __init__(self, number, title):
        self.number, self.title, self.details = number, title, []

    def note(self, text):
        self.details.append(str(text))

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        detail = "; ".join(self.details)
        if exc_type is not None:
            detail = (detail + "; " if detail else "") + f"{exc_type.__name__}: {exc}"[:300]
        line = f"[{status}] criterion {self.number}: {self.title}" + (f" ({detail})" if detail else "")
        ACCEPTANCE.append(line)
        print(line)
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
