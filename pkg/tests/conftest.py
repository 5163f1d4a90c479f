import numpy as np
import pytest

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def dsum(*blocks):
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n), dtype=complex)
    i = 0
    for b in blocks:
        k = b.shape[0]
        out[i:i + k, i:i + k] = b
        i += k
    return out


@pytest.fixture
def workhorse():
    """H = diag(0,0,1), V = sigma_x (+) 0."""
    H = np.diag([0.0, 0.0, 1.0]).astype(complex)
    V = dsum(SX, np.zeros((1, 1)))
    return H, V


from hypothesis import settings as _settings  # noqa: E402

_settings.register_profile("repro", derandomize=True, deadline=None)
_settings.load_profile("repro")


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion; asserts on failure."""
    def record(number: int, ok: bool, detail: str):
        ACCEPTANCE_LINES[number] = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {detail}"
        assert ok, detail
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
