import cmath
import math

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def loop_nudft(points, values, freqs, sign):
    """Independent reference: sum_j values[j] exp(sign 2 pi i freqs[k] . points[j]) with cmath."""
    out = []
    for xi in freqs:
        acc = 0j
        for r, v in zip(points, values):
            dot = math.fsum(float(a) * float(b) for a, b in zip(xi, r))
            acc += complex(v) * cmath.exp(sign * 2j * math.pi * dot)
        out.append(acc)
    return np.array(out)


def loop_mask(points, freqs, weights):
    """Independent reference mask: M[i][j] = sum_s w_s cos(2 pi xi_s . (r_i - r_j))."""
    L = len(points)
    M = np.zeros((L, L))
    for i in range(L):
        for j in range(L):
            disp = points[i] - points[j]
            M[i, j] = sum(w * math.cos(2 * math.pi * float(np.dot(xi, disp))) for xi, w in zip(freqs, weights))
    return M


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
