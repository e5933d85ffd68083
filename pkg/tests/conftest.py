import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

# Independent oracle for the Hamilton product: basis table (unit, sign) for
# e_a * e_b with e = (1, i, j, k), written out from ij = k, jk = i, ki = j.
BASIS_TABLE = {
    (0, 0): (0, 1), (0, 1): (1, 1), (0, 2): (2, 1), (0, 3): (3, 1),
    (1, 0): (1, 1), (1, 1): (0, -1), (1, 2): (3, 1), (1, 3): (2, -1),
    (2, 0): (2, 1), (2, 1): (3, -1), (2, 2): (0, -1), (2, 3): (1, 1),
    (3, 0): (3, 1), (3, 1): (2, 1), (3, 2): (1, -1), (3, 3): (0, -1),
}


def table_mul(p, q):
    out = np.zeros(4)
    for a in range(4):
        for b in range(4):
            unit, sign = BASIS_TABLE[(a, b)]
            out[unit] += sign * p[a] * q[b]
    return out


finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
quats = arrays(np.float64, 4, elements=finite)
nonzero_quats = quats.filter(lambda q: np.sum(q * q) > 1e-6)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, repeated at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
