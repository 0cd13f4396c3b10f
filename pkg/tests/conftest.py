import numpy as np
import pytest

from trajtrie import GridConfig, Point, Trajectory

FIVE_TRAJECTORIES = {
    1: [(0.5, 7.5), (2.5, 7.5), (6.5, 7.5), (6.5, 4.5)],
    2: [(1.5, 0.5), (2.5, 0.5), (2.5, 4.5), (4.5, 4.5)],
    3: [(4.5, 0.5), (7.5, 0.5), (7.5, 2.5), (4.5, 2.5), (4.5, 1.5)],
    4: [(0.5, 7.5), (2.5, 7.5), (5.5, 7.5), (5.5, 3.5)],
    5: [(1.5, 0.5), (2.5, 0.5), (2.5, 5.5), (0.5, 5.5), (0.5, 2.5)],
}
QUERY = [(0.5, 6.5), (2.5, 6.5), (4.5, 6.5)]

# Example 1 Hausdorff distances, two decimals
EXAMPLE_DISTANCES = {1: 2.83, 2: 6.08, 3: 6.71, 4: 3.16, 5: 6.08}

# Eight cell sets: 4-bit cells 0001..0110 written as ints
EIGHT_SETS = {
    1: {0b0001, 0b0011},
    2: {0b0001, 0b0011, 0b0101},
    3: {0b0010, 0b0011},
    4: {0b0010, 0b0011, 0b0101},
    5: {0b0011, 0b0101},
    6: {0b0001, 0b0100},
    7: {0b0010, 0b0100},
    8: {0b0101, 0b0110},
}


@pytest.fixture
def grid8():
    return GridConfig(Point(0.0, 0.0), 8.0, 8)


@pytest.fixture
def five():
    return [Trajectory(i, np.array(p)) for i, p in FIVE_TRAJECTORIES.items()]


@pytest.fixture
def query_points():
    return np.array(QUERY)


def random_dataset(rng, n, lo=2, hi=12, extent=10.0, start_id=0):
    out = []
    for i in range(n):
        m = int(rng.integers(lo, hi + 1))
        start = rng.uniform(0, extent, 2)
        pts = start + np.cumsum(rng.normal(0, extent / 20, (m, 2)), axis=0)
        out.append(Trajectory(start_id + i, np.clip(pts, 0, extent)))
    return out


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
