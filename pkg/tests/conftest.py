import pytest

from beamplace.geometry import GeoPoint, SatellitePose
from beamplace.link_budget import LinkBudgetParams
from beamplace.scenario import load_example1

# 10-user toy adjacency as printed, 1-based users. Row 9 lacks the 4-9 edge
# that row 4 and the clique lists contain.
PUBLISHED_U = [
    [1, 0, 1, 1, 1, 0, 1, 0, 0, 0],
    [0, 1, 1, 0, 0, 0, 0, 1, 0, 1],
    [1, 1, 1, 1, 0, 1, 0, 0, 0, 0],
    [1, 0, 1, 1, 1, 0, 0, 0, 1, 0],
    [1, 0, 0, 1, 1, 0, 1, 0, 0, 0],
    [0, 0, 1, 0, 0, 1, 0, 1, 0, 0],
    [1, 0, 0, 0, 1, 0, 1, 0, 0, 0],
    [0, 1, 0, 0, 0, 1, 0, 1, 0, 1],
    [0, 0, 0, 0, 0, 0, 0, 0, 1, 0],
    [0, 1, 0, 0, 0, 0, 0, 1, 0, 1],
]

H2_PUBLISHED = {(1, 3), (1, 4), (1, 5), (1, 7), (2, 3), (2, 8), (2, 10), (3, 4), (3, 6), (4, 5), (4, 9), (5, 7),
            (6, 8), (8, 10)}
H3_PUBLISHED = {(1, 3, 4), (1, 4, 5), (1, 5, 7), (2, 8, 10)}
FINAL_PUBLISHED = {(2, 8, 10), (1, 5, 7), (3, 6), (4, 9)}


def symmetric_u():
    u = [row[:] for row in PUBLISHED_U]
    n = len(u)
    for i in range(n):
        for j in range(n):
            if u[i][j]:
                u[j][i] = 1
    return u


def one_based(groups):
    return {tuple(k + 1 for k in g) for g in groups}


@pytest.fixture
def sat():
    return SatellitePose(GeoPoint(0.0, -88.7), 8063.0)


@pytest.fixture
def params():
    return LinkBudgetParams()


@pytest.fixture
def example1():
    data = load_example1()
    data["points"] = [GeoPoint(a, b) for a, b in data["users"]]
    return data


# Acceptance lines are collected here and echoed after the run, so they show
# up even when pytest captures stdout.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
