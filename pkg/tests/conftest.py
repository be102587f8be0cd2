import math

import pytest

from qes import models as M

SQRT2 = math.sqrt(2.0)

# Fixed (non-tuned) parameters at which every family has simple closed-form roots.
ANCHORS = {
    "screened-coulomb": {"gamma": -0.5, "delta": -0.9, "l": 0},
    "singular-power": {"lambda": -1.0, "xi": 1.0, "tau": 0.5, "l": 0},
    "singular-anharmonic": {"omega": 0.5, "chi": 0.5, "sigma": 1.0, "l": 0},
    "non-polynomial": {"beta": 1.0, "l": 0},
}

ANCHOR_GROUND = {
    "screened-coulomb": (5.0, -0.245),
    "singular-power": (0.5, -0.125),
    "singular-anharmonic": (0.875, 3.0),
    "non-polynomial": (-(3 + 2 * SQRT2), 3 / SQRT2 - 3),
}

ANCHOR_CLI_FLAGS = {
    "screened-coulomb": ["--gamma", "-0.5", "--delta", "-0.9"],
    "singular-power": ["--lambda", "-1", "--xi", "1", "--tau", "0.5"],
    "singular-anharmonic": ["--omega", "0.5", "--chi", "0.5", "--sigma", "1"],
    "non-polynomial": ["--beta", "1"],
}


@pytest.fixture(scope="session")
def anchor_solutions():
    """All anchor solutions for n = 0, 1, 2, keyed by (family, n)."""
    return {
        (family, n): M.solve_tuned_parameter(family, fixed, n)
        for family, fixed in ANCHORS.items()
        for n in range(3)
    }


# --- acceptance report ---------------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
