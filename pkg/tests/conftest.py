import math

import numpy as np
import pytest

from asgdual.bernstein_core import Polynomial
from asgdual.lambda_measure import LambdaMeasure
from asgdual.selection_geometry import SelectionMechanism, minimal_sd

KINGMAN = LambdaMeasure.kingman()
DIRAC_HALF = LambdaMeasure.dirac(0.5)
MIXED = LambdaMeasure(kingman_weight=1.0, atoms=((0.5, 1.0),))
DIRAC_ONE = LambdaMeasure.dirac(1.0)
SPREAD = LambdaMeasure(kingman_weight=0.3, atoms=((0.2, 0.7), (0.6, 1.5), (1.0, 0.25)))

MEASURES = {"kingman": KINGMAN, "dirac_half": DIRAC_HALF, "mixed": MIXED,
            "dirac_one": DIRAC_ONE, "spread": SPREAD}


def genic(sigma: float = 1.0) -> SelectionMechanism:
    """Drift -sigma x (1 - x): type a is disfavoured."""
    return SelectionMechanism([sigma], {2: [0, 0, 1]})


def balancing() -> SelectionMechanism:
    """Drift x (1 - x)(1 - 2x) via the minority rule on triples."""
    return SelectionMechanism([0.0, 0.5], {3: [0, 1, 0, 1]})


def dominance_drift(sigma: float = 1.0, h: float = 0.25) -> Polynomial:
    a, b = sigma * (2 * h - 1), -sigma * h
    # x(1-x)(a x + b) expanded
    return Polynomial([0.0, b, a - b, -a])


def dominance(sigma: float = 1.0, h: float = 0.25) -> SelectionMechanism:
    return minimal_sd(dominance_drift(sigma, h))


def fixation_oracle(sigma: float, x: float) -> float:
    """P(type a fixes) for dX = -sigma X(1-X) dt + sqrt(X(1-X)) dW."""
    return math.expm1(2 * sigma * x) / math.expm1(2 * sigma)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, echoed again at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
