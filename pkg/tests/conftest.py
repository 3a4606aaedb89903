import numpy as np
import pytest
from hypothesis import settings

from quadgap import models
from quadgap.symbol import make_symbol

settings.register_profile("default", max_examples=40, deadline=None, derandomize=True)
settings.load_profile("default")


@pytest.fixture
def ho():
    """Harmonic oscillator ``x^2 + xi^2``."""
    return make_symbol(1, np.eye(2))


@pytest.fixture
def ixxi():
    """``q = i x xi``."""
    return make_symbol(1, [[0, 1j], [0, 0]])


@pytest.fixture
def kfp1():
    return models.kfp_model(1.0)


@pytest.fixture
def gle1():
    return models.gle_model(1.0, 1.0, [1.0], [1.0])


def library():
    """Model library used by the corpus-wide checks."""
    out = [
        ("ho", make_symbol(1, np.eye(2))),
        ("ho2", make_symbol(2, np.diag([1.0, 2.0, 1.0, 3.0]))),
    ]
    for a in (-2, -1, -0.1, 0.1, 0.1875, 0.25, 0.3, 1, 5):
        out.append((f"kfp{a}", models.kfp_symbol(a)))
    out.append(("chains", models.chains_symbol(2, 1.5, 0.5, 1, 1, 1)))
    out.append(("chains_hot", models.chains_symbol(2, 2, 1, 1, 0.7, 1.6)))
    out.append(("chains_degenerate", models.chains_symbol(1, 1, 1, 1, 1, 1)))
    out.append(("gle1", models.gle_symbol(1, 1, [1], [1])))
    out.append(("gle2", models.gle_symbol(1.3, 0.7, [0.5, 2.0], [1.0, -0.4])))
    return out


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
