import numpy as np
import pytest

from censusmap import generate_synthetic
from censusmap.synthetic import uniform_points

from oracles import LeafOracle

# Filled by test_acceptance.py; printed at the end of the session.
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def synth():
    """The 4 x 4 x 25 jittered benchmark map."""
    return generate_synthetic(7, 4, 4, 25, 0.2)


@pytest.fixture(scope="session")
def synth_oracle(synth):
    return LeafOracle(synth)


@pytest.fixture(scope="session")
def small():
    return generate_synthetic(3, 2, 2, 4, 0.2)


@pytest.fixture(scope="session")
def flat():
    return generate_synthetic(1, 2, 2, 4, 0.0)


@pytest.fixture(scope="session")
def synth_points(synth, synth_oracle):
    """10^5 uniform points at least 1e-9 from every leaf edge, with oracle leaves."""
    pts = uniform_points(synth.bounds(), 100_000, 11)
    keep = synth_oracle.edge_distance(pts, reach=1e-8) >= 1e-9
    pts = pts[keep]
    return pts, synth_oracle.leaves(pts)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
