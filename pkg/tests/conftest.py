import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from reachkit import Box, GaussianDisturbance, LtiSystem, ReachAvoidQuery


def random_system(rng, n=None, m=None, scale=0.9):
    """A random (stable-ish) system with SPD Gaussian disturbance."""
    n = n or int(rng.integers(1, 4))
    m = m or int(rng.integers(1, 3))
    A = rng.uniform(-1.0, 1.0, (n, n)) * scale
    B = rng.uniform(-1.0, 1.0, (n, m))
    root = rng.standard_normal((n, n)) * 0.1
    cov = root @ root.T + 0.05 * np.eye(n)
    dist = GaussianDisturbance(rng.uniform(-0.1, 0.1, n), cov)
    return LtiSystem(A=A, B=B, disturbance=dist, input_box=Box.centered(1.0, m))


def random_query(rng, n=None, max_horizon=5):
    system = random_system(rng, n=n)
    n = system.state_dim
    safe = Box(rng.uniform(-3.0, -1.5, n), rng.uniform(1.5, 3.0, n))
    target = Box(rng.uniform(-1.5, 0.0, n), rng.uniform(0.0, 1.5, n))
    return ReachAvoidQuery(
        system=system,
        safe=safe,
        target=target,
        horizon=int(rng.integers(1, max_horizon + 1)),
        x0=rng.uniform(-1.0, 1.0, n),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
