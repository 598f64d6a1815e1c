import numpy as np
import pytest

from wwae.numerics import Rng


def random_spd(rng: Rng, d: int, cond: float = 100.0) -> np.ndarray:
    """Random SPD matrix with condition number roughly cond."""
    q = np.linalg.qr(rng.normal(d, d))[0]
    # log-uniform spectrum between 1/sqrt(cond) and sqrt(cond)
    u = rng.uniform(d, 1).ravel()
    vals = np.exp((u - 0.5) * np.log(cond))
    return (q * vals) @ q.T


@pytest.fixture
def rng():
    return Rng(12345)


@pytest.fixture
def spd():
    return random_spd


def write_config(path, **overrides):
    """Write a flat key = value config file for CLI tests."""
    lines = [f"{k} = {v}" for k, v in overrides.items()]
    path.write_text("\n".join(lines) + "\n")
    return path
