import numpy as np
import pytest

from dnet.network import RampNetwork


@pytest.fixture
def hand_net() -> RampNetwork:
    """Two-layer network with total path mass 2.5, used across hand checks.

    w0 = 2, W1 = [1, 3], W2 = diag(0.5, 0.25):
    V = 2 * (1 * 0.5 + 3 * 0.25) = 2.5.
    """
    return RampNetwork(
        w0=2.0,
        weights=(np.array([[1.0, 3.0]]), np.array([[0.5, 0.0], [0.0, 0.25]])),
    )


@pytest.fixture
def single_path_net() -> RampNetwork:
    """All of the mass rides one index path; every derived law is a point mass."""
    return RampNetwork(
        w0=1.0,
        weights=(
            np.array([[1.0, 0.0]]),
            np.array([[1.0, 0.0], [0.0, 0.0]]),
            np.array([[1.0, 0.0], [0.0, 0.0]]),
        ),
    )


def random_valid_net(rng: np.random.Generator, L: int | None = None) -> RampNetwork:
    """Random network with valid even layer dims and uniform [0, 1) weights."""
    if L is None:
        L = int(rng.integers(2, 7))
    dims = [1] + [int(2 * rng.integers(1, 7)) for _ in range(L - 1)]
    dims.append(int(2 * rng.integers(1, 7)))
    mats = tuple(rng.uniform(0.0, 1.0, size=(dims[i], dims[i + 1])) for i in range(L))
    return RampNetwork(w0=float(rng.uniform(0.1, 2.0)), weights=mats)
