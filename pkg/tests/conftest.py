import numpy as np
import pytest

from mrflearn import CliqueTensor, MarkovRandomField


def ising_tensor(coupling: float) -> np.ndarray:
    spin = np.array([1.0, -1.0])
    return coupling * np.outer(spin, spin)


@pytest.fixture
def ising_pair() -> MarkovRandomField:
    """Two binary nodes with a +-0.5 coupling; the workhorse oracle model."""
    tensor = CliqueTensor((0, 1), ising_tensor(0.5))
    return MarkovRandomField(2, (2, 2), {(0, 1): tensor}, r=2)


@pytest.fixture
def chain3() -> MarkovRandomField:
    """Binary path 0 - 1 - 2 with +-0.5 couplings."""
    return MarkovRandomField(
        3,
        (2, 2, 2),
        {
            (0, 1): CliqueTensor((0, 1), ising_tensor(0.5)),
            (1, 2): CliqueTensor((1, 2), ising_tensor(0.5)),
        },
        r=2,
    )


@pytest.fixture
def isolated_pair() -> MarkovRandomField:
    """Two binary nodes with no interaction at all."""
    return MarkovRandomField(2, (2, 2), {}, r=2)
