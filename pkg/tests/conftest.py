import numpy as np
import pytest


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator; tests stay reproducible run to run."""
    return np.random.default_rng(20260816)


def random_complex(rng: np.random.Generator, n: int,
                   scale: float = 1.0) -> np.ndarray:
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
