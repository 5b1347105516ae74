import numpy as np
import pytest

from hybridbf import RngSpec, SystemConfig


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    return RngSpec(seed, stream).generator()


@pytest.fixture
def desk_config() -> SystemConfig:
    """Small dimensions for fast solver tests."""
    return SystemConfig.uniform(K=2, Nt=16, Nr=4, Nt_rf=2, Nr_rf=2, Ns=2)


@pytest.fixture
def paper_config() -> SystemConfig:
    """The simulated experiment dimensions."""
    return SystemConfig.uniform(K=2, Nt=64, Nr=16, Nt_rf=4, Nr_rf=4, Ns=4)


def random_hermitian_psd(n: int, rng: np.random.Generator,
                         rank: int | None = None) -> np.ndarray:
    r = rank or n
    X = rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))
    return X @ X.conj().T / r


def random_complex(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal((rows, cols))
            + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2.0)
