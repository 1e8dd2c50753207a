import numpy as np
import pytest

from subcls.data import case_models, case_subspaces
from subcls.geometry import Subspace


@pytest.fixture
def case1_subspaces():
    return case_subspaces(1)


@pytest.fixture
def case2_subspaces():
    return case_subspaces(2)


def random_subspace(rng: np.random.Generator, n: int, d: int) -> Subspace:
    q, r = np.linalg.qr(rng.standard_normal((n, d)))
    return Subspace(q * np.sign(np.diag(r)))


def make_case_models(case_id: int, noise_var: float):
    return case_models(case_id, noise_var)
