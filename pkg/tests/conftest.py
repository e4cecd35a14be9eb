import warnings
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from diglacian.errors import NotConvergedWarning

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def tiny_dir():
    return FIXTURES / "tiny"


@pytest.fixture
def two_state():
    """Symmetric two-node chain: each node has itself and the other as neighbors."""
    from diglacian.markov import PfprChain
    import scipy.sparse as sp

    return PfprChain(sp.csr_matrix(np.full((2, 2), 0.5)), np.array([2.0, 2.0]), np.array([0.5, 0.5]), 0, 0.0)


@pytest.fixture
def quiet_convergence():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotConvergedWarning)
        yield
