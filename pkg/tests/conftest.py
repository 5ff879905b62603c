import math

import numpy as np
import pytest

from paritysme import pointer_fields as pf


@pytest.fixture(scope="session")
def ref_params():
    return pf.SystemParams.reference()


@pytest.fixture(scope="session")
def ref_table(ref_params):
    """Drive 2 sqrt(1/20) over 10/chi at the default step."""
    return pf.integrate_pointer_fields(ref_params, pf.DrivePulse(2 * math.sqrt(1 / 20)), 10.0)


def random_density(rng, dim=8, rank=None):
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
