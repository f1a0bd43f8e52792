import textwrap

import numpy as np
import pytest

from ksfluid import kernels
from ksfluid.config import parse_config

BACKENDS = ["python"] + (["compiled"] if kernels.compiled_backend is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    """Run the test once per available kernel backend."""
    previous = kernels.get()
    kernels.use(request.param)
    yield request.param
    kernels.active = previous


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_config(body="", cells=16, dim=2, chi=0.5, kappa=0, T_end=0.1, base_dir="."):
    """Config text with [grid] and [model] filled in, plus extra sections."""
    text = f"""
    [grid]
    dim = {dim}
    cells = {cells}

    [model]
    chi = {chi}
    kappa = {kappa}
    T_end = {T_end}
    """
    return parse_config(textwrap.dedent(text) + textwrap.dedent(body), base_dir)
