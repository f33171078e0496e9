import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.strategies import composite

from fock.states import PlusMinusState, SectorSpec


def pytest_addoption(parser):
    parser.addoption("--full-scale", action="store_true", default=False,
                     help="run the N = 1000 reproduction tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--full-scale"):
        return
    skip = pytest.mark.skip(reason="needs --full-scale")
    for item in items:
        if "fullscale" in item.keywords:
            item.add_marker(skip)


@composite
def sectors(draw, max_atoms: int = 12) -> SectorSpec:
    n1 = draw(st.integers(min_value=1, max_value=max_atoms))
    n2 = draw(st.integers(min_value=1, max_value=max_atoms))
    return SectorSpec(n1, n2)


@composite
def normalized_states(draw, max_atoms: int = 12) -> PlusMinusState:
    sector = draw(sectors(max_atoms=max_atoms))
    size = sector.n_tot + 1
    parts = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)
    real = np.array(draw(st.lists(parts, min_size=size, max_size=size)))
    imag = np.array(draw(st.lists(parts, min_size=size, max_size=size)))
    amps = real + 1j * imag
    if np.linalg.norm(amps) < 1e-3:
        amps = np.ones(size, dtype=np.complex128)
    return PlusMinusState.from_unnormalized(sector, amps)


@pytest.fixture
def out_dir(tmp_path):
    return tmp_path / "out"
