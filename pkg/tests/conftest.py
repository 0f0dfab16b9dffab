import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from phasewig import exprlang as el
from phasewig.numgrid import square_grid
from phasewig.states import OscillatorParams

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def grid512():
    return square_grid(12.0, 512)


@pytest.fixture(scope="session")
def grid256():
    return square_grid(12.0, 256)


@pytest.fixture(scope="session")
def grid128():
    return square_grid(12.0, 128)


@pytest.fixture(scope="session")
def unit():
    return OscillatorParams(1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# expression trees over the grammar, kept pole-free (division by constants only)
_leaf = st.one_of(
    st.just(el.Var("q")),
    st.just(el.Var("p")),
    st.floats(-3, 3, allow_nan=False).map(lambda x: el.Num(round(x, 4))),
)


def _extend(children):
    return st.one_of(
        st.tuples(st.sampled_from("+-*"), children, children).map(lambda t: el.BinOp(*t)),
        st.tuples(children, st.integers(1, 4)).map(lambda t: el.BinOp("/", t[0], el.Num(float(t[1] + 1)))),
        st.tuples(children, st.integers(0, 3)).map(lambda t: el.Pow(*t)),
        st.tuples(st.sampled_from(el.FUNCTIONS), children).map(lambda t: el.Call(*t)),
        children.map(el.Neg),
    )


exprs = st.recursive(_leaf, _extend, max_leaves=8)
