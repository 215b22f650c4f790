import numpy as np
import pytest
from hypothesis import strategies as st

from dpcomm.info import JointDistribution


def random_table(rng, shape, names, sparsity=0.0):
    """Dirichlet table over ``shape``; with ``sparsity`` some cells are zeroed."""
    p = rng.dirichlet(np.ones(int(np.prod(shape))))
    if sparsity:
        p[rng.random(p.size) < sparsity] = 0.0
        if p.sum() == 0:
            p[rng.integers(p.size)] = 1.0
        p /= p.sum()
    return JointDistribution.from_array(p.reshape(shape), names)


def markov_xym(rng, nx, ny, nm):
    """``(XY)(M|X)``: a random input table with M drawn from X alone."""
    pxy = rng.dirichlet(np.ones(nx * ny)).reshape(nx, ny)
    k = rng.dirichlet(np.ones(nm), size=nx)
    return JointDistribution.from_array(pxy[:, :, None] * k[:, None, :], ["X", "Y", "M"])


def transcript_table(rng, t, size=3, names=("X", "Y")):
    """Random protocol-shaped table: each message drawn from the sender's view."""
    nx, ny = rng.integers(2, size + 1, size=2)
    p = rng.dirichlet(np.ones(nx * ny)).reshape(nx, ny)
    for s in range(1, t + 1):
        nm = int(rng.integers(2, size + 1))
        own_axis = 0 if s % 2 == 1 else 1
        k = rng.dirichlet(np.ones(nm) * 0.7, size=tuple(p.shape[i] for i in range(p.ndim) if i != 1 - own_axis))
        k = np.expand_dims(k, axis=1 - own_axis)
        p = p[..., None] * k
    return JointDistribution.from_array(p / p.sum(), list(names) + [f"M{s}" for s in range(1, t + 1)])


@st.composite
def tables(draw, names=("A", "B", "C"), max_size=4, zeros=True):
    shape = tuple(draw(st.integers(1, max_size)) for _ in names)
    n = int(np.prod(shape))
    w = draw(st.lists(st.integers(0 if zeros else 1, 20), min_size=n, max_size=n))
    if sum(w) == 0:
        w[0] = 1
    p = np.asarray(w, dtype=float) / sum(w)
    return JointDistribution.from_array(p.reshape(shape), list(names))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
