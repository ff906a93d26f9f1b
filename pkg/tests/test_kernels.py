import numpy as np
import pytest

from mnlexplore import kernels
from mnlexplore.instances import instance_I, instance_J
from mnlexplore.simulate import run_episodes


@pytest.fixture
def restore_backend():
    before = kernels.backend()
    yield
    kernels.set_backend(before)


def _run_both(fn):
    kernels.set_backend("numba")
    a = fn()
    kernels.set_backend("numpy")
    b = fn()
    return a, b


@pytest.mark.parametrize("inst", [instance_I(2, 0.1), instance_I(4, 0.05), instance_J(16, 2, 0.25, 0.1)])
def test_ts_paths_are_bit_identical(inst, restore_backend):
    a, b = _run_both(lambda: run_episodes(inst, "ts", 60, 17))
    assert a == b


def test_realized_paths_are_bit_identical(restore_backend):
    inst = instance_I(2, 0.1)
    a, b = _run_both(lambda: run_episodes(inst, "efa", 200, 5, estimator="realized"))
    assert a == b


def test_ts_cap_is_identical_across_paths(restore_backend):
    inst = instance_I(2, 0.02)
    a, b = _run_both(lambda: run_episodes(inst, "ts", 20, 3, horizon_cap=50))
    assert a == b
    assert any(g.diverged for g in a)


def test_realized_block_direct():
    rng = np.random.default_rng(0)
    cum = np.cumsum([0.3, 0.2, 0.1, 0.4])
    rew = np.array([1.0, 2.0, 0.5, 0.0])
    us = rng.random(500)
    got_py = kernels._realized_block_py(cum, rew, us, 1.5)
    got_np = kernels._realized_block_numpy(cum, rew, us, 1.5)
    got_nb = kernels._realized_block_numba(cum, rew, us, 1.5)
    assert got_py == got_np == got_nb


def test_backend_validation(restore_backend):
    with pytest.raises(ValueError):
        kernels.set_backend("cuda")
    kernels.set_backend("numpy")
    assert kernels.backend() == "numpy"
