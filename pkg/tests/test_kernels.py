import numpy as np
import pytest

from sigl import _accel
from sigl.kernels import pair_inr_loss, pool_blocks
from sigl.nn import SirenInr

pytestmark = pytest.mark.skipif(not _accel.NUMBA_AVAILABLE, reason="numba not importable")


@pytest.fixture
def both_backends():
    prev = _accel.backend_name()

    def run(fn):
        _accel.set_backend("numpy")
        a = fn()
        _accel.set_backend("numba")
        b = fn()
        return a, b

    yield run
    _accel.set_backend(prev)


def test_pool_backends_bit_identical(both_backends):
    rng = np.random.default_rng(0)
    for n, h in ((13, 3), (50, 7), (20, 20)):
        a = rng.integers(0, 2, (n, n)).astype(np.uint8)
        x, y = both_backends(lambda: pool_blocks(a, h))
        assert np.array_equal(x, y)


def test_pair_loss_backends_agree(both_backends):
    rng = np.random.default_rng(1)
    m = SirenInr(2, (20, 20), seed=3)
    n = 30
    adj = (rng.random((n, n)) < 0.3).astype(float)
    adj = np.triu(adj, 1) + np.triu(adj, 1).T
    eta = rng.random(n)
    W0, b0, W1, b1, W2, b2 = m.parameters()
    x, y = both_backends(lambda: pair_inr_loss(eta, adj, W0, b0, W1, b1, W2[0], b2[0], m.omega0))
    for a, b in zip(x, y):
        assert np.allclose(a, b, rtol=1e-10, atol=1e-13)


def test_env_flag_names():
    assert _accel.backend_name() in ("numba", "numpy")
    prev = _accel.set_backend("numpy")
    assert _accel.backend_name() == "numpy"
    _accel.set_backend(prev)
