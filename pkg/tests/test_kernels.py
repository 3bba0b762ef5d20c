import numpy as np
import pytest

from attrgame import _kernels_py, kernels
from attrgame.game_core import Partition, strategy_codes

compiled = pytest.importorskip("attrgame._kernels")


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.parametrize("blocks", [[[1]], [[1, 2], [3, 4]], [[0, 1, 2], [3, 4], [5, 6, 7, 8]]])
def test_indicator_parity(blocks):
    codes = strategy_codes(Partition(blocks))
    np.testing.assert_array_equal(compiled.indicator_matrix(codes), _kernels_py.indicator_matrix(codes))


@pytest.mark.parametrize("alternating", [True, False])
@pytest.mark.parametrize("seed", range(5))
def test_fictitious_play_bit_identical(seed, alternating):
    rng = np.random.default_rng(seed)
    m = np.ascontiguousarray(rng.uniform(-1, 1, size=(rng.integers(1, 7), rng.integers(1, 7))))
    a = compiled.fictitious_play(m, 20_000, 1e-4, alternating)
    b = _kernels_py.fictitious_play(m, 20_000, 1e-4, alternating)
    for u, v in zip(a, b):
        if isinstance(u, np.ndarray):
            np.testing.assert_array_equal(u, v)
        else:
            assert u == v
