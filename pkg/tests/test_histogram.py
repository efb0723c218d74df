import numpy as np
import pytest

from sigl.errors import SiglInputError
from sigl.histogram import (RIGHT_EDGE, build_coordinate_dataset, default_window, export_dataset_csv,
                            pool_histogram)


def brute_pool(a, h):
    n = a.shape[0]
    k = n // h
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            s = 0.0
            for s1 in range(h):
                for s2 in range(h):
                    s += a[i * h + s1, j * h + s2]
            out[i, j] = s / (h * h)
    return out


def test_small_examples():
    assert np.array_equal(pool_histogram(np.ones((4, 4)), 2).values, np.ones((2, 2)))
    assert np.array_equal(pool_histogram(np.eye(4), 2).values, [[0.5, 0.0], [0.0, 0.5]])
    a = np.random.default_rng(0).integers(0, 2, (5, 5))
    h = pool_histogram(a, 2)
    assert h.k == 2 and np.array_equal(h.values, brute_pool(a, 2))


def test_window_errors():
    with pytest.raises(SiglInputError):
        pool_histogram(np.ones((3, 3)), 4)
    with pytest.raises(SiglInputError):
        pool_histogram(np.ones((3, 3)), 0)


def test_constant_and_mean_preservation():
    rng = np.random.default_rng(3)
    for n, h in ((17, 3), (20, 4), (9, 9)):
        assert np.all(pool_histogram(np.full((n, n), 0.375), h).values == 0.375)
        a = rng.integers(0, 2, (n, n)).astype(float)
        k = n // h
        assert pool_histogram(a, h).values.mean() == pytest.approx(a[:k * h, :k * h].mean(), abs=1e-15)


def test_default_window():
    assert default_window(100) == 5
    assert default_window(300) == 6
    assert default_window(3) == 1
    assert default_window(1) == 1


def test_coordinate_dataset():
    h = pool_histogram(np.ones((4, 4)), 2)
    d = build_coordinate_dataset([h], [4])
    assert np.array_equal(d.coords(), [[0.25, 0.25], [0.25, 0.75], [0.75, 0.75]])
    h1, h2 = pool_histogram(np.ones((100, 100)), 5), pool_histogram(np.ones((300, 300)), 6)
    d = build_coordinate_dataset([h1, h2], [100, 300])
    assert set(np.unique(d.weight)) == {0.25, 0.75}
    assert len(d) == 20 * 21 // 2 + 50 * 51 // 2
    assert d.x.min() > 0 and d.y.max() < 1
    e = build_coordinate_dataset([h], [4], RIGHT_EDGE)
    assert np.array_equal(e.coords(), [[0.5, 0.5], [0.5, 1.0], [1.0, 1.0]])


def test_export_csv(tmp_path):
    d = build_coordinate_dataset([pool_histogram(np.eye(4), 2)], [4])
    export_dataset_csv(d, tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "graph_index,x,y,target,weight" and len(lines) == 4
