import math

import numpy as np
import pytest

from sigl.errors import SiglInputError
from sigl.graphons import CATALOG_IDS, Constant, Synthetic, discretize
from sigl.gw import Expanded, estimation_error, gw_bruteforce, gw_distance, gw_objective, monotone_coupling
from helpers import random_binary


def naive_objective(C1, C2, T):
    diff = C1[:, None, :, None] - C2[None, :, None, :]
    return float(np.einsum("ijkl,ij,kl->", diff ** 2, T, T))


def test_objective_decomposition_matches_tensor_sum():
    rng = np.random.default_rng(0)
    A, B = rng.random((4, 4)), rng.random((5, 5))
    A, B = A + A.T, B + B.T
    T = rng.random((4, 5))
    T /= T.sum()
    assert gw_objective(A, B, T) == pytest.approx(naive_objective(A, B, T), rel=1e-12)


def test_bruteforce_examples():
    C1 = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert gw_bruteforce(C1, np.zeros((2, 2))) == pytest.approx(math.sqrt(0.5))
    M = np.random.default_rng(1).random((3, 3))
    M = M + M.T
    assert gw_bruteforce(M, M) == 0.0
    rng = np.random.default_rng(2)
    A, B = random_binary(rng, 4), random_binary(rng, 2)
    assert gw_bruteforce(A, B) == pytest.approx(gw_bruteforce(B, A))
    with pytest.raises(SiglInputError):
        gw_bruteforce(np.zeros((9, 9)), np.zeros((9, 9)))
    with pytest.raises(SiglInputError):
        gw_bruteforce(np.zeros((3, 3)), np.zeros((4, 4)))


def test_identity_and_permutation():
    rng = np.random.default_rng(3)
    A = random_binary(rng, 12)
    p = rng.permutation(12)
    assert gw_distance(A, A).distance <= 1e-6
    assert gw_distance(A, A[np.ix_(p, p)]).distance <= 1e-6


@pytest.mark.parametrize("gid", CATALOG_IDS)
def test_catalog_self_distance(gid):
    C = discretize(Synthetic(gid), 120).values
    assert gw_distance(C, C).distance <= 1e-6


def test_coupling_marginals_and_flags():
    rng = np.random.default_rng(4)
    A, B = rng.random((9, 9)), rng.random((6, 6))
    r = gw_distance(A + A.T, B + B.T, round_permutation=False)
    assert np.abs(r.coupling.sum(1) - 1 / 9).max() < 1e-8
    assert np.abs(r.coupling.sum(0) - 1 / 6).max() < 1e-8
    assert r.coupling.min() >= 0 and r.distance >= 0 and 1 <= r.iterations_used <= 200
    short = gw_distance(A + A.T, B + B.T, outer_iters=1, tol=0.0)
    assert short.converged is False and short.iterations_used == 1


def test_constant_closed_form():
    assert estimation_error(Constant(0.3), np.full((10, 10), 0.5)) == pytest.approx(0.2, abs=1e-9)


def test_estimation_error_contract():
    truth = discretize(Synthetic(5), 60).values
    p = np.random.default_rng(5).permutation(60)
    assert estimation_error(Synthetic(5), truth) <= 1e-6
    assert estimation_error(Synthetic(5), truth[np.ix_(p, p)]) <= 1e-6
    with pytest.raises(SiglInputError):
        estimation_error(Synthetic(5), truth, R=50)


def test_expanded_matches_dense():
    rng = np.random.default_rng(6)
    V = rng.random((5, 5))
    V = V + V.T
    idx = np.floor((np.arange(40) + 0.5) * 5 / 40).astype(int)
    C = discretize(Synthetic(2), 40).values
    dense = gw_distance(C, V[np.ix_(idx, idx)], round_permutation=False).distance
    packed = gw_distance(C, Expanded(V, idx)).distance
    assert packed == pytest.approx(dense, abs=1e-4)
    r = gw_distance(C, Expanded(V, idx))
    assert r.coupling.shape == (40, 40)
    assert np.abs(r.coupling.sum(0) - 1 / 40).max() < 1e-8


def test_monotone_coupling_is_exact():
    T = monotone_coupling(np.array([3.0, 1.0, 2.0]), np.array([0.0, 5.0]))
    assert np.allclose(T.sum(1), 1 / 3) and np.allclose(T.sum(0), 1 / 2)
    # the largest entry of a goes with the largest of b
    assert T[0, 1] == pytest.approx(1 / 3)


@pytest.mark.parametrize("seed", range(6))
def test_against_bruteforce_small(seed):
    rng = np.random.default_rng(100 + seed)
    m = int(rng.integers(2, 7))
    A, B = random_binary(rng, m), random_binary(rng, m)
    assert abs(gw_distance(A, B).distance - gw_bruteforce(A, B)) <= 0.02


def test_input_validation():
    with pytest.raises(SiglInputError):
        gw_distance(np.zeros((2, 3)), np.zeros((2, 2)))
    with pytest.raises(SiglInputError):
        gw_distance(Expanded(np.zeros((2, 2)), np.array([0, 3])), np.zeros((2, 2)))
