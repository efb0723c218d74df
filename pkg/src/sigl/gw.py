"""Squared-loss Gromov-Wasserstein distance between similarity matrices.

The solver is the proximal-point scheme: at coupling T the linearized cost is
G = c1 1^T + 1 c2^T - 2 C1 T C2 with c1 = (C1*C1) p and c2 = (C2*C2) q, and
the next coupling is the Sinkhorn projection of T * exp(-G / epsilon) onto
the marginals (p, q).  The m*n*m*n cost tensor is never formed.

Block-constant matrices (nearest-neighbour upsamplings of a small estimate)
can be passed as :class:`Expanded` and are solved on their distinct points.
Large dense inputs that are numerically low rank, as smooth graphons are,
are factored once so the products cost O(R^2 r) instead of O(R^3).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import logsumexp

from .errors import SiglInputError
from .graphons import Graphon, GraphonGrid, discretize


@dataclass(frozen=True, eq=False)
class Expanded:
    """The R x R matrix values[index][:, index] without materializing it."""

    values: np.ndarray
    index: np.ndarray

    @property
    def size(self) -> int:
        return self.index.size

    def dense(self) -> np.ndarray:
        return self.values[np.ix_(self.index, self.index)]


Matrix = Union[np.ndarray, Expanded]


@dataclass(frozen=True, eq=False)
class GwResult:
    distance: float
    coupling: np.ndarray
    iterations_used: int
    converged: bool


class _Thin:
    """C = L M L^T with L orthonormal eigenvectors (numerically low-rank C)."""

    def __init__(self, M: np.ndarray, L: np.ndarray, dense: np.ndarray):
        self.M = M
        self.L = L
        self.dense = dense

    @property
    def shape(self):
        return self.dense.shape


# dense inputs at least this large are tried for a low-rank factorization
_LOWRANK_MIN_SIZE = 256
_LOWRANK_RTOL = 1e-10


def _operator(C: np.ndarray):
    if C.shape[0] >= _LOWRANK_MIN_SIZE:
        # smooth graphons are numerically low rank; dropping eigenvalues below
        # rtol * max|lambda| changes C by at most that much in spectral norm
        w, V = np.linalg.eigh(C)
        top = np.abs(w).max()
        keep = np.abs(w) > _LOWRANK_RTOL * top
        if top > 0 and keep.sum() <= C.shape[0] // 8:
            return _Thin(np.diag(w[keep]), V[:, keep], C)
    return C


def _dense(C) -> np.ndarray:
    return C.dense if isinstance(C, _Thin) else C


def _cross(C1, T: np.ndarray, C2) -> np.ndarray:
    """C1 T C2 for symmetric C1, C2, ordering products to avoid cubic work."""
    t1, t2 = isinstance(C1, _Thin), isinstance(C2, _Thin)
    if t2:
        Y = T @ C2.L
        Y = C1.L @ (C1.M @ (C1.L.T @ Y)) if t1 else C1 @ Y
        return (Y @ C2.M) @ C2.L.T
    if t1:
        return C1.L @ (C1.M @ ((C1.L.T @ T) @ C2))
    return (C1 @ T) @ C2


def _objective(C1, C2, T: np.ndarray) -> float:
    p = T.sum(axis=1)
    q = T.sum(axis=0)
    d1, d2 = _dense(C1), _dense(C2)
    return float(p @ ((d1 * d1) @ p) + q @ ((d2 * d2) @ q) - 2.0 * np.sum(_cross(C1, T, C2) * T))


def gw_objective(C1: Matrix, C2: Matrix, T: np.ndarray) -> float:
    """sum_{ijkl} (C1(i,k) - C2(j,l))^2 T(i,j) T(k,l) for symmetric C1, C2."""
    d1 = C1.dense() if isinstance(C1, Expanded) else np.asarray(C1, dtype=np.float64)
    d2 = C2.dense() if isinstance(C2, Expanded) else np.asarray(C2, dtype=np.float64)
    return _objective(d1, d2, T)


def _check(C: Matrix, name: str) -> Matrix:
    if isinstance(C, Expanded):
        vals = np.asarray(C.values, dtype=np.float64)
        idx = np.asarray(C.index, dtype=np.int64)
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1] or idx.ndim != 1 or idx.size == 0:
            raise SiglInputError(f"{name}: malformed expanded matrix")
        if idx.min() < 0 or idx.max() >= vals.shape[0]:
            raise SiglInputError(f"{name}: expansion index out of range")
        return Expanded(vals, idx)
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1] or C.shape[0] == 0:
        raise SiglInputError(f"{name} must be a non-empty square matrix, got {C.shape}")
    return C


def _compress(C: Matrix):
    """Merge identical points: (matrix over distinct points, integer multiplicities, map)."""
    if isinstance(C, Expanded):
        used, inverse, counts = np.unique(C.index, return_inverse=True, return_counts=True)
        return C.values[np.ix_(used, used)], counts, inverse
    n = C.shape[0]
    return C, np.ones(n, dtype=np.int64), np.arange(n)


# L1 marginal residual that ends an inner Sinkhorn loop early, and the final
# balancing target
_INNER_TOL = 1e-6
_FINAL_TOL = 1e-13
_FINAL_ITERS = 1000


def _balance(K: np.ndarray, p: np.ndarray, q: np.ndarray, v: np.ndarray, iters: int, tol: float):
    """Sinkhorn scalings (u, v) of K to marginals (p, q), warm-started at v."""
    u = p / (K @ v)
    for _ in range(iters):
        Ktu = K.T @ u
        if np.abs(v * Ktu - q).sum() < tol:
            break
        v = q / Ktu
        u = p / (K @ v)
    return u, v


def _balance_log(L: np.ndarray, p: np.ndarray, q: np.ndarray, iters: int, tol: float) -> np.ndarray:
    """log of the Sinkhorn projection of exp(L), for kernels that underflow."""
    lp, lq = np.log(p), np.log(q)
    g = np.zeros(q.size)
    for _ in range(iters):
        f = lp - logsumexp(L + g[None, :], axis=1)
        g = lq - logsumexp(L + f[:, None], axis=0)
        if np.abs(np.exp(logsumexp(L + f[:, None] + g[None, :], axis=1)) - p).sum() < tol:
            break
    return L + f[:, None] + g[None, :]


def _project(L: np.ndarray, p, q, v, iters: int, tol: float):
    """(log T, T, v) for the projection of exp(L); v warm-starts the next call."""
    K = np.exp(L)
    u, v2 = _balance(K, p, q, v, iters, tol)
    if np.all(np.isfinite(u)) and np.all(np.isfinite(v2)) and u.min() > 0 and v2.min() > 0:
        return L + np.log(u)[:, None] + np.log(v2)[None, :], u[:, None] * K * v2[None, :], v2
    logT = _balance_log(L, p, q, iters, tol)
    return logT, np.exp(logT), np.ones(q.size)


def _round_feasible(T: np.ndarray, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Nearby coupling with marginals exactly (p, q): shrink rows and columns
    that exceed their mass, then spread the missing mass as a rank-one term."""
    r = T.sum(axis=1)
    T = T * np.minimum(1.0, p / np.where(r > 0, r, 1.0))[:, None]
    c = T.sum(axis=0)
    T = T * np.minimum(1.0, q / np.where(c > 0, c, 1.0))[None, :]
    er = np.maximum(p - T.sum(axis=1), 0.0)
    ec = np.maximum(q - T.sum(axis=0), 0.0)
    total = er.sum()
    if total > 0:
        T = T + np.outer(er, ec) / total
    return T


def _solve(C1, C2, p, q, T0, epsilon, outer_iters, inner_iters, tol):
    logT = np.log(T0)
    T = T0
    v = np.ones(q.size)
    converged = False
    it = 0
    eps = epsilon
    best = (np.inf, logT, T, None)
    with np.errstate(divide="ignore", under="ignore", over="ignore", invalid="ignore"):
        for it in range(1, outer_iters + 1):
            X = _cross(C1, T, C2)
            # objective up to terms fixed by the marginals
            val = -float(np.sum(X * T))
            if val < best[0]:
                best = (val, logT, T, X)
            else:
                # the step overshot (typical near interior optima): back off and halve the step
                eps *= 2.0
                _, logT, T, X = best
            # the row/column constant parts of the cost are absorbed by the scalings
            L = logT + (2.0 / eps) * X
            L -= L.max(axis=1, keepdims=True)
            logT, T_new, v = _project(L, p, q, v, inner_iters, _INNER_TOL)
            change = float(np.abs(T_new - T).sum())
            T = T_new
            if change <= tol:
                converged = True
                break
        if -float(np.sum(_cross(C1, T, C2) * T)) > best[0]:
            logT = best[1]
        logT, T, _ = _project(logT, p, q, np.ones(q.size), _FINAL_ITERS, _FINAL_TOL)
    return _round_feasible(T, p, q), it, converged


def monotone_coupling(a: np.ndarray, b: np.ndarray, wa=None, wb=None) -> np.ndarray:
    """North-west-corner coupling along decreasing a and b.

    Marginals are proportional to the integer weights ``wa``/``wb`` (uniform
    by default); integer bookkeeping keeps the corner rule exact.
    """
    m, n = a.size, b.size
    wa = np.ones(m, dtype=np.int64) if wa is None else np.asarray(wa, dtype=np.int64)
    wb = np.ones(n, dtype=np.int64) if wb is None else np.asarray(wb, dtype=np.int64)
    sa, sb = int(wa.sum()), int(wb.sum())
    oa = np.argsort(-a, kind="stable")
    ob = np.argsort(-b, kind="stable")
    T = np.zeros((m, n))
    ra = wa[oa] * sb
    rb = wb[ob] * sa
    i = j = 0
    while i < m and j < n:
        x = min(ra[i], rb[j])
        T[oa[i], ob[j]] += x
        ra[i] -= x
        rb[j] -= x
        if ra[i] == 0:
            i += 1
        if rb[j] == 0:
            j += 1
    return T / (sa * sb)


# problems up to this many points get extra seeded starts by default
_SMALL = 64
_TINY = 16


def gw_distance(C1: Matrix, C2: Matrix, epsilon: float = 5e-3, outer_iters: int = 200,
                inner_iters: int = 100, tol: float = 1e-9, restarts: Optional[int] = None,
                round_permutation: bool = True, seed: int = 0) -> GwResult:
    """GW distance with uniform marginals via entropic proximal-point iterations.

    Runs start from the uniform coupling, then (for problems up to 64 points,
    or when the uniform coupling is stationary) from the degree-monotone
    coupling mixed half and half with uniform, then from ``restarts`` seeded
    random monotone couplings mixed the same way (``None``: 24 up to 16
    points, 2 up to 64, 0 otherwise).  ``tol`` bounds the L1 change of the coupling
    between outer iterations.  For equal sizes each result is also rounded to
    a permutation coupling by Hungarian matching.  The lowest objective over
    these feasible couplings is reported.

    Block-constant inputs given as :class:`Expanded` are solved on their
    distinct points with multiplicity-weighted marginals, which is the same
    problem, and the coupling is spread back evenly over each block.
    """
    C1 = _check(C1, "C1")
    C2 = _check(C2, "C2")
    D1, w1, map1 = _compress(C1)
    D2, w2, map2 = _compress(C2)
    m, n = map1.size, map2.size
    compressed = D1.shape[0] != m or D2.shape[0] != n
    p = w1 / m
    q = w2 / n
    small = max(m, n) <= _SMALL
    if restarts is None:
        restarts = 24 if max(m, n) <= _TINY else (2 if small else 0)
    A, B = _operator(D1), _operator(D2)

    def run(T0):
        T, it, conv = _solve(A, B, p, q, T0, epsilon, outer_iters, inner_iters, tol)
        cands = [T]
        if round_permutation and m == n and not compressed:
            rows, cols = linear_sum_assignment(-T)
            P = np.zeros_like(T)
            P[rows, cols] = 1.0 / n
            cands.append(P)
        return [(_objective(A, B, c), c, it, conv) for c in cands]

    uniform = np.outer(p, q)
    results = run(uniform)
    stationary = results[0][2] == 1 and results[0][3]
    mixed = []
    if small or stationary:
        mixed.append(monotone_coupling(D1 @ p, D2 @ q, w1, w2))
    if restarts:
        from .rng import stream

        rng = stream(seed, 31, m, n)
        for _ in range(restarts):
            mixed.append(monotone_coupling(rng.random(p.size), rng.random(q.size), w1, w2))
    for M in mixed:
        results += run(0.5 * uniform + 0.5 * M)
    obj, T, it, conv = min(results, key=lambda r: r[0])
    if compressed:
        T = T[np.ix_(map1, map2)] / np.outer(w1[map1], w2[map2])
    return GwResult(math.sqrt(max(obj, 0.0)), T, it, conv)


def _expand_to(C: np.ndarray, L: int) -> np.ndarray:
    r = L // C.shape[0]
    return np.repeat(np.repeat(C, r, axis=0), r, axis=1)


def gw_bruteforce(C1, C2) -> float:
    """Smallest GW value over permutation couplings of a common refinement.

    Equal sizes enumerate all n! permutation couplings.  Otherwise each point
    is split into equal-mass copies up to lcm(m, n), which must not exceed 8,
    and the block-uniform couplings induced by permutations are enumerated.
    """
    C1 = np.asarray(C1, dtype=np.float64)
    C2 = np.asarray(C2, dtype=np.float64)
    m, n = C1.shape[0], C2.shape[0]
    if max(m, n) > 8:
        raise SiglInputError("gw_bruteforce supports sizes up to 8")
    L = m * n // math.gcd(m, n)
    if L > 8:
        raise SiglInputError(f"gw_bruteforce: common refinement of sizes {m} and {n} exceeds 8")
    A = _expand_to(C1, L)
    B = _expand_to(C2, L)
    best = np.inf
    for perm in itertools.permutations(range(L)):
        idx = np.array(perm)
        val = np.mean((A - B[np.ix_(idx, idx)]) ** 2)
        best = min(best, val)
    return math.sqrt(best)


def estimation_error(true_spec: Graphon, estimate: Union[GraphonGrid, Expanded, np.ndarray],
                     R: Optional[int] = None, **opts) -> float:
    """GW distance between the truth discretized at R and an R x R estimate."""
    if isinstance(estimate, GraphonGrid):
        est: Matrix = estimate.values
    elif isinstance(estimate, Expanded):
        est = estimate
    else:
        est = np.asarray(estimate, dtype=np.float64)
    size = est.size if isinstance(est, Expanded) else est.shape[0]
    R = size if R is None else R
    if size != R:
        raise SiglInputError(f"estimate resolution {size} differs from evaluation resolution {R}")
    return gw_distance(discretize(true_spec, R).values, est, **opts).distance
