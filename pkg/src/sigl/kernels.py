"""Hot numeric kernels, each with a numba path and a pure-numpy path.

``pair_inr_loss`` is the Step-1 inner loop: the mean squared error between a
graph's adjacency and a two-hidden-layer sine network evaluated at every
ordered pair of node latents, together with its gradient.  It is
O(n^2 * width^2) per call and dominates training time.  ``pool_blocks``
average-pools a square matrix in non-overlapping h x h blocks.

Both paths compute the same quantities in the same order per row; they agree
to rounding (pooling agrees bit for bit).  Dispatch follows
:mod:`sigl._accel`.
"""

from __future__ import annotations

import numpy as np

from . import _accel
from ._accel import njit

# rows of pairs processed together by the numpy path (bounds temporaries)
_NUMPY_ROW_CHUNK = 64

# pi/2 split in three parts for Cody-Waite reduction (fdlibm constants)
_TWO_OVER_PI = 0.63661977236758134308
_PIO2_1 = 1.57079632673412561417e+00
_PIO2_2 = 6.07710050630396597660e-11
_PIO2_3 = 2.02226624879595063154e-21


@njit(inline="always")
def _sincos(x):
    # Branch-free sin/cos so the inner loop vectorizes; minimax polynomials on
    # |r| <= pi/4 (Cephes coefficients), abs error ~1 ulp for |x| < 1e5.
    q = np.floor(x * _TWO_OVER_PI + 0.5)
    r = ((x - q * _PIO2_1) - q * _PIO2_2) - q * _PIO2_3
    z = r * r
    s = r + r * z * (-1.66666666666666307295e-1 + z * (8.33333333332211858878e-3
        + z * (-1.98412698295895385996e-4 + z * (2.75573136213857245213e-6
        + z * (-2.50507477628578072866e-8 + z * 1.58962301576546568060e-10)))))
    c = 1.0 - 0.5 * z + z * z * (4.16666666666665929218e-2 + z * (-1.38888888888730564116e-3
        + z * (2.48015872888517045348e-5 + z * (-2.75573141792967388112e-7
        + z * (2.08757008419747316778e-9 - z * 1.13585365213876817300e-11)))))
    qi = np.int64(q) & 3
    so = s if (qi & 1) == 0 else c
    co = c if (qi & 1) == 0 else s
    if qi & 2:
        so = -so
    if (qi + 1) & 2:
        co = -co
    return so, co


def _first_layer_tables(eta, W0, b0, omega):
    # sin(omega (W0 [x, y] + b0)) is separable: u depends on x only, v on y only
    u = omega * (eta[:, None] * W0[:, 0][None, :] + b0[None, :])
    v = omega * (eta[:, None] * W0[:, 1][None, :])
    return np.sin(u), np.cos(u), np.sin(v), np.cos(v)


def _pair_inr_loss_numpy(eta, adj, W0, b0, W1, b1, w2, b2, omega):
    n = eta.size
    su, cu, sv, cv = _first_layer_tables(eta, W0, b0, omega)
    H = b0.size
    inv = 1.0 / (n * n)
    du = np.zeros((n, H))
    dv = np.zeros((n, H))
    gW1 = np.zeros_like(W1)
    gb1 = np.zeros_like(b1)
    gw2 = np.zeros_like(w2)
    gb2 = 0.0
    loss = 0.0
    W1T = np.ascontiguousarray(W1.T)
    for start in range(0, n, _NUMPY_ROW_CHUNK):
        stop = min(start + _NUMPY_ROW_CHUNK, n)
        rows = stop - start
        # (rows, n, H) first-layer activations via angle addition
        S0 = su[start:stop, None, :] * cv[None, :, :] + cu[start:stop, None, :] * sv[None, :, :]
        C0 = cu[start:stop, None, :] * cv[None, :, :] - su[start:stop, None, :] * sv[None, :, :]
        S0 = S0.reshape(rows * n, H)
        C0 = C0.reshape(rows * n, H)
        Z = omega * (S0 @ W1T + b1)
        S1 = np.sin(Z)
        C1 = np.cos(Z)
        out = S1 @ w2 + b2
        pred = np.clip(out, 0.0, 1.0)
        resid = adj[start:stop].reshape(-1).astype(np.float64) - pred
        loss += float(resid @ resid)
        g = np.where((out >= 0.0) & (out <= 1.0), -2.0 * inv * resid, 0.0)
        gb2 += float(g.sum())
        gw2 += S1.T @ g
        D1 = (omega * g)[:, None] * w2[None, :] * C1
        gb1 += D1.sum(axis=0)
        gW1 += D1.T @ S0
        DP0 = omega * (D1 @ W1) * C0
        DP0 = DP0.reshape(rows, n, H)
        du[start:stop] += DP0.sum(axis=1)
        dv += DP0.sum(axis=0)
    gW0 = np.empty_like(W0)
    gW0[:, 0] = du.T @ eta
    gW0[:, 1] = dv.T @ eta
    gb0 = du.sum(axis=0)
    g_eta = du @ W0[:, 0] + dv @ W0[:, 1]
    return loss * inv, g_eta, gW0, gb0, gW1, gb1, gw2, gb2


@njit(cache=True)
def _pair_inr_loss_numba(eta, adj, W0, b0, W1, b1, w2, b2, omega):
    n = eta.size
    H = b0.size
    H1 = b1.size
    su = np.empty((n, H))
    cu = np.empty((n, H))
    sv = np.empty((n, H))
    cv = np.empty((n, H))
    for i in range(n):
        for k in range(H):
            u = omega * (eta[i] * W0[k, 0] + b0[k])
            v = omega * (eta[i] * W0[k, 1])
            su[i, k] = np.sin(u)
            cu[i, k] = np.cos(u)
            sv[i, k] = np.sin(v)
            cv[i, k] = np.cos(v)
    inv = 1.0 / (n * n)
    du = np.zeros((n, H))
    dv = np.zeros((n, H))
    gW1 = np.zeros((H1, H))
    gb1 = np.zeros(H1)
    gw2 = np.zeros(H1)
    gb2 = 0.0
    loss = 0.0
    W1T = np.ascontiguousarray(W1.T)
    S0 = np.empty((n, H))
    C0 = np.empty((n, H))
    D1 = np.empty((n, H1))
    for i in range(n):
        for j in range(n):
            for k in range(H):
                S0[j, k] = su[i, k] * cv[j, k] + cu[i, k] * sv[j, k]
                C0[j, k] = cu[i, k] * cv[j, k] - su[i, k] * sv[j, k]
        Z = np.dot(S0, W1T)
        for j in range(n):
            for m in range(H1):
                Z[j, m], D1[j, m] = _sincos(omega * (Z[j, m] + b1[m]))
            out = b2
            for m in range(H1):
                out += w2[m] * Z[j, m]
            pred = min(max(out, 0.0), 1.0)
            r = adj[i, j] - pred
            loss += r * r
            if out < 0.0 or out > 1.0:
                for m in range(H1):
                    D1[j, m] = 0.0
                continue
            g = -2.0 * inv * r
            gb2 += g
            for m in range(H1):
                gw2[m] += g * Z[j, m]
                D1[j, m] *= omega * g * w2[m]
        gW1 += np.dot(D1.T, S0)
        DS0 = np.dot(D1, W1)
        for j in range(n):
            for k in range(H):
                d = omega * DS0[j, k] * C0[j, k]
                du[i, k] += d
                dv[j, k] += d
        for m in range(H1):
            acc = 0.0
            for j in range(n):
                acc += D1[j, m]
            gb1[m] += acc
    gW0 = np.empty((H, 2))
    gb0 = np.zeros(H)
    g_eta = np.zeros(n)
    for k in range(H):
        a0 = 0.0
        a1 = 0.0
        for i in range(n):
            a0 += du[i, k] * eta[i]
            a1 += dv[i, k] * eta[i]
            gb0[k] += du[i, k]
            g_eta[i] += du[i, k] * W0[k, 0] + dv[i, k] * W0[k, 1]
        gW0[k, 0] = a0
        gW0[k, 1] = a1
    return loss * inv, g_eta, gW0, gb0, gW1, gb1, gw2, gb2


def pair_inr_loss(eta, adj, W0, b0, W1, b1, w2, b2, omega):
    """Loss and gradients of (1/n^2) sum_ij (A_ij - clamp(f(eta_i, eta_j)))^2.

    ``f`` is ``w2 . sin(omega (W1 sin(omega (W0 [x, y] + b0)) + b1)) + b2``.
    The clamp passes gradient only where 0 <= f <= 1.  Returns
    ``(loss, d_eta, dW0, db0, dW1, db1, dw2, db2)``.
    """
    eta = np.ascontiguousarray(eta, dtype=np.float64)
    adj = np.ascontiguousarray(adj)
    args = (eta, adj, np.ascontiguousarray(W0, dtype=np.float64),
            np.ascontiguousarray(b0, dtype=np.float64), np.ascontiguousarray(W1, dtype=np.float64),
            np.ascontiguousarray(b1, dtype=np.float64), np.ascontiguousarray(w2, dtype=np.float64),
            float(b2), float(omega))
    if _accel.use_numba():
        return _pair_inr_loss_numba(*args)
    return _pair_inr_loss_numpy(*args)


def _pool_blocks_numpy(a, h):
    k = a.shape[0] // h
    blocks = np.asarray(a[: k * h, : k * h], dtype=np.float64).reshape(k, h, k, h)
    sums = blocks.sum(axis=(1, 3))
    out = sums / (h * h)
    lo = blocks.min(axis=(1, 3))
    hi = blocks.max(axis=(1, 3))
    # a constant block averages to its value exactly
    return np.where(lo == hi, lo, out)


@njit(cache=True)
def _pool_blocks_numba(a, h):
    k = a.shape[0] // h
    out = np.empty((k, k))
    for bi in range(k):
        for bj in range(k):
            first = float(a[bi * h, bj * h])
            lo = first
            hi = first
            # row-major partial sums, matching the numpy reduction for 0/1 input
            acc = 0.0
            for s1 in range(h):
                for s2 in range(h):
                    val = float(a[bi * h + s1, bj * h + s2])
                    acc += val
                    if val < lo:
                        lo = val
                    if val > hi:
                        hi = val
            out[bi, bj] = lo if lo == hi else acc / (h * h)
    return out


def pool_blocks(a: np.ndarray, h: int) -> np.ndarray:
    """Mean of each h x h block of ``a``; trailing rows/columns are dropped."""
    a = np.ascontiguousarray(a)
    if _accel.use_numba():
        return _pool_blocks_numba(a, int(h))
    return _pool_blocks_numpy(a, int(h))
