"""Pure-numpy versions of the compiled kernels in ``_core.pyx``.

Both implementations follow the same operation order so that decoded
paths and metrics agree bit for bit.
"""
import numpy as np


def polar_transform(u):
    """u F^{(x)n} over GF(2), F = [[1, 0], [1, 1]], natural order, rows batched."""
    x = np.array(u, dtype=np.uint8, copy=True, order="C")
    squeeze = x.ndim == 1
    x = np.atleast_2d(x)
    N = x.shape[1]
    h = 1
    while h < N:
        v = x.reshape(x.shape[0], N // (2 * h), 2, h)
        v[:, :, 0, :] ^= v[:, :, 1, :]
        h *= 2
    return x[0] if squeeze else x


def _f(a, b):
    m = np.minimum(np.abs(a), np.abs(b))
    return np.where((a < 0) ^ (b < 0), -m, m)


def scl_decode_paths(llr, frozen, list_size):
    """Min-sum successive-cancellation list decoding.

    Returns ``(u_hat, metrics)`` for the surviving paths, sorted by
    ascending path metric (ties keep list order). ``u_hat`` holds the full
    length-N input vectors including frozen positions.
    """
    llr = np.ascontiguousarray(llr, dtype=np.float64)
    frozen = np.asarray(frozen, dtype=bool)
    N = llr.shape[0]
    n = N.bit_length() - 1
    alpha = [llr[None, :]] + [np.zeros((1, N >> d)) for d in range(1, n + 1)]
    left = [None] + [np.zeros((1, N >> d), dtype=np.uint8) for d in range(1, n + 1)]
    u = np.zeros((1, N), dtype=np.uint8)
    pm = np.zeros(1)

    for i in range(N):
        if i == 0:
            start = 0
        else:
            d0 = n - 1 - ((i ^ (i - 1)).bit_length() - 1)
            h = N >> (d0 + 1)
            a = alpha[d0][:, :h]
            b = alpha[d0][:, h:]
            alpha[d0 + 1] = np.where(left[d0 + 1] != 0, b - a, b + a)
            start = d0 + 1
        for d in range(start, n):
            h = N >> (d + 1)
            alpha[d + 1] = _f(alpha[d][:, :h], alpha[d][:, h:])
        lam = alpha[n][:, 0]
        pen0 = np.where(lam < 0, -lam, 0.0)

        if frozen[i]:
            pm = pm + pen0
            bits = np.zeros(len(pm), dtype=np.uint8)
        else:
            pen1 = np.where(lam > 0, lam, 0.0)
            cand = np.empty(2 * len(pm))
            cand[0::2] = pm + pen0
            cand[1::2] = pm + pen1
            order = np.argsort(cand, kind="stable")[:list_size]
            parent = order >> 1
            bits = (order & 1).astype(np.uint8)
            pm = cand[order]
            for d in range(1, n + 1):
                alpha[d] = alpha[d][parent]
                left[d] = left[d][parent]
            u = u[parent]
        u[:, i] = bits

        cw = bits[:, None]
        d, idx = n, i
        while d > 0 and idx & 1:
            cw = np.concatenate([left[d] ^ cw, cw], axis=1)
            d -= 1
            idx >>= 1
        if d > 0:
            left[d] = cw

    order = np.argsort(pm, kind="stable")
    return u[order], pm[order]
