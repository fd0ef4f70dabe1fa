"""Shared pilot / spreading codebooks and the per-UE transmitter."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .polar import CrcSpec, PolarCodeSpec, crc_append, polar_encode

INV_SQRT2 = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class Codebooks:
    """Pilot matrix P (n_p x J) and spreading matrix A (L x J).

    Pilots are stored as a J x 2n_p float32 sign matrix ``[Re | Im]``
    (entries +-1, the pilot being (Re + j Im)/sqrt(2)), which is both the
    compact form and the operand of the correlation GEMMs.
    """

    signs: np.ndarray
    A: np.ndarray
    seed: int

    @property
    def J(self) -> int:
        return self.signs.shape[0]

    @property
    def n_p(self) -> int:
        return self.signs.shape[1] // 2

    @property
    def L(self) -> int:
        return self.A.shape[0]

    def pilots(self, idx) -> np.ndarray:
        """Columns P[:, idx] as complex128, shape (n_p, len(idx))."""
        rows = self.signs[np.asarray(idx, dtype=np.int64)].astype(np.float64)
        n_p = self.n_p
        return ((rows[:, :n_p] + 1j * rows[:, n_p:]) * INV_SQRT2).T

    @property
    def P(self) -> np.ndarray:
        return self.pilots(np.arange(self.J))

    def correlate(self, Y: np.ndarray) -> np.ndarray:
        """P^H Y for an n_p x c complex matrix, computed in float32 (J x c complex64)."""
        Y = np.asarray(Y)
        Yr = Y.real.astype(np.float32)
        Yi = Y.imag.astype(np.float32)
        Z = np.block([[Yr, Yi], [Yi, -Yr]])
        out = self.signs @ Z
        c = Y.shape[1]
        res = np.empty((self.J, c), dtype=np.complex64)
        res.real = out[:, :c]
        res.imag = out[:, c:]
        res *= np.float32(INV_SQRT2)
        return res

    def gram_columns(self, idx) -> np.ndarray:
        """P^H P[:, idx] (J x len(idx), complex128).

        Entries are Gaussian integers, so the float32 sign GEMM is exact.
        """
        rows = self.signs[np.asarray(idx, dtype=np.int64)]
        n_p = self.n_p
        sr, si = rows[:, :n_p].T, rows[:, n_p:].T
        Z = np.block([[sr, si], [si, -sr]])
        out = (self.signs @ Z).astype(np.float64)
        c = len(rows)
        return 0.5 * (out[:, :c] + 1j * out[:, c:])


def gen_codebooks(seed: int, J: int, n_p: int, L: int) -> Codebooks:
    rng = np.random.default_rng(seed)
    signs = rng.integers(0, 2, size=(J, 2 * n_p), dtype=np.int8)
    signs = (1 - 2 * signs).astype(np.float32)
    A = (rng.standard_normal((L, J)) + 1j * rng.standard_normal((L, J))) * INV_SQRT2
    A *= np.sqrt(L) / np.linalg.norm(A, axis=0)
    return Codebooks(signs, A, int(seed))


@lru_cache(maxsize=2)
def cached_codebooks(seed: int, J: int, n_p: int, L: int) -> Codebooks:
    return gen_codebooks(seed, J, n_p, L)


def phi_index(m_f) -> np.ndarray | int:
    """Big-endian, zero-based integer value of the prefix bits (row-wise)."""
    m_f = np.asarray(m_f, dtype=np.int64)
    weights = 1 << np.arange(m_f.shape[-1] - 1, -1, -1, dtype=np.int64)
    out = m_f @ weights
    return int(out) if out.ndim == 0 else out


def index_bits(j, B_f: int) -> np.ndarray:
    j = np.asarray(j, dtype=np.int64)
    return ((j[..., None] >> np.arange(B_f - 1, -1, -1)) & 1).astype(np.uint8)


def qpsk_modulate(c) -> np.ndarray:
    """Gray QPSK: (b_I, b_Q) -> ((1 - 2 b_I) + j (1 - 2 b_Q)) / sqrt(2)."""
    c = np.asarray(c)
    if c.shape[-1] % 2:
        raise ValueError("QPSK needs an even number of bits")
    b = c.astype(np.float64)
    return ((1 - 2 * b[..., 0::2]) + 1j * (1 - 2 * b[..., 1::2])) * INV_SQRT2


def spread(s, a) -> np.ndarray:
    """Kronecker spreading s (x) a; rows of ``s`` may be batched against columns of ``a``."""
    s = np.asarray(s)
    a = np.asarray(a)
    if s.ndim == 1 and a.ndim == 1:
        return np.kron(s, a)
    # s: (K, T), a: (L, K) -> (K, T*L)
    return (s[:, :, None] * a.T[:, None, :]).reshape(s.shape[0], -1)


def encode_messages(messages, cb: Codebooks, code: PolarCodeSpec, P: float, B_f: int,
                    crc: CrcSpec = CrcSpec()) -> np.ndarray:
    """Transmit signals for a batch of B-bit messages, shape (K, n_p + T*L)."""
    messages = np.atleast_2d(np.asarray(messages, dtype=np.uint8))
    idx = phi_index(messages[:, :B_f])
    cw = polar_encode(crc_append(messages[:, B_f:], crc), code)
    s = qpsk_modulate(cw)
    pilot = cb.pilots(idx).T
    data = spread(s, cb.A[:, idx])
    return np.sqrt(P) * np.concatenate([pilot, data], axis=1)


def assemble_tx(m, cb: Codebooks, code: PolarCodeSpec, P: float, B_f: int,
                crc: CrcSpec = CrcSpec()) -> np.ndarray:
    return encode_messages(np.asarray(m)[None, :], cb, code, P, B_f, crc)[0]
