"""CRC-aided polar coding: CRC-16, frozen-set construction, encoding, SCL decoding."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from ._kernels import polar_transform, scl_decode_paths


@dataclass(frozen=True)
class CrcSpec:
    """CRC parameters, non-reflected, MSB-first (CRC-16/XMODEM by default)."""

    width: int = 16
    polynomial: int = 0x1021
    init: int = 0x0000
    xorout: int = 0x0000


def crc_register(bits, spec: CrcSpec = CrcSpec()) -> np.ndarray:
    """Bit-serial shift register; ``bits`` is (..., length), returns (...,) ints."""
    bits = np.asarray(bits, dtype=np.uint8)
    mask = (1 << spec.width) - 1
    top = spec.width - 1
    reg = np.full(bits.shape[:-1], spec.init, dtype=np.int64)
    for j in range(bits.shape[-1]):
        fb = ((reg >> top) & 1) ^ bits[..., j]
        reg = ((reg << 1) & mask) ^ (fb * spec.polynomial)
    return reg ^ spec.xorout


@lru_cache(maxsize=32)
def _crc_affine(length: int, spec: CrcSpec):
    """The register map is affine in the message: crc(m) = m H + c0 over GF(2)."""
    c0 = int(crc_register(np.zeros(length, dtype=np.uint8), spec))
    rows = crc_register(np.eye(length, dtype=np.uint8), spec) ^ c0
    shifts = np.arange(spec.width - 1, -1, -1)
    H = ((rows[:, None] >> shifts) & 1).astype(np.int64)
    c0_bits = ((c0 >> shifts) & 1).astype(np.int64)
    return H, c0_bits


def crc_bits(m, spec: CrcSpec = CrcSpec()) -> np.ndarray:
    """CRC of each row of ``m`` as ``width`` bits, MSB first."""
    m = np.asarray(m, dtype=np.uint8)
    H, c0 = _crc_affine(m.shape[-1], spec)
    return ((m.astype(np.int64) @ H + c0) & 1).astype(np.uint8)


def crc_append(m_s, spec: CrcSpec = CrcSpec()) -> np.ndarray:
    m_s = np.asarray(m_s, dtype=np.uint8)
    return np.concatenate([m_s, crc_bits(m_s, spec)], axis=-1)


def crc_check(word, spec: CrcSpec = CrcSpec()):
    """True where the trailing ``width`` bits are the CRC of the leading ones."""
    word = np.asarray(word, dtype=np.uint8)
    payload, tail = word[..., : -spec.width], word[..., -spec.width:]
    return (crc_bits(payload, spec) == tail).all(axis=-1)


# Gaussian approximation of bit-channel LLR means, kept in the log domain
# because the reliable channels push phi(x) far below float range.
_A, _B, _C = -0.4527, 0.86, 0.0218


def _log_phi(x: float) -> float:
    if x <= 0:
        return 0.0
    if x < 10.0:
        return _A * x ** _B + _C
    return 0.5 * math.log(math.pi / x) - x / 4.0 + math.log1p(-10.0 / (7.0 * x))


def _inv_log_phi(y: float) -> float:
    if y >= 0:
        return 0.0
    if y >= _log_phi(10.0):
        return ((y - _C) / _A) ** (1.0 / _B)
    hi = 20.0
    while _log_phi(hi) > y:
        hi *= 2.0
    return brentq(lambda x: _log_phi(x) - y, 10.0, hi, xtol=1e-12, rtol=1e-14)


def _check_node_mean(m: float) -> float:
    lp = _log_phi(m)
    # 1 - (1 - phi)^2 = phi (2 - phi)
    return _inv_log_phi(lp + math.log(2.0 - math.exp(lp)))


def ga_means(n_c: int, design_snr_db: float) -> np.ndarray:
    """LLR means of the n_c bit-channels for BPSK at Es/N0 = design_snr_db."""
    m0 = 4.0 * 10.0 ** (design_snr_db / 10.0)
    means = [m0]
    size = 1
    while size < n_c:
        # index MSB selects the check (0) or variable (1) combination first
        means = [_check_node_mean(m) for m in means] + [2.0 * m for m in means]
        size *= 2
    # the list above is built LSB-first; reorder to natural index order
    n = n_c.bit_length() - 1
    out = np.empty(n_c)
    for k, m in enumerate(means):
        out[_bit_reverse(k, n)] = m
    return out


def _bit_reverse(k: int, n: int) -> int:
    r = 0
    for _ in range(n):
        r = (r << 1) | (k & 1)
        k >>= 1
    return r


def construct_frozen_set(n_c: int, B_c: int, design_snr_db: float = 2.0) -> np.ndarray:
    """Indices frozen to zero: the n_c - B_c least reliable bit-channels."""
    if not 0 <= B_c <= n_c:
        raise ValueError("need 0 <= B_c <= n_c")
    means = ga_means(n_c, design_snr_db)
    # most reliable first; equal means favour the larger index
    order = np.lexsort((-np.arange(n_c), -means))
    return np.sort(order[B_c:])


@dataclass(frozen=True)
class PolarCodeSpec:
    n_c: int
    B_c: int
    frozen_set: np.ndarray = field(repr=False)
    design_snr_db: float = 2.0

    def __post_init__(self):
        if self.n_c < 1 or self.n_c & (self.n_c - 1):
            raise ValueError("n_c must be a power of two")
        fs = np.asarray(self.frozen_set, dtype=np.int64)
        if len(fs) != self.n_c - self.B_c or len(np.unique(fs)) != len(fs):
            raise ValueError("frozen set must hold n_c - B_c distinct indices")
        if len(fs) and (fs.min() < 0 or fs.max() >= self.n_c):
            raise ValueError("frozen index out of range")

    @classmethod
    def build(cls, n_c: int, B_c: int, design_snr_db: float = 2.0) -> "PolarCodeSpec":
        return cls(n_c, B_c, construct_frozen_set(n_c, B_c, design_snr_db), design_snr_db)

    @property
    def frozen_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_c, dtype=np.uint8)
        mask[self.frozen_set] = 1
        return mask

    @property
    def info_set(self) -> np.ndarray:
        return np.flatnonzero(self.frozen_mask == 0)


@lru_cache(maxsize=8)
def polar_code(n_c: int, B_c: int, design_snr_db: float = 2.0) -> PolarCodeSpec:
    return PolarCodeSpec.build(n_c, B_c, design_snr_db)


def polar_encode(u_info, spec: PolarCodeSpec) -> np.ndarray:
    """Codeword(s) for B_c information bits per row (frozen positions are zero)."""
    u_info = np.asarray(u_info, dtype=np.uint8)
    if u_info.shape[-1] != spec.B_c:
        raise ValueError(f"expected {spec.B_c} information bits, got {u_info.shape[-1]}")
    u = np.zeros(u_info.shape[:-1] + (spec.n_c,), dtype=np.uint8)
    u[..., spec.info_set] = u_info
    return polar_transform(u)


def scl_decode(llr, spec: PolarCodeSpec, crc: CrcSpec = CrcSpec(), list_size: int = 8):
    """CRC-aided SCL decoding; positive LLR favours bit 0.

    Returns ``(m_s, passed, metric)``: the best-metric list path whose CRC
    checks, else the best-metric path with ``passed=False``. Lower
    metrics are better.
    """
    llr = np.asarray(llr, dtype=np.float64)
    if llr.shape != (spec.n_c,):
        raise ValueError(f"expected {spec.n_c} LLRs")
    if list_size < 1:
        raise ValueError("list_size must be >= 1")
    u_hat, metrics = scl_decode_paths(llr, spec.frozen_mask, int(list_size))
    words = u_hat[:, spec.info_set]
    ok = crc_check(words, crc)
    hit = int(np.argmax(ok)) if ok.any() else 0
    return words[hit, : spec.B_c - crc.width].copy(), bool(ok[hit]), float(metrics[hit])
