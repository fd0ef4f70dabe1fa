"""CPU fusion: sum the AP symbol estimates per codebook index and list-decode."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import index_bits
from .polar import CrcSpec, PolarCodeSpec, scl_decode


@dataclass
class CombinedEstimates:
    estimates: dict  # j -> (T,) complex
    support_count: dict  # j -> number of reporting APs


@dataclass
class RecoveredSet:
    messages: np.ndarray  # (K_hat, B) uint8
    indices: np.ndarray  # (K_hat,)
    metrics: np.ndarray  # (K_hat,)

    def __len__(self):
        return len(self.indices)

    def as_set(self) -> set:
        return {row.tobytes() for row in self.messages}


def combine(payloads, normalize: bool = False) -> CombinedEstimates:
    """Unweighted per-index sum of AP estimates (optionally averaged over reporters)."""
    est: dict = {}
    count: dict = {}
    for p in payloads:
        for col, j in enumerate(np.asarray(p.S_m).tolist()):
            vec = p.symbol_estimates[:, col]
            if j in est:
                est[j] = est[j] + vec
                count[j] += 1
            else:
                est[j] = vec.copy()
                count[j] = 1
    if normalize:
        est = {j: v / count[j] for j, v in est.items()}
    return CombinedEstimates(est, count)


def llr_from_symbols(s) -> np.ndarray:
    """QPSK soft demapping, 2T LLRs interleaved as (I_0, Q_0, I_1, Q_1, ...)."""
    s = np.asarray(s)
    out = np.empty(s.shape[:-1] + (2 * s.shape[-1],))
    out[..., 0::2] = np.sqrt(2.0) * s.real
    out[..., 1::2] = np.sqrt(2.0) * s.imag
    return out


def decode_all(combined: CombinedEstimates, code: PolarCodeSpec, K_cap: int, B_f: int,
               list_size: int = 8, crc: CrcSpec = CrcSpec()) -> RecoveredSet:
    """Decode every reported index and keep CRC-passing messages.

    A message is the index's B_f prefix bits followed by the decoded
    payload. Above ``K_cap`` survivors, the lowest path metrics win.
    """
    B_s = code.B_c - crc.width
    kept_idx, kept_msg, kept_metric = [], [], []
    for j in sorted(combined.estimates):
        m_s, ok, metric = scl_decode(llr_from_symbols(combined.estimates[j]), code, crc,
                                     list_size)
        if ok:
            kept_idx.append(j)
            kept_msg.append(np.concatenate([index_bits(j, B_f), m_s]))
            kept_metric.append(metric)
    if not kept_idx:
        return RecoveredSet(np.zeros((0, B_f + B_s), dtype=np.uint8),
                            np.zeros(0, dtype=np.int64), np.zeros(0))
    idx = np.array(kept_idx, dtype=np.int64)
    msgs = np.array(kept_msg, dtype=np.uint8)
    metrics = np.array(kept_metric)
    if len(idx) > K_cap:
        best = np.sort(np.argsort(metrics, kind="stable")[:K_cap])
        idx, msgs, metrics = idx[best], msgs[best], metrics[best]
    return RecoveredSet(msgs, idx, metrics)
