"""Large-scale gains, small-scale fading and the per-AP received signal."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

SHADOW_VAR_DB = 16.0
SHADOW_DECORR_M = 9.0


@dataclass(frozen=True)
class LargeScale:
    beta: np.ndarray  # (K, M) linear gains
    shadow_db: np.ndarray  # (K, M)


@dataclass(frozen=True)
class ChannelRealization:
    """Quasi-static channels; ``G[m]`` is K x N with rows sqrt(beta) * h."""

    G: list

    def stacked(self) -> np.ndarray:
        """All APs side by side, K x (M*N)."""
        return np.concatenate(self.G, axis=1)


def path_loss_db(d):
    """Urban-microcell gain at 2 GHz, in dB, for distance(s) in meters."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    out = -30.5 - 35.0 * np.log10(d)
    return float(out) if out.ndim == 0 else out


def shadow_covariance(ue_positions: np.ndarray) -> np.ndarray:
    diff = ue_positions[:, None, :] - ue_positions[None, :, :]
    dist = np.sqrt((diff ** 2).sum(-1))
    return SHADOW_VAR_DB * 2.0 ** (-dist / SHADOW_DECORR_M)


def sample_shadow_fading(ue_positions, M: int, rng) -> np.ndarray:
    """K x M shadowing in dB: UE-correlated per AP, independent across APs."""
    ue_positions = np.asarray(ue_positions, dtype=float)
    K = ue_positions.shape[0]
    cov = shadow_covariance(ue_positions)
    cov = 0.5 * (cov + cov.T)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        log.debug("shadow covariance not PD for K=%d, adding jitter", K)
        try:
            chol = np.linalg.cholesky(cov + 1e-9 * SHADOW_VAR_DB * np.eye(K))
        except np.linalg.LinAlgError as exc:
            raise FloatingPointError("shadow-fading covariance is not PSD") from exc
    return chol @ rng.standard_normal((K, M))


def large_scale(ue_positions, ap_positions, rng, unit_beta=False) -> LargeScale:
    K, M = len(ue_positions), len(ap_positions)
    if unit_beta:
        return LargeScale(np.ones((K, M)), np.zeros((K, M)))
    diff = np.asarray(ue_positions)[:, None, :] - np.asarray(ap_positions)[None, :, :]
    dist = np.sqrt((diff ** 2).sum(-1))
    shadow = sample_shadow_fading(ue_positions, M, rng)
    beta = 10.0 ** ((path_loss_db(dist) + shadow) / 10.0)
    return LargeScale(beta, shadow)


def array_response(phi: float, N: int) -> np.ndarray:
    """Half-wavelength ULA steering vector q(phi)."""
    return np.exp(1j * np.pi * np.arange(N) * np.sin(phi))


def sample_small_scale(K: int, N: int, model: str, rng) -> np.ndarray:
    if model == "iid":
        return (rng.standard_normal((K, N)) + 1j * rng.standard_normal((K, N))) / np.sqrt(2)
    if model == "ula_los":
        phi = rng.uniform(-np.pi / 2, np.pi / 2, size=K)
        theta = rng.uniform(0.0, 2 * np.pi, size=K)
        steer = np.exp(1j * np.pi * np.outer(np.sin(phi), np.arange(N)))
        return steer * np.exp(1j * theta)[:, None]
    raise ValueError(f"unknown small-scale model {model!r}")


def realize_channels(ls: LargeScale, N: int, model: str, rng) -> ChannelRealization:
    K, M = ls.beta.shape
    G = []
    for m in range(M):
        h = sample_small_scale(K, N, model, rng)
        G.append(np.sqrt(ls.beta[:, m])[:, None] * h)
    return ChannelRealization(G)


def complex_noise(shape, sigma2: float, rng) -> np.ndarray:
    scale = np.sqrt(sigma2 / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def apply_channel(tx_signals, G_m: np.ndarray, sigma2: float, rng) -> np.ndarray:
    """Y_m = sum_k x_k g_k^T + Z_m for one AP, returned as n x N."""
    X = np.asarray(tx_signals)
    if X.ndim == 1:
        X = X[None, :]
    G_m = np.asarray(G_m)
    if G_m.ndim == 1:
        G_m = G_m[:, None]
    if X.shape[0] != G_m.shape[0]:
        raise ValueError(f"{X.shape[0]} signals but channel has {G_m.shape[0]} rows")
    Y = X.T @ G_m
    if sigma2 > 0:
        Y = Y + complex_noise(Y.shape, sigma2, rng)
    return Y
