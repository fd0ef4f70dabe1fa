"""AP grid placement and UE point processes on the square [0, D]^2."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ConfigError, PointProcessSpec


@dataclass(frozen=True)
class Deployment:
    ap_positions: np.ndarray  # (M, 2)
    ue_positions: np.ndarray  # (K, 2)
    messages: np.ndarray  # (K, B) uint8

    @property
    def K(self) -> int:
        return self.ue_positions.shape[0]

    @property
    def M(self) -> int:
        return self.ap_positions.shape[0]


def place_aps_grid(M: int, D: float) -> np.ndarray:
    """Centers of a sqrt(M) x sqrt(M) partition of the square, row-major in (i, j)."""
    side = math.isqrt(M)
    if M < 1 or side * side != M:
        raise ConfigError(f"M = {M} is not a perfect square")
    centers = (np.arange(side) + 0.5) * (D / side)
    ii, jj = np.meshgrid(centers, centers, indexing="ij")
    return np.column_stack([ii.ravel(), jj.ravel()])


def _too_close(points: np.ndarray, aps: np.ndarray | None, radius: float) -> np.ndarray:
    if aps is None or radius <= 0 or len(points) == 0:
        return np.zeros(len(points), dtype=bool)
    d2 = ((points[:, None, :] - aps[None, :, :]) ** 2).sum(-1)
    return (d2 < radius * radius).any(axis=1)


def _uniform(count: int, D: float, rng, aps=None, radius=0.0) -> np.ndarray:
    pts = rng.uniform(0.0, D, size=(count, 2))
    bad = _too_close(pts, aps, radius)
    while bad.any():
        pts[bad] = rng.uniform(0.0, D, size=(int(bad.sum()), 2))
        bad = _too_close(pts, aps, radius)
    return pts


def _daughters(center, count, spec: PointProcessSpec, D, rng, aps, radius):
    """Cluster offsets around ``center``; out-of-square or near-AP draws are redrawn."""
    out = np.empty((count, 2))
    todo = np.arange(count)
    while todo.size:
        if spec.kind == "thomas":
            offs = rng.normal(0.0, spec.spread, size=(todo.size, 2))
        else:
            r = spec.spread * np.sqrt(rng.uniform(size=todo.size))
            theta = rng.uniform(0.0, 2 * np.pi, size=todo.size)
            offs = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        pts = center + offs
        ok = ((pts >= 0) & (pts <= D)).all(axis=1) & ~_too_close(pts, aps, radius)
        out[todo[ok]] = pts[ok]
        todo = todo[~ok]
    return out


def sample_ues(spec: PointProcessSpec, K_or_mu: float, D: float, rng,
               ap_positions=None, exclusion_radius: float = 0.0) -> np.ndarray:
    """Draw UE positions; the realized count is ``len(result)``.

    Binomial places exactly ``K_or_mu`` points. Poisson draws the count
    from Poisson(mu). Thomas and Matern draw Poisson(c) parents uniformly
    in the square and Poisson(mu / c) daughters around each parent.
    Points closer than ``exclusion_radius`` to an AP are redrawn.
    """
    if spec.kind == "binomial":
        return _uniform(int(K_or_mu), D, rng, ap_positions, exclusion_radius)
    if spec.kind == "poisson":
        return _uniform(int(rng.poisson(K_or_mu)), D, rng, ap_positions, exclusion_radius)
    parents = rng.uniform(0.0, D, size=(int(rng.poisson(spec.c)), 2))
    counts = rng.poisson(spec.tau(K_or_mu), size=len(parents))
    clusters = [
        _daughters(p, int(c), spec, D, rng, ap_positions, exclusion_radius)
        for p, c in zip(parents, counts)
    ]
    if not clusters:
        return np.empty((0, 2))
    return np.concatenate(clusters, axis=0)


def random_messages(K: int, B: int, B_f: int, rng, distinct_prefixes=False) -> np.ndarray:
    """Uniform B-bit messages, optionally with pairwise distinct B_f-bit prefixes."""
    bits = rng.integers(0, 2, size=(K, B), dtype=np.uint8)
    if distinct_prefixes:
        idx = rng.choice(1 << B_f, size=K, replace=False)
        shifts = np.arange(B_f - 1, -1, -1)
        bits[:, :B_f] = (idx[:, None] >> shifts) & 1
    return bits
