"""Per-AP processing: OMP pilot detection with LS channel estimates, then LMMSE."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .codec import Codebooks

log = logging.getLogger(__name__)

LS_RCOND = 1e-10


@dataclass
class ApPayload:
    """What one AP forwards to the CPU.

    Column ``r`` of ``symbol_estimates`` belongs to codebook index
    ``S_m[r]``.
    """

    S_m: np.ndarray  # (R,) int
    symbol_estimates: np.ndarray  # (T, R) complex
    G_hat: np.ndarray  # (R, N) complex
    diagnostics: dict = field(default_factory=dict)


def ls_channel(Y_p: np.ndarray, pilots_S: np.ndarray, P: float):
    """Least-squares G over the selected pilots; returns (G_hat, rank)."""
    sol, _, rank, _ = np.linalg.lstsq(pilots_S, Y_p, rcond=LS_RCOND)
    return sol / np.sqrt(P), int(rank)


class _OmpState:
    """Selected support plus an orthonormal basis of its pilot span.

    ``corr`` (stored N x J) always equals (P^H Y_resid)^T where Y_resid is
    the LS residual of Y_p on the selected pilots. A new pilot adds one
    orthonormal direction q, and the residual correlations drop by the
    rank-one term (P^H q)(q^H Y_p).
    """

    def __init__(self, Y_p, corr0, n_p):
        self.Y_p = Y_p
        self.corr = np.ascontiguousarray(corr0.T, dtype=np.complex128)
        self.support: list[int] = []
        self.Q = np.zeros((n_p, 0), dtype=np.complex128)
        self.rank_deficient = 0

    def energy(self) -> np.ndarray:
        v = self.corr.view(np.float64)
        e = np.einsum("nj,nj->j", v, v)
        return e[0::2] + e[1::2]

    def select(self) -> int:
        energy = self.energy()
        energy[self.support] = -1.0
        j = int(np.argmax(energy))
        self.support.append(j)
        return j

    def new_direction(self, p):
        """Orthonormalize pilot ``p`` against the basis (CGS with one re-pass)."""
        v = p.copy()
        for _ in range(2):
            v -= self.Q @ (self.Q.conj().T @ v)
        norm = np.linalg.norm(v)
        if norm <= 1e-10 * np.linalg.norm(p):
            self.rank_deficient += 1
            return None
        q = v / norm
        self.Q = np.column_stack([self.Q, q])
        return q

    def downdate(self, q, PHq) -> None:
        qY = q.conj() @ self.Y_p
        self.corr -= qY[:, None] * PHq[None, :]


def omp_detect_many(Y_ps, cb: Codebooks, budgets, P: float, check_residual=False):
    """OMP at several APs in lockstep.

    Each AP runs exactly ``budgets[m]`` iterations of: energy detection
    over unselected pilots (ties to the smallest index), LS refit over the
    whole support, residual update. Running APs side by side only batches
    the correlation GEMMs. Residual correlations are maintained through an
    orthonormal basis of the selected pilots, which yields the residual of
    the joint LS refit at O(J N) cost per iteration; the returned channel
    estimate is the joint LS solution over the final support.
    Returns a list of ``(S_m, G_hat, diagnostics)``.
    """
    Y_ps = [np.asarray(Y, dtype=np.complex128) for Y in Y_ps]
    widths = [Y.shape[1] for Y in Y_ps]
    C0 = cb.correlate(np.concatenate(Y_ps, axis=1))
    splits = np.cumsum([0] + widths)
    states = [_OmpState(Y, C0[:, splits[m]:splits[m + 1]], cb.n_p) for m, Y in enumerate(Y_ps)]
    del C0
    sqrtP = np.sqrt(P)
    norms = [[float(np.linalg.norm(Y))] for Y in Y_ps]

    for it in range(max(budgets, default=0)):
        active = [m for m in range(len(Y_ps)) if it < budgets[m]]
        picks = [states[m].select() for m in active]
        pilots = cb.pilots(picks)
        dirs = [(m, states[m].new_direction(pilots[:, k])) for k, m in enumerate(active)]
        dirs = [(m, q) for m, q in dirs if q is not None]
        if dirs:
            PHQ = cb.correlate(np.column_stack([q for _, q in dirs]))
            for k, (m, q) in enumerate(dirs):
                states[m].downdate(q, PHQ[:, k])
        if check_residual:
            for m in active:
                S = states[m].support
                G, _ = ls_channel(Y_ps[m], cb.pilots(S), P)
                resid = Y_ps[m] - cb.pilots(S) @ (sqrtP * G)
                norms[m].append(float(np.linalg.norm(resid)))

    out = []
    for m, st in enumerate(states):
        S = np.array(st.support, dtype=np.int64)
        if len(S):
            G, rank = ls_channel(Y_ps[m], cb.pilots(S), P)
        else:
            G, rank = np.zeros((0, widths[m]), dtype=np.complex128), 0
        if st.rank_deficient or rank < len(S):
            log.debug("AP %d: rank-deficient pilot set (%d of %d)", m, rank, len(S))
        diag = {"rank_deficient": st.rank_deficient, "residual_norms": norms[m]}
        out.append((S, G, diag))
    return out


def omp_detect(Y_p, cb: Codebooks, R_m: int, P: float, check_residual=False):
    """Single-AP OMP; returns ``(S_m, G_hat)``."""
    if R_m < 1:
        raise ValueError("R_m must be >= 1")
    S, G, _ = omp_detect_many([Y_p], cb, [R_m], P, check_residual)[0]
    return S, G


def build_B_hat(A_S: np.ndarray, G_hat: np.ndarray, P: float) -> np.ndarray:
    """Stack A[:, S] diag(sqrt(P) G_hat[:, n]) over antennas n -> (L*N, R)."""
    scaled = np.sqrt(P) * G_hat  # (R, N)
    return np.concatenate([A_S * scaled[:, n][None, :] for n in range(G_hat.shape[1])], axis=0)


def stack_data(Y_d: np.ndarray, L: int) -> np.ndarray:
    """Columns are y~_t: antenna n's chips (t-1)L..tL-1 stacked over n -> (L*N, T)."""
    TL, N = Y_d.shape
    return Y_d.reshape(TL // L, L, N).transpose(2, 1, 0).reshape(N * L, TL // L)


def lmmse_estimate(Y_d, S_m, G_hat, cb: Codebooks, P: float, sigma2: float) -> np.ndarray:
    """r_t = B^H (B B^H + sigma2 I)^{-1} y~_t for every symbol time; returns (T, R).

    Evaluated as (B^H B + sigma2 I)^{-1} B^H, which is the same matrix and
    needs only an R x R solve shared by all T symbol times.
    """
    B = build_B_hat(cb.A[:, np.asarray(S_m, dtype=np.int64)], np.asarray(G_hat), P)
    R = B.shape[1]
    BH = B.conj().T
    W = np.linalg.solve(BH @ B + sigma2 * np.eye(R), BH)
    return (W @ stack_data(np.asarray(Y_d), cb.L)).T


def process_aps(Y_list, cb: Codebooks, n_p: int, budget: int, P: float, sigma2: float,
                check_residual=False) -> list[ApPayload]:
    """Run every AP on its n x N received block (pilot rows first)."""
    dets = omp_detect_many([Y[:n_p] for Y in Y_list], cb, [budget] * len(Y_list), P,
                           check_residual)
    out = []
    for Y, (S, G, diag) in zip(Y_list, dets):
        est = lmmse_estimate(Y[n_p:], S, G, cb, P, sigma2)
        out.append(ApPayload(S, est, G, diag))
    return out


def ap_process(Y_m, cb: Codebooks, config, budget: int | None = None) -> ApPayload:
    if budget is None:
        budget = config.R_m
    return process_aps([Y_m], cb, config.n_p, budget, config.P, config.sigma2)[0]
