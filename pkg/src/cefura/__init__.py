"""Link-level Monte-Carlo simulator for cell-free unsourced random access.

Distributed access points detect pilots with OMP and estimate symbols
with LMMSE; a central unit sums the estimates per pilot index and runs a
CRC-aided polar list decoder.
"""
from ._kernels import BACKEND
from .ap import ApPayload, lmmse_estimate, omp_detect, process_aps
from .channel import large_scale, path_loss_db, shadow_covariance
from .codec import Codebooks, encode_messages, gen_codebooks
from .config import ConfigError, PointProcessSpec, SystemConfig, load_config
from .cpu import RecoveredSet, combine, decode_all
from .harness import TrialResult, compute_metrics, run_sweep, run_trial
from .polar import CrcSpec, PolarCodeSpec, crc_append, crc_check, polar_encode, scl_decode

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ApPayload", "Codebooks", "ConfigError", "CrcSpec", "PointProcessSpec",
    "PolarCodeSpec", "RecoveredSet", "SystemConfig", "TrialResult", "combine",
    "compute_metrics", "crc_append", "crc_check", "decode_all", "encode_messages",
    "gen_codebooks", "large_scale", "lmmse_estimate", "load_config", "omp_detect",
    "path_loss_db", "polar_encode", "process_aps", "run_sweep", "run_trial",
    "scl_decode", "shadow_covariance",
]
