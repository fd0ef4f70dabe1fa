"""Monte-Carlo orchestration: trials, error metrics and CSV sweeps."""
from __future__ import annotations

import csv
import itertools
import logging
import math
import multiprocessing as mp
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ap import process_aps
from .channel import complex_noise, large_scale, realize_channels
from .codec import cached_codebooks, encode_messages
from .config import ConfigError, PointProcessSpec, SystemConfig, trial_rng
from .cpu import combine, decode_all
from .geometry import place_aps_grid, random_messages, sample_ues
from .polar import polar_code

log = logging.getLogger(__name__)

CSV_COLUMNS = ["config_label", "M", "N", "D", "pp_kind", "K_or_mu", "trials",
               "Pmd", "Pfa", "Pe", "Pe_ci95", "mean_runtime_ms"]


@dataclass(frozen=True)
class TrialResult:
    K: int
    K_hat: int
    n_ms: int
    n_fa: int
    runtime_ms: float = 0.0

    @property
    def fa_ratio(self) -> float:
        return self.n_fa / self.K_hat if self.K_hat else 0.0

    @property
    def md_ratio(self) -> float:
        return self.n_ms / self.K if self.K else 0.0

    @property
    def error_rate(self) -> float:
        return self.md_ratio + self.fa_ratio


@dataclass(frozen=True)
class MetricsAccumulator:
    trials: int
    sum_ms_over_K: float
    sum_fa_ratio: float
    sum_sq_pe: float
    mean_runtime_ms: float

    @property
    def P_md(self) -> float:
        return self.sum_ms_over_K / self.trials

    @property
    def P_fa(self) -> float:
        return self.sum_fa_ratio / self.trials

    @property
    def P_e(self) -> float:
        return self.P_md + self.P_fa

    @property
    def Pe_ci95(self) -> float:
        """Normal-approximation 95% half-width of the mean per-trial error rate."""
        if self.trials < 2:
            return 0.0
        mean = self.P_e
        var = max(self.sum_sq_pe / self.trials - mean * mean, 0.0) * self.trials / (self.trials - 1)
        return 1.96 * math.sqrt(var / self.trials)


def compute_metrics(results) -> MetricsAccumulator:
    results = list(results)
    if not results:
        raise ValueError("no trial results")
    # math.fsum keeps the reduction independent of summation order
    return MetricsAccumulator(
        trials=len(results),
        sum_ms_over_K=math.fsum(r.md_ratio for r in results),
        sum_fa_ratio=math.fsum(r.fa_ratio for r in results),
        sum_sq_pe=math.fsum(r.error_rate ** 2 for r in results),
        mean_runtime_ms=math.fsum(r.runtime_ms for r in results) / len(results),
    )


def count_errors(transmitted: np.ndarray, recovered: np.ndarray) -> tuple[int, int]:
    """(misses, false alarms) under exact B-bit matching."""
    tx = {row.tobytes() for row in transmitted}
    rx = {row.tobytes() for row in recovered}
    n_ms = sum(1 for row in transmitted if row.tobytes() not in rx)
    n_fa = sum(1 for key in rx if key not in tx)
    return n_ms, n_fa


def _deploy(cfg: SystemConfig, rng):
    aps = place_aps_grid(cfg.M, cfg.D)
    while True:
        ues = sample_ues(cfg.point_process, cfg.K, cfg.D, rng, aps, cfg.exclusion_radius)
        if len(ues):
            return aps, ues


def run_trial(cfg: SystemConfig, trial_index: int, codebooks=None, details=False):
    """One independent slot: deploy, encode, propagate, detect, decode, score."""
    t0 = time.perf_counter()
    rng = trial_rng(cfg.seed, trial_index)
    cb = codebooks or cached_codebooks(cfg.codebook_seed, cfg.J, cfg.n_p, cfg.L)
    code = polar_code(cfg.n_c, cfg.B_c, cfg.design_snr_db)

    aps, ues = _deploy(cfg, rng)
    K = len(ues)
    messages = random_messages(K, cfg.B, cfg.B_f, rng, cfg.distinct_prefixes)
    ls = large_scale(ues, aps, rng, unit_beta=cfg.force_unit_beta)
    chan = realize_channels(ls, cfg.N, cfg.small_scale, rng)
    X = encode_messages(messages, cb, code, cfg.P, cfg.B_f)
    Y = X.T @ chan.stacked()
    Y += complex_noise(Y.shape, cfg.sigma2, rng)
    Y_list = [Y[:, m * cfg.N:(m + 1) * cfg.N] for m in range(cfg.M)]

    payloads = process_aps(Y_list, cb, cfg.n_p, cfg.recovery_budget(K), cfg.P, cfg.sigma2)
    combined = combine(payloads, normalize=cfg.normalize_combining)
    recovered = decode_all(combined, code, K, cfg.B_f, cfg.list_size)
    n_ms, n_fa = count_errors(messages, recovered.messages)
    runtime = 1e3 * (time.perf_counter() - t0)
    rank_def = sum(p.diagnostics.get("rank_deficient", 0) for p in payloads)
    log.debug("trial %d: K=%d K_hat=%d n_ms=%d n_fa=%d decoded=%d rank_deficient=%d %.1f ms",
              trial_index, K, len(recovered), n_ms, n_fa, len(combined.estimates),
              rank_def, runtime)
    result = TrialResult(K, len(recovered), n_ms, n_fa, runtime)
    if details:
        return result, {"messages": messages, "recovered": recovered, "payloads": payloads,
                        "ue_positions": ues, "ap_positions": aps, "large_scale": ls}
    return result


# --- sweeps -----------------------------------------------------------------

AXES = ("K", "D", "MN", "pp_kind")
_AXIS_ALIASES = {"mu": "K", "k": "K", "d": "D", "mn": "MN", "pp": "pp_kind",
                 "point_process": "pp_kind", "kind": "pp_kind"}


def parse_axis(spec: str) -> tuple[str, list]:
    """``"K=75,100"`` / ``"MN=1x100,49x2"`` / ``"pp_kind=poisson,thomas"``."""
    if "=" not in spec:
        raise ConfigError(f"axis must look like NAME=v1,v2,...: {spec!r}")
    name, raw = spec.split("=", 1)
    return normalize_axis(name.strip(), [v.strip() for v in raw.split(",") if v.strip()])


def normalize_axis(name: str, values) -> tuple[str, list]:
    name = _AXIS_ALIASES.get(name, _AXIS_ALIASES.get(name.lower(), name))
    if name not in AXES:
        raise ConfigError(f"unknown sweep axis {name!r}; choose from {AXES}")
    if not values:
        raise ConfigError(f"axis {name} has no values")
    out = []
    for v in values:
        try:
            if name == "K":
                out.append(int(v))
            elif name == "D":
                out.append(float(v))
            elif name == "MN":
                if isinstance(v, (list, tuple)):
                    m, n = v
                else:
                    m, n = str(v).lower().split("x")
                out.append((int(m), int(n)))
            else:
                out.append(str(v).lower())
        except ValueError as exc:
            raise ConfigError(f"bad value {v!r} for axis {name}") from exc
    return name, out


def apply_axis(cfg: SystemConfig, name: str, value) -> SystemConfig:
    if name == "K":
        return cfg.replace(K=value)
    # a fixed label would hide the geometry that this axis varies
    if name == "D":
        return cfg.replace(D=value, label=None)
    if name == "MN":
        return cfg.replace(M=value[0], N=value[1], label=None)
    pp = cfg.point_process
    return cfg.replace(point_process=PointProcessSpec(value, pp.c, pp.scatter))


def sweep_points(cfg: SystemConfig, axes) -> list[SystemConfig]:
    """Cartesian product of the axes (first axis outermost), all validated up front."""
    if not axes:
        return [cfg]
    points = []
    for combo in itertools.product(*[values for _, values in axes]):
        point = cfg
        for (name, _), value in zip(axes, combo):
            point = apply_axis(point, name, value)
        points.append(point)
    return points


def _init_worker():
    try:
        from threadpoolctl import threadpool_limits
        threadpool_limits(1)
    except ImportError:
        pass


def _run_one(args):
    cfg, idx = args
    return run_trial(cfg, idx)


def run_trials(cfg: SystemConfig, trials: int, threads: int = 1, pool=None) -> list[TrialResult]:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    tasks = [(cfg, t) for t in range(trials)]
    if pool is None:
        return [_run_one(t) for t in tasks]
    chunk = max(1, trials // (4 * threads))
    return list(pool.map(_run_one, tasks, chunksize=chunk))


def csv_row(cfg: SystemConfig, metrics: MetricsAccumulator, timing=True) -> list[str]:
    g = lambda x: f"{x:.6g}"  # noqa: E731
    return [cfg.config_label,
            str(cfg.M), str(cfg.N), g(cfg.D), cfg.point_process.kind, str(cfg.K),
            str(metrics.trials), g(metrics.P_md), g(metrics.P_fa), g(metrics.P_e),
            g(metrics.Pe_ci95), g(metrics.mean_runtime_ms if timing else 0.0)]


def run_sweep(cfg: SystemConfig, axes, trials: int, out=None, threads: int = 1,
              timing: bool = True):
    """Run ``trials`` trials per axis point and write one CSV row per point.

    Trial ``t`` of every point uses the stream derived from
    ``(cfg.seed, t)``, so points share random numbers where their
    configurations allow and the table does not depend on ``threads``.
    Returns ``[(point_config, metrics), ...]``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    points = sweep_points(cfg, axes)
    for p in points:
        cached_codebooks(p.codebook_seed, p.J, p.n_p, p.L)

    rows = []
    pool = None
    try:
        if threads > 1:
            ctx = mp.get_context("fork")
            pool = ProcessPoolExecutor(max_workers=threads, mp_context=ctx,
                                       initializer=_init_worker)
        for p in points:
            t0 = time.perf_counter()
            results = run_trials(p, trials, threads, pool)
            metrics = compute_metrics(results)
            log.info("%s %s K=%d: Pe=%.4g (+-%.2g) over %d trials in %.1fs",
                     p.config_label, p.point_process.kind, p.K, metrics.P_e,
                     metrics.Pe_ci95, trials, time.perf_counter() - t0)
            rows.append((p, metrics))
    finally:
        if pool is not None:
            pool.shutdown()

    if out is not None:
        write_csv(out, rows, timing)
    return rows


def write_rows(fh, rows, timing=True) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for cfg, metrics in rows:
        w.writerow(csv_row(cfg, metrics, timing))


def write_csv(path, rows, timing=True) -> None:
    path = Path(path)
    try:
        if not path.parent.exists():
            path.parent.mkdir(parents=True)
        with path.open("w", newline="") as fh:
            write_rows(fh, rows, timing)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc
