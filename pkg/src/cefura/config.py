"""Simulation parameters, config-file loading and seed derivation."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib


class ConfigError(ValueError):
    """Inconsistent or invalid simulation configuration."""


PP_KINDS = ("binomial", "poisson", "thomas", "matern")
SMALL_SCALE_MODELS = ("iid", "ula_los")


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


@dataclass(frozen=True)
class PointProcessSpec:
    """UE placement model.

    ``c`` is the mean parent (cluster) count and ``scatter`` the Thomas
    standard deviation or the Matern disk radius, in meters. The daughter
    mean ``tau`` follows from the target density as ``mu / c``.
    """

    kind: str = "binomial"
    c: float = 25.0
    scatter: float | None = None

    def __post_init__(self):
        if self.kind not in PP_KINDS:
            raise ConfigError(f"unknown point process kind {self.kind!r}")
        if self.kind in ("thomas", "matern"):
            if self.c < 1:
                raise ConfigError("cluster processes need c >= 1")
            if self.spread <= 0:
                raise ConfigError("cluster scatter must be positive")

    @property
    def spread(self) -> float:
        if self.scatter is not None:
            return float(self.scatter)
        return 40.0 if self.kind == "thomas" else 60.0

    @property
    def is_random_count(self) -> bool:
        return self.kind != "binomial"

    def tau(self, mu: float) -> float:
        if self.kind == "poisson":
            return 1.0
        if self.kind == "binomial":
            return 1.0
        return mu / self.c

    def clusters(self, mu: float) -> float:
        if self.kind in ("poisson", "binomial"):
            return mu
        return self.c


@dataclass(frozen=True)
class SystemConfig:
    """Every scalar of the simulation.

    Defaults reproduce the reference parameter table: n = 640 + 256*10 =
    3200 channel uses, R_m = 7, P = 10 mW and sigma2 = -84 dBm. Powers are
    linear milliwatts. ``K`` doubles as the mean density for random-count
    point processes.
    """

    K: int = 150
    M: int = 100
    N: int = 1
    D: float = 650.0
    n_p: int = 640
    L: int = 10
    n_c: int = 512
    B: int = 100
    B_f: int = 15
    B_crc: int = 16
    R_m: int = 7
    P: float = 10.0
    sigma2: float = dbm_to_mw(-84.0)
    list_size: int = 8
    design_snr_db: float = 2.0
    small_scale: str = "iid"
    seed: int = 0
    codebook_seed: int = 2023
    point_process: PointProcessSpec = field(default_factory=PointProcessSpec)
    exclusion_radius: float = 1.0
    # test hooks: unit large-scale gains, collision-free prefixes
    force_unit_beta: bool = False
    distinct_prefixes: bool = False
    normalize_combining: bool = False
    label: str | None = None

    def __post_init__(self):
        self.validate()

    # derived quantities
    @property
    def T(self) -> int:
        return self.n_c // 2

    @property
    def n(self) -> int:
        return self.n_p + self.T * self.L

    @property
    def J(self) -> int:
        return 1 << self.B_f

    @property
    def B_s(self) -> int:
        return self.B - self.B_f

    @property
    def B_c(self) -> int:
        return self.B_s + self.B_crc

    @property
    def centralized(self) -> bool:
        return self.M == 1

    @property
    def config_label(self) -> str:
        if self.label:
            return self.label
        return f"({self.M},{self.N})-{self.D:g}m"

    def recovery_budget(self, k_realized: int) -> int:
        """Per-AP recovery budget; a lone AP recovers every active user."""
        budget = k_realized if self.centralized else self.R_m
        return max(1, min(budget, self.J))

    def validate(self) -> None:
        ints = ("K", "M", "N", "n_p", "L", "n_c", "B", "B_f", "B_crc", "R_m", "list_size")
        for name in ints:
            if int(getattr(self, name)) != getattr(self, name):
                raise ConfigError(f"{name} must be an integer")
        if self.M < 1 or self.N < 1 or self.n_p < 1 or self.L < 1:
            raise ConfigError("M, N, n_p and L must be positive")
        if self.K < 0:
            raise ConfigError("K must be non-negative")
        if self.n_c < 2 or self.n_c & (self.n_c - 1):
            raise ConfigError("n_c must be a power of two >= 2")
        if not 0 < self.B_f < self.B:
            raise ConfigError("need 0 < B_f < B")
        if self.B_c > self.n_c:
            raise ConfigError(f"B_s + B_crc = {self.B_c} exceeds n_c = {self.n_c}")
        if self.B_crc != 16:
            raise ConfigError("only the 16-bit CRC is supported")
        if not (self.P > 0 and self.sigma2 > 0 and self.D > 0):
            raise ConfigError("P, sigma2 and D must be positive")
        if self.R_m < 1 or self.list_size < 1:
            raise ConfigError("R_m and list_size must be >= 1")
        if math.isqrt(self.M) ** 2 != self.M:
            raise ConfigError(f"M = {self.M} is not a perfect square (grid placement)")
        if self.small_scale not in SMALL_SCALE_MODELS:
            raise ConfigError(f"unknown small_scale model {self.small_scale!r}")
        if not self.centralized and self.K > self.M * self.R_m:
            raise ConfigError(
                f"K = {self.K} exceeds M*R_m = {self.M * self.R_m}; add APs"
            )
        if self.distinct_prefixes and self.K > self.J:
            raise ConfigError("distinct prefixes need K <= J")

    def replace(self, **changes) -> "SystemConfig":
        if "point_process" in changes and isinstance(changes["point_process"], dict):
            changes["point_process"] = PointProcessSpec(**changes["point_process"])
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, PointProcessSpec):
                value = {k: v for k, v in dataclasses.asdict(value).items() if v is not None}
            if value is None:
                continue
            out[f.name] = value
        return out


_DERIVED = {"n": "n", "T": "T", "J": "J", "B_s": "B_s", "B_c": "B_c"}


def config_from_dict(raw: dict) -> SystemConfig:
    """Build a config from a flat or sectioned mapping.

    Derived keys (n, T, J, B_s, B_c) may be present; they are checked
    against the values implied by the primary keys. ``P_dbm`` and
    ``sigma2_dbm`` are accepted as alternatives to the linear powers.
    """
    data = {}
    for key, value in raw.items():
        if key in ("system", "simulation") and isinstance(value, dict):
            data.update(value)
        else:
            data[key] = value
    derived = {k: data.pop(k) for k in list(data) if k in _DERIVED}
    if "P_dbm" in data:
        data["P"] = dbm_to_mw(float(data.pop("P_dbm")))
    if "sigma2_dbm" in data:
        data["sigma2"] = dbm_to_mw(float(data.pop("sigma2_dbm")))
    data.pop("sweep", None)
    pp = data.pop("point_process", {})
    if isinstance(pp, str):
        pp = {"kind": pp}
    known = {f.name for f in fields(SystemConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        cfg = SystemConfig(point_process=PointProcessSpec(**pp), **data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    for key, value in derived.items():
        if getattr(cfg, _DERIVED[key]) != value:
            raise ConfigError(f"{key} = {value} inconsistent with primary parameters")
    return cfg


def load_config(path: str | Path) -> tuple[SystemConfig, dict]:
    """Read a TOML config; returns the config and the optional [sweep] table."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return config_from_dict(raw), raw.get("sweep", {})


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based stream for one trial.

    The stream depends only on ``(seed, trial_index)`` through numpy's
    SeedSequence spawn key, so any trial can be replayed on its own and
    workers never share state.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trial_index),))
    return np.random.default_rng(ss)
