"""Simulator configuration and its YAML representation.

A config file looks like::

    name: niz-statistic
    mode: niz                  # baseline | niz | nfv
    saturate_counters: false   # 12-bit saturating interval counters
    geometry: {num_banks: 64, bank_capacity: 131072, associativity: 8}
    policy: {name: statistic, interval_cycles: 64000000, n_off_max: 16}
    energy: {leak_bank_per_cycle: 1.0, e_mem: 20.0}
    tsv: {enabled: true, num_tiles: 16}
    trace: traces/vips.trace   # or `workload:` (a WorkloadSpec mapping or a file holding one)
    fv_table: fv.txt           # NFV only; `auto` profiles the trace itself

Relative paths are resolved against the directory holding the config file.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .cache import CacheGeometry, Mode
from .energy import EnergyParams
from .errors import ConfigError
from .policy import PolicyConfig, PolicyName
from .trace import WorkloadSpec

AUTO = "auto"


@dataclass
class TsvConfig:
    enabled: bool = True
    num_tiles: int = 16
    width: int = 3
    num_wires: int = 128
    c_base: float = 1.0
    c1: float = 1.0
    c2: float = 0.5
    r: float = 1.0
    c_c_ratio: float = 5.54
    c_d_ratio: float = 1.385
    fixed_coupling_ratio: bool = False

    def __post_init__(self):
        if self.num_tiles <= 0:
            raise ConfigError("tsv.num_tiles must be positive")
        if self.num_wires % 8 or 512 % self.num_wires:
            raise ConfigError("tsv.num_wires must be a multiple of 8 dividing 512")


@dataclass
class SimConfig:
    geometry: CacheGeometry = field(default_factory=CacheGeometry)
    mode: Mode = Mode.BASELINE
    policy: PolicyName = PolicyName.NONE
    policy_cfg: PolicyConfig = field(default_factory=PolicyConfig)
    energy: EnergyParams = field(default_factory=EnergyParams)
    tsv: TsvConfig = field(default_factory=TsvConfig)
    trace_path: Path | None = None
    workload: WorkloadSpec | None = None
    fv_table_path: Path | str | None = None
    saturate_counters: bool = False
    name: str = ""

    def __post_init__(self):
        self.mode = Mode(self.mode)
        self.policy = PolicyName(self.policy)

    def validate(self, require_source: bool = True) -> None:
        if require_source and (self.trace_path is None) == (self.workload is None):
            raise ConfigError("exactly one of `trace` and `workload` must be given")
        if self.mode is Mode.NFV and self.fv_table_path is None:
            raise ConfigError("NFV mode needs `fv_table` (a path or `auto`)")
        if self.fv_table_path is not None and self.fv_table_path != AUTO:
            if not Path(self.fv_table_path).is_file():
                raise ConfigError(f"FV table {self.fv_table_path} does not exist")
        if self.trace_path is not None and not Path(self.trace_path).is_file():
            raise ConfigError(f"trace {self.trace_path} does not exist")
        if self.tsv.num_tiles > self.geometry.num_banks or self.geometry.num_banks % self.tsv.num_tiles:
            raise ConfigError("tsv.num_tiles must divide num_banks")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "mode": self.mode.value,
            "saturate_counters": self.saturate_counters,
            "geometry": {
                "num_banks": self.geometry.num_banks,
                "bank_capacity": self.geometry.bank_capacity,
                "associativity": self.geometry.associativity,
            },
            "policy": {"name": self.policy.value, **asdict(self.policy_cfg)},
            "energy": asdict(self.energy),
            "tsv": asdict(self.tsv),
            "trace": None if self.trace_path is None else str(self.trace_path),
            "fv_table": None if self.fv_table_path is None else str(self.fv_table_path),
        }


def _build(cls, d: dict | None, section: str):
    d = dict(d or {})
    known = {f.name for f in fields(cls)}
    extra = set(d) - known
    if extra:
        raise ConfigError(f"unknown keys in `{section}`: {sorted(extra)}")
    try:
        return cls(**d)
    except TypeError as exc:
        raise ConfigError(f"bad `{section}` section: {exc}") from None


_TOP_KEYS = {
    "name", "mode", "saturate_counters", "geometry", "policy", "energy", "tsv",
    "trace", "workload", "fv_table",
}


def config_from_dict(d: dict, base_dir: str | os.PathLike | None = None) -> SimConfig:
    if not isinstance(d, dict):
        raise ConfigError("config must be a mapping")
    extra = set(d) - _TOP_KEYS
    if extra:
        raise ConfigError(f"unknown top-level config keys: {sorted(extra)}")
    base = Path(base_dir) if base_dir is not None else Path.cwd()

    def resolve(p):
        if p is None or p == AUTO:
            return p
        p = Path(p)
        return p if p.is_absolute() else base / p

    policy = dict(d.get("policy") or {})
    name = policy.pop("name", "none")
    try:
        mode = Mode(str(d.get("mode", "baseline")).lower())
        policy_name = PolicyName(str(name).lower())
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    workload = d.get("workload")
    if isinstance(workload, str):
        workload = load_workload(resolve(workload))
    elif workload is not None:
        workload = WorkloadSpec.from_dict(workload)
    cfg = SimConfig(
        geometry=_build(CacheGeometry, d.get("geometry"), "geometry"),
        mode=mode,
        policy=policy_name,
        policy_cfg=_build(PolicyConfig, policy, "policy"),
        energy=_build(EnergyParams, d.get("energy"), "energy"),
        tsv=_build(TsvConfig, d.get("tsv"), "tsv"),
        trace_path=resolve(d.get("trace")),
        workload=workload,
        fv_table_path=resolve(d.get("fv_table")),
        saturate_counters=bool(d.get("saturate_counters", False)),
        name=str(d.get("name", "")),
    )
    return cfg


def load_config(path: str | os.PathLike) -> SimConfig:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    cfg = config_from_dict(raw or {}, path.parent)
    if not cfg.name:
        cfg.name = path.stem
    return cfg


def load_workload(path: str | os.PathLike) -> WorkloadSpec:
    """Read a workload file: either a bare WorkloadSpec mapping or a config with `workload:`."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read workload {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"workload {path} is not valid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"workload {path} must be a mapping")
    if "workload" in raw:
        raw = raw["workload"]
    return WorkloadSpec.from_dict(raw)
