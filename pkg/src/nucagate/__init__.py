"""Trace-driven NUCA LLC simulator with compression-aware bank power gating."""

from .cache import (
    AccessOutcome,
    BankState,
    CacheGeometry,
    IntervalCounters,
    Mode,
    NucaCache,
    OutcomeKind,
    ShadowCache,
    is_zero_line,
    map_address,
)
from .config import SimConfig, TsvConfig, load_config
from .energy import EnergyLedger, EnergyParams, EnergyReport, storage_overhead
from .errors import (
    ConfigError,
    ContractViolation,
    InvalidCodewordError,
    NucaError,
    TraceOrderError,
    TraceParseError,
)
from .fvcodec import FvTable, decode, encode, profile_frequent_values
from .policy import (
    OffMode,
    PolicyConfig,
    PolicyName,
    PowerDecision,
    PowerManager,
    apply_decision,
    compute_interval_stats,
    power_on,
    statistic_power_off,
    threshold_power_off,
)
from .simulator import RunResult, Simulator, compare, simulate
from .trace import (
    AccessRecord,
    Op,
    WorkloadSpec,
    generate_synthetic,
    hot_bank_skew,
    parse_trace,
    read_trace,
    save_trace,
    write_trace,
)
from .tsv import TransitionStats, TsvBundle, analytic_energy, delta, effective_capacitance, stream_energy

__version__ = "0.1.0"
