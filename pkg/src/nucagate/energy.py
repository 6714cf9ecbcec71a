"""Energy accounting: static, dynamic, overhead and interconnect components.

The default parameter values are dimensionless placeholders chosen only so
that the components have sensible relative sizes.  They are NOT physical;
plug in CACTI/McPAT numbers for a real study.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import NamedTuple

from .cache import (
    HIT_COMPRESSED,
    HIT_INVALID_SLOT,
    HIT_UNCOMPRESSED,
    MISS,
    OFF_BANK_COMPRESSED_HIT,
    OFF_BANK_MISS,
    AccessOutcome,
    CacheGeometry,
    Migration,
    Mode,
    Writeback,
)
from .errors import ConfigError
from .trace import INVALIDATE, READ

EDP_DELAY_BASIS = "total simulated cycles (trace-driven, no IPC model)"


@dataclass
class EnergyParams:
    leak_bank_per_cycle: float = 1.0
    leak_sidecar_per_cycle: float = 0.02
    leak_counters_per_cycle: float = 0.001
    e_read: float = 1.0
    e_write: float = 1.0
    e_flag: float = 0.1
    e_mem: float = 20.0
    e_migrate_line: float = 2.0
    vdd: float = 1.0
    c_load: float = 0.001

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or v < 0 or math.isnan(v):
                raise ConfigError(f"energy parameter {f.name}={v!r} must be non-negative")


class IntervalTick(NamedTuple):
    """Leakage for ``cycles`` cycles with ``on_banks`` of ``num_banks`` powered."""

    cycles: int
    on_banks: int
    num_banks: int
    sidecar: bool = False
    counters: bool = False


@dataclass
class EnergyReport:
    static_energy: float
    dynamic_energy: float
    overhead_energy: float
    interconnect_energy: float
    cycles: int

    @property
    def total(self) -> float:
        return self.static_energy + self.dynamic_energy + self.overhead_energy + self.interconnect_energy

    @property
    def edp(self) -> float:
        return self.total * self.cycles

    def as_dict(self) -> dict:
        d = asdict(self)
        d["total_energy"] = self.total
        d["edp"] = self.edp
        d["edp_delay_basis"] = EDP_DELAY_BASIS
        return d


class EnergyLedger:
    def __init__(self, params: EnergyParams | None = None):
        self.params = params or EnergyParams()
        self.static = 0.0
        self.dynamic = 0.0
        self.overhead = 0.0
        self.interconnect = 0.0
        self.cycles = 0

    def components(self) -> tuple[float, float, float, float]:
        return (self.static, self.dynamic, self.overhead, self.interconnect)

    def charge_access(self, outcome: AccessOutcome, extra: bool = False) -> None:
        """Charge one LLC request.  ``extra`` marks a miss a never-gated cache would have hit."""
        p = self.params
        op = outcome.op
        if op is INVALIDATE:
            self.dynamic += p.e_flag
            return
        kind = outcome.kind
        store = p.e_flag if outcome.compressed else p.e_write
        if kind is HIT_UNCOMPRESSED:
            self.dynamic += p.e_read if op is READ else store
        elif kind is HIT_COMPRESSED or kind is OFF_BANK_COMPRESSED_HIT:
            self.dynamic += p.e_flag if op is READ else store
        elif kind is MISS or kind is HIT_INVALID_SLOT:
            if op is READ:
                if extra:
                    self.overhead += p.e_mem
                else:
                    self.dynamic += p.e_mem
            self.dynamic += store
        elif kind is OFF_BANK_MISS:
            if extra:
                self.overhead += p.e_mem
            else:
                self.dynamic += p.e_mem

    def charge_writeback(self, wb: Writeback, gating: bool = False) -> None:
        """Plain evictions are dynamic; writebacks forced by gating are overhead."""
        if gating or wb.cause in ("discard", "migrate"):
            self.overhead += self.params.e_mem
        else:
            self.dynamic += self.params.e_mem

    def charge_migrations(self, lines: int) -> None:
        self.overhead += self.params.e_migrate_line * lines

    def charge_tick(self, tick: IntervalTick) -> None:
        p = self.params
        self.static += p.leak_bank_per_cycle * tick.on_banks * tick.cycles
        if tick.sidecar:
            self.overhead += p.leak_sidecar_per_cycle * tick.num_banks * tick.cycles
        if tick.counters:
            self.overhead += p.leak_counters_per_cycle * tick.num_banks * tick.cycles
        self.cycles += tick.cycles

    def charge_interconnect(self, energy: float) -> None:
        self.interconnect += energy

    def charge(self, event, **kw) -> None:
        if isinstance(event, AccessOutcome):
            self.charge_access(event, **kw)
        elif isinstance(event, Writeback):
            self.charge_writeback(event, **kw)
        elif isinstance(event, Migration):
            self.charge_migrations(1)
        elif isinstance(event, IntervalTick):
            self.charge_tick(event)
        else:
            raise TypeError(f"cannot charge {type(event).__name__}")

    def report(self, cycles: int | None = None) -> EnergyReport:
        return EnergyReport(
            self.static, self.dynamic, self.overhead, self.interconnect,
            self.cycles if cycles is None else cycles,
        )


def charge_event(ledger: EnergyLedger, event, **kw) -> None:
    ledger.charge(event, **kw)


def finalize_report(ledger: EnergyLedger, cycles: int) -> EnergyReport:
    return ledger.report(cycles)


@dataclass(frozen=True)
class StorageOverhead:
    flag_bytes: int
    fv_table_bytes: int
    counter_bytes: int
    miss_counter_bytes: int
    llc_bytes: int

    def fraction(self, nbytes: int) -> float:
        return nbytes / self.llc_bytes

    @property
    def total_bytes(self) -> int:
        return self.flag_bytes + self.fv_table_bytes + self.counter_bytes + self.miss_counter_bytes


def storage_overhead(
    geometry: CacheGeometry,
    mode: Mode | str,
    num_tiles: int = 16,
    fv_entries: int = 32,
    counter_bits: int = 12,
) -> StorageOverhead:
    """Extra storage the compression and gating hardware adds to the LLC.

    One flag bit per line (zero bit or FV bit), one FV table of
    ``fv_entries`` 64-byte values per tile (NFV only), three interval
    counters per bank and one miss counter per bank.
    """
    mode = Mode(mode)
    lines = geometry.num_banks * geometry.lines_per_bank
    flag = 0 if mode is Mode.BASELINE else lines // 8
    tables = num_tiles * fv_entries * geometry.line_size if mode is Mode.NFV else 0
    counters = 3 * counter_bits * geometry.num_banks // 8
    misses = counter_bits * geometry.num_banks // 8
    return StorageOverhead(flag, tables, counters, misses, geometry.total_capacity)
