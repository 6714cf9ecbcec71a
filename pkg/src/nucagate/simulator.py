"""Trace replay: cache, power manager, energy ledger and TSV bundles in lockstep."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .cache import (
    HIT_INVALID_SLOT,
    MISS,
    OFF_BANK_MISS,
    AccessOutcome,
    OutcomeKind,
    Migration,
    Mode,
    NucaCache,
    ShadowCache,
    Writeback,
)
from .config import AUTO, SimConfig
from .energy import EnergyLedger, EnergyReport, IntervalTick
from .errors import ConfigError, ContractViolation
from .fvcodec import FvTable, profile_frequent_values
from .policy import IntervalLog, PolicyName, PowerManager
from .trace import INVALIDATE, WRITE, AccessRecord, Op, generate_synthetic, read_trace
from .tsv import TsvBundle, fv_word, line_words

INTERVAL_COLUMNS = [
    "interval",
    "start_cycle",
    "cycles",
    "accesses",
    "misses",
    "miss_rate",
    "extra_misses",
    "active_banks",
    "active_ratio",
    "banks_turned_off",
    "banks_turned_on",
    "writebacks",
    "migrations",
    "static_energy",
    "dynamic_energy",
    "overhead_energy",
    "interconnect_energy",
]


@dataclass
class RunResult:
    name: str
    mode: Mode
    policy: PolicyName
    report: EnergyReport
    rows: list[dict]
    decisions: list[IntervalLog]
    accesses: int = 0
    requests: int = 0
    misses: int = 0
    extra_misses: int = 0
    writebacks: int = 0
    migrations: int = 0
    write_penalty_cycles: int = 0
    outcome_counts: dict = field(default_factory=dict)

    @property
    def miss_rate(self) -> float:
        return self.misses / self.requests if self.requests else 0.0

    @property
    def active_ratio_mean(self) -> float:
        if not self.rows:
            return 1.0
        return sum(r["active_ratio"] for r in self.rows) / len(self.rows)

    def summary(self) -> dict:
        return {
            "name": self.name,
            "mode": self.mode.value,
            "policy": self.policy.value,
            "accesses": self.accesses,
            "requests": self.requests,
            "misses": self.misses,
            "miss_rate": self.miss_rate,
            "extra_misses": self.extra_misses,
            "writebacks": self.writebacks,
            "migrations": self.migrations,
            "intervals": len(self.rows),
            "active_ratio_mean": self.active_ratio_mean,
            "write_penalty_cycles": self.write_penalty_cycles,
            "outcomes": dict(sorted(self.outcome_counts.items())),
            "energy": self.report.as_dict(),
        }

    def report_text(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=False) + "\n"

    def intervals_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=INTERVAL_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in self.rows:
            w.writerow(row)
        return buf.getvalue()

    def decision_log(self) -> str:
        return "".join(d.format() + "\n" for d in self.decisions)


class Simulator:
    """Replays one trace under one configuration.

    Interval ``k`` covers cycles ``[k*I, (k+1)*I)``.  When a record from a
    later interval arrives, every interval before it is closed: leakage is
    charged for its full length and, unless the mode is Baseline, the power
    policy runs on its counters.  ``finish`` closes the last (partial)
    interval at one past the final cycle without running the policy.

    Request energy is folded into ``ledger`` at interval boundaries and by
    ``finish``, so the ledger lags the open interval until then.
    """

    def __init__(self, config: SimConfig, fv_table: FvTable | None = None):
        self.config = config
        g = config.geometry
        if config.mode is Mode.NFV and fv_table is None:
            raise ConfigError("NFV simulation needs an FV table")
        self.fv_table = fv_table
        self.cache = NucaCache(g, config.mode, fv_table, config.saturate_counters)
        self.shadow = ShadowCache(g)
        self.gating = config.mode is not Mode.BASELINE and config.policy is not PolicyName.NONE
        self.manager = PowerManager(config.policy if self.gating else PolicyName.NONE, config.policy_cfg)
        self.ledger = EnergyLedger(config.energy)
        self.interval_cycles = config.policy_cfg.interval_cycles
        t = config.tsv
        self.bundles = None
        if t.enabled:
            self.bundles = [
                TsvBundle(
                    t.width, t.num_wires, t.c_base, t.c1, t.c2, t.r,
                    config.energy.vdd, config.energy.c_load,
                    t.c_c_ratio * config.energy.c_load, t.c_d_ratio * config.energy.c_load,
                    t.fixed_coupling_ratio,
                )
                for _ in range(t.num_tiles)
            ]
            self._banks_per_tile = g.num_banks // t.num_tiles
        self._sidecar = config.mode is not Mode.BASELINE
        self._monitoring = config.policy is not PolicyName.NONE
        self.interval = 0
        self.rows: list[dict] = []
        self.decisions: list[IntervalLog] = []
        self.accesses = self.requests = self.misses = self.extra_misses = 0
        self.writebacks = self.migrations = 0
        self.write_penalty_cycles = 0
        self.outcome_counts: dict[str, int] = {k.value: 0 for k in OutcomeKind}
        self._nfv = config.mode is Mode.NFV
        self._access_energy = _access_energy_table(config.energy)
        # request energy not yet folded into the ledger; folded at interval boundaries
        self._pending = (0.0, 0.0)
        self._last_cycle = -1
        self._finished = False
        self._open_interval()

    _TOTALS = ("accesses", "requests", "misses", "extra_misses", "writebacks", "migrations")

    def _open_interval(self) -> None:
        self._iv_start = tuple(getattr(self, k) for k in self._TOTALS)
        self._iv_energy = self.ledger.components()
        self._next_boundary = (self.interval + 1) * self.interval_cycles

    def _fold_pending(self) -> None:
        d, o = self._pending
        self.ledger.dynamic += d
        self.ledger.overhead += o
        self._pending = (0.0, 0.0)

    def _close_interval(self, end_cycle: int, run_policy: bool) -> None:
        self._fold_pending()
        start = self.interval * self.interval_cycles
        cycles = end_cycle - start
        on_banks = sum(1 for b in self.cache.banks if b.powered_on)
        nb = self.config.geometry.num_banks
        self.ledger.charge_tick(IntervalTick(cycles, on_banks, nb, self._sidecar, self._monitoring))
        turned_off = turned_on = 0
        if run_policy:
            events, log = self.manager.end_interval(self.interval, self.cache)
            self.decisions.append(log)
            moved = 0
            for ev in events:
                if isinstance(ev, Writeback):
                    self.ledger.charge_writeback(ev, gating=True)
                    self.writebacks += 1
                elif isinstance(ev, Migration):
                    moved += 1
            self.ledger.charge_migrations(moved)
            self.migrations += moved
            turned_off = len(log.turned_off)
            turned_on = len(log.turned_on)
        d = dict(zip(self._TOTALS, (getattr(self, k) - v for k, v in zip(self._TOTALS, self._iv_start))))
        before = self._iv_energy
        after = self.ledger.components()
        self.rows.append({
            "interval": self.interval,
            "start_cycle": start,
            "cycles": cycles,
            "accesses": d["accesses"],
            "misses": d["misses"],
            "miss_rate": d["misses"] / d["requests"] if d["requests"] else 0.0,
            "extra_misses": d["extra_misses"],
            "active_banks": on_banks,
            "active_ratio": on_banks / nb,
            "banks_turned_off": turned_off,
            "banks_turned_on": turned_on,
            "writebacks": d["writebacks"],
            "migrations": d["migrations"],
            "static_energy": after[0] - before[0],
            "dynamic_energy": after[1] - before[1],
            "overhead_energy": after[2] - before[2],
            "interconnect_energy": after[3] - before[3],
        })
        self.interval += 1
        self._open_interval()

    def advance_to(self, cycle: int) -> None:
        target = cycle // self.interval_cycles
        while self.interval < target:
            self._close_interval((self.interval + 1) * self.interval_cycles, True)

    def step(self, rec: AccessRecord) -> tuple[AccessOutcome, bool]:
        """Feed one record; returns (outcome, whether it was an extra miss)."""
        sink: list = []
        self.replay((rec,), sink)
        return sink[0]

    def replay(self, records: Iterable[AccessRecord], sink: list | None = None) -> None:
        """Feed records in order; with ``sink`` given, append (outcome, extra) per record.

        The loop keeps its running totals in locals and writes them back
        before every interval boundary, so interval rows see exact counts.
        """
        access = self.cache.access
        shadow = self.shadow.access if self.gating else None
        energy = self._access_energy
        charge_wb = self.ledger.charge_writeback
        counts = self.outcome_counts
        transfer = self._transfer if self.bundles is not None else None
        nfv = self._nfv
        append = sink.append if sink is not None else None
        last = self._last_cycle
        boundary = self._next_boundary
        accesses, requests, misses, extra_misses = self.accesses, self.requests, self.misses, self.extra_misses
        writebacks, penalty = self.writebacks, self.write_penalty_cycles
        dyn, ovh = self._pending
        try:
            for rec in records:
                cycle = rec.cycle
                if cycle < last:
                    raise ContractViolation(f"record cycle {cycle} precedes {last}")
                last = cycle
                if cycle >= boundary:
                    self.accesses, self.requests, self.misses = accesses, requests, misses
                    self.extra_misses, self.writebacks = extra_misses, writebacks
                    self._pending = (dyn, ovh)
                    self.advance_to(cycle)
                    dyn, ovh = self._pending
                    boundary = self._next_boundary
                    writebacks = self.writebacks
                out = access(rec)
                op = rec.op
                accesses += 1
                kind = out.kind
                kv = kind._value_
                counts[kv] += 1
                extra = False
                if shadow is not None:
                    shadow_hit = shadow(op, rec.address >> 6)
                if op is not INVALIDATE:
                    requests += 1
                    if kind is MISS or kind is OFF_BANK_MISS or kind is HIT_INVALID_SLOT:
                        misses += 1
                        if shadow is not None and shadow_hit:
                            extra = True
                            extra_misses += 1
                    if transfer is not None:
                        transfer(out.bank, rec.payload if op is WRITE else out.value)
                    if nfv and op is WRITE and out.compressed:
                        penalty += 1
                d, o = energy[kv, op, out.compressed, extra]
                dyn += d
                ovh += o
                if out.evicted is not None:
                    charge_wb(out.evicted)
                    writebacks += 1
                if append is not None:
                    append((out, extra))
        finally:
            self._pending = (dyn, ovh)
            self._last_cycle = last
            self.accesses, self.requests, self.misses = accesses, requests, misses
            self.extra_misses, self.writebacks = extra_misses, writebacks
            self.write_penalty_cycles = penalty

    def _transfer(self, bank: int, value: bytes) -> None:
        bundle = self.bundles[bank // self._banks_per_tile]
        cw = self.fv_table.encode(value) if self.fv_table is not None else None
        if cw is not None:
            words = (fv_word(bundle.prev_word, cw),)
        else:
            words = line_words(value, bundle.num_wires)
        self.ledger.interconnect += bundle.drive(words)

    def finish(self) -> RunResult:
        if not self._finished:
            self._finished = True
            end = self._last_cycle + 1
            if end > self.interval * self.interval_cycles:
                self._close_interval(end, False)
            self._fold_pending()
        c = self.config
        return RunResult(
            c.name, c.mode, c.policy, self.ledger.report(), self.rows, self.decisions,
            self.accesses, self.requests, self.misses, self.extra_misses,
            self.writebacks, self.migrations, self.write_penalty_cycles,
            {k: v for k, v in self.outcome_counts.items() if v},
        )

    def run(self, records: Iterable[AccessRecord]) -> RunResult:
        self.replay(records)
        return self.finish()


def _access_energy_table(params) -> dict:
    """(kind value, op, compressed, extra) -> (dynamic, overhead) energy of one request.

    Keyed by the kind's value: Enum hashing runs Python code, str hashing does not.
    """
    table = {}
    for kind in OutcomeKind:
        for op in Op:
            for compressed in (False, True):
                for extra in (False, True):
                    scratch = EnergyLedger(params)
                    scratch.charge_access(AccessOutcome(kind, 0, op, None, None, 0, compressed), extra)
                    table[kind.value, op, compressed, extra] = (scratch.dynamic, scratch.overhead)
    return table


def load_records(config: SimConfig, seed: int | None = None) -> list[AccessRecord]:
    if config.trace_path is not None:
        return read_trace(config.trace_path)
    if config.workload is None:
        raise ConfigError("config has neither a trace nor a workload")
    spec = config.workload
    if seed is not None:
        from dataclasses import replace

        spec = replace(spec, rng_seed=seed)
    return generate_synthetic(spec)


def resolve_fv_table(config: SimConfig, records: Sequence[AccessRecord]) -> FvTable | None:
    if config.mode is not Mode.NFV:
        return None
    if config.fv_table_path == AUTO:
        return profile_frequent_values(records)
    return FvTable.load(config.fv_table_path)


def simulate(config: SimConfig, records: Sequence[AccessRecord] | None = None,
             fv_table: FvTable | None = None, seed: int | None = None) -> RunResult:
    """Validate ``config``, load its trace unless given, and run it to completion."""
    config.validate(require_source=records is None)
    if records is None:
        records = load_records(config, seed)
    if fv_table is None:
        fv_table = resolve_fv_table(config, records)
    return Simulator(config, fv_table).run(records)


COMPARE_COLUMNS = [
    "name",
    "mode",
    "policy",
    "total_energy",
    "normalized_energy",
    "static_energy",
    "dynamic_energy",
    "overhead_energy",
    "interconnect_energy",
    "miss_rate",
    "extra_misses",
    "active_ratio_mean",
    "cycles",
    "edp",
    "normalized_edp",
]


def compare(configs: Sequence[SimConfig], records: Sequence[AccessRecord]) -> list[dict]:
    """Run every config on the same trace; energies normalised to the first config."""
    if not configs:
        raise ConfigError("compare needs at least one config")
    g0 = configs[0].geometry
    for c in configs[1:]:
        if c.geometry != g0:
            raise ConfigError(f"config {c.name!r} has a different cache geometry than {configs[0].name!r}")
    results = [simulate(c, records) for c in configs]
    base_e = results[0].report.total
    base_edp = results[0].report.edp
    rows = []
    for r in results:
        rep = r.report
        rows.append({
            "name": r.name,
            "mode": r.mode.value,
            "policy": r.policy.value,
            "total_energy": rep.total,
            "normalized_energy": rep.total / base_e if base_e else 1.0,
            "static_energy": rep.static_energy,
            "dynamic_energy": rep.dynamic_energy,
            "overhead_energy": rep.overhead_energy,
            "interconnect_energy": rep.interconnect_energy,
            "miss_rate": r.miss_rate,
            "extra_misses": r.extra_misses,
            "active_ratio_mean": r.active_ratio_mean,
            "cycles": rep.cycles,
            "edp": rep.edp,
            "normalized_edp": rep.edp / base_edp if base_edp else 1.0,
        })
    return rows


def compare_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COMPARE_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(row)
    return buf.getvalue()
