"""Interval-driven bank power management.

At the end of every interval the per-bank counters are turned into power
decisions: first the power-on rules for gated banks, then one of the two
power-off policies (statistic-based or threshold-based) for the banks that
are still on.  ``apply_decision`` carries a decision out on a cache.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cache import IntervalCounters, Migration, NucaCache, Writeback
from .errors import ConfigError, ContractViolation


class OffMode(str, enum.Enum):
    DISCARD = "discard"  # M=1: valid uncompressed lines are dropped
    MIGRATE = "migrate"  # M=0: valid uncompressed lines move to active banks


class Action(str, enum.Enum):
    STAY_ON = "StayOn"
    STAY_OFF = "StayOff"
    TURN_OFF = "TurnOff"
    TURN_ON = "TurnOn"


class PolicyName(str, enum.Enum):
    NONE = "none"
    STATISTIC = "statistic"
    THRESHOLD = "threshold"


@dataclass
class PolicyConfig:
    interval_cycles: int = 64_000_000
    n_off_max: int = 16
    c_th: float = 0.005
    th_ind: float = 0.007
    th_at: float = 0.01
    # cap branch (i) of the statistic policy at n_off_max as well
    cap_branch_i: bool = False
    # require both previous interval means to exceed 2x the current one
    branch_ii_both_previous: bool = False

    def __post_init__(self):
        if self.interval_cycles <= 0:
            raise ConfigError("interval_cycles must be positive")
        if self.n_off_max < 0:
            raise ConfigError("n_off_max must be >= 0")
        for name in ("c_th", "th_ind", "th_at"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ConfigError(f"{name}={v} must lie in (0, 1)")


@dataclass
class IntervalStats:
    c_x: np.ndarray
    mu: float
    sigma: float
    mu_prev1: float = 0.0
    mu_prev2: float = 0.0

    def next_history(self) -> tuple[float, float]:
        """(mu_prev1, mu_prev2) for the following interval."""
        return self.mu, self.mu_prev1


@dataclass
class PowerDecision:
    turn_off: dict[int, OffMode] = field(default_factory=dict)
    turn_on: list[int] = field(default_factory=list)
    branch: str | None = None

    def __bool__(self) -> bool:
        return bool(self.turn_off or self.turn_on)

    def actions(self, bank_power: Sequence[bool]) -> list[Action]:
        out = []
        for b, on in enumerate(bank_power):
            if b in self.turn_off:
                out.append(Action.TURN_OFF)
            elif b in self.turn_on:
                out.append(Action.TURN_ON)
            else:
                out.append(Action.STAY_ON if on else Action.STAY_OFF)
        return out

    def merged(self, other: "PowerDecision") -> "PowerDecision":
        off = dict(self.turn_off)
        off.update(other.turn_off)
        on = sorted(set(self.turn_on) | set(other.turn_on))
        if set(off) & set(on):
            raise ContractViolation("a bank cannot be turned on and off in one step")
        return PowerDecision(off, on, other.branch or self.branch)


def complete_accesses(counters: Sequence[IntervalCounters]) -> np.ndarray:
    c_x = np.array([c.c_access - c.c_compressed - c.c_invalid for c in counters], dtype=np.int64)
    # counters are kept consistent structurally; a negative value is a bug, not noise
    assert (c_x >= 0).all(), "complete-access count went negative"
    return c_x


def compute_interval_stats(
    counters: Sequence[IntervalCounters], history: tuple[float, float] = (0.0, 0.0)
) -> IntervalStats:
    c_x = complete_accesses(counters)
    x = c_x.astype(float)
    mu = float(x.mean()) if len(x) else 0.0
    sigma = float(x.std(ddof=0)) if len(x) else 0.0
    return IntervalStats(c_x, mu, sigma, history[0], history[1])


def _lowest_first(banks, key) -> list[int]:
    return sorted(banks, key=lambda b: (key[b], b))


def _keep_one_on(cand: list[int], on: list[int], key) -> list[int]:
    # never gate the last active bank; spare the busiest candidate
    if on and len(cand) >= len(on):
        spare = max(cand, key=lambda b: (key[b], -b))
        cand = [b for b in cand if b != spare]
    return cand


def statistic_power_off(
    stats: IntervalStats, bank_power: Sequence[bool], cfg: PolicyConfig
) -> PowerDecision:
    """Statistic-based power-off over the interval that just ended.

    Non-uniform interval (sigma > mu): every active bank with fewer complete
    accesses than the mean is gated, discarding its uncompressed lines.
    Otherwise, if the mean fell below half of what it was two intervals ago
    and fewer than ``n_off_max`` banks are off, the least-used active banks
    are gated up to ``n_off_max`` in total, migrating their lines.
    """
    c_x = stats.c_x
    on = [b for b, p in enumerate(bank_power) if p]
    n_off = len(bank_power) - len(on)
    if stats.sigma > stats.mu:
        cand = [b for b in on if c_x[b] < stats.mu]
        if cfg.cap_branch_i:
            cand = _lowest_first(cand, c_x)[: max(0, cfg.n_off_max - n_off)]
        cand = _keep_one_on(cand, on, c_x)
        return PowerDecision({b: OffMode.DISCARD for b in sorted(cand)}, [], "i")
    dropped = stats.mu_prev2 > 2 * stats.mu
    if cfg.branch_ii_both_previous:
        dropped = dropped and stats.mu_prev1 > 2 * stats.mu
    if dropped and n_off < cfg.n_off_max:
        cand = _lowest_first(on, c_x)[: cfg.n_off_max - n_off]
        cand = _keep_one_on(cand, on, c_x)
        return PowerDecision({b: OffMode.MIGRATE for b in sorted(cand)}, [], "ii")
    return PowerDecision()


def block_access_counts(counters: Sequence[IntervalCounters]) -> np.ndarray | None:
    """Complete accesses of each bank as a fraction of all LLC accesses (None if idle)."""
    total = sum(c.c_access for c in counters)
    if total <= 0:
        return None
    return complete_accesses(counters) / total


def threshold_power_off(
    counters: Sequence[IntervalCounters], bank_power: Sequence[bool], cfg: PolicyConfig
) -> PowerDecision:
    bac = block_access_counts(counters)
    if bac is None:
        return PowerDecision()
    on = [b for b, p in enumerate(bank_power) if p]
    n_off = len(bank_power) - len(on)
    cand = _lowest_first([b for b in on if bac[b] < cfg.c_th], bac)
    cand = cand[: max(0, cfg.n_off_max - n_off)]
    cand = _keep_one_on(cand, on, bac)
    return PowerDecision({b: OffMode.DISCARD for b in sorted(cand)}, [], "threshold" if cand else None)


def power_on(
    counters: Sequence[IntervalCounters],
    bank_power: Sequence[bool],
    total_accesses: int,
    cfg: PolicyConfig,
) -> PowerDecision:
    off = [b for b, p in enumerate(bank_power) if not p]
    chosen = []
    for b in off:
        c = counters[b]
        if c.c_access > 0 and (c.c_compressed + c.c_invalid) / c.c_access < cfg.th_ind:
            chosen.append(b)
    extra = [counters[b].c_access - counters[b].c_compressed for b in range(len(bank_power))]
    total_extra = sum(extra[b] for b in off)
    if total_accesses > 0 and total_extra / total_accesses > cfg.th_at:
        rest = [b for b in off if b not in set(chosen)]
        k = math.ceil(len(rest) / 2)
        chosen += sorted(rest, key=lambda b: (-extra[b], b))[:k]
    return PowerDecision({}, sorted(chosen), "on" if chosen else None)


def apply_decision(
    decision: PowerDecision, cache: NucaCache, fv_table=None
) -> list[Writeback | Migration]:
    """Carry out ``decision`` on ``cache``: power-ons first, then power-offs.

    ``fv_table`` is accepted for symmetry with the cache constructor; the
    cache already decodes its own codewords.
    """
    power = cache.powered_on
    for b in decision.turn_on:
        if power[b]:
            raise ContractViolation(f"TurnOn for bank {b}, which is already on")
    for b in decision.turn_off:
        if not power[b]:
            raise ContractViolation(f"TurnOff for bank {b}, which is already off")
    after = list(power)
    for b in decision.turn_on:
        after[b] = True
    for b in decision.turn_off:
        after[b] = False
    active = [b for b, p in enumerate(after) if p]
    if not active:
        raise ContractViolation("decision would gate every bank")

    events: list[Writeback | Migration] = []
    for b in decision.turn_on:
        cache.power_on(b)
    for b in sorted(decision.turn_off):
        if decision.turn_off[b] is OffMode.MIGRATE:
            events.extend(cache.migrate_bank(b, active))
        else:
            events.extend(cache.discard_bank(b))
    return events


@dataclass
class IntervalLog:
    interval: int
    mu: float
    sigma: float
    branch: str | None
    turned_off: dict[int, OffMode]
    turned_on: list[int]
    writebacks: int
    migrations: int

    def format(self) -> str:
        off = ",".join(f"{b}:{m.value}" for b, m in sorted(self.turned_off.items())) or "-"
        on = ",".join(str(b) for b in self.turned_on) or "-"
        return (
            f"interval={self.interval} mu={self.mu!r} sigma={self.sigma!r} branch={self.branch or '-'} "
            f"off={off} on={on} writebacks={self.writebacks} migrations={self.migrations}"
        )


class PowerManager:
    """Holds the policy's cross-interval state (the two previous means)."""

    def __init__(self, policy: PolicyName | str = PolicyName.STATISTIC, cfg: PolicyConfig | None = None):
        self.policy = PolicyName(policy)
        self.cfg = cfg or PolicyConfig()
        self.history = (0.0, 0.0)

    def decide(self, counters: Sequence[IntervalCounters], bank_power: Sequence[bool]):
        """Return (decision, stats) for one interval boundary and advance the history."""
        stats = compute_interval_stats(counters, self.history)
        self.history = stats.next_history()
        if self.policy is PolicyName.NONE:
            return PowerDecision(), stats
        total = sum(c.c_access for c in counters)
        on = power_on(counters, bank_power, total, self.cfg)
        if self.policy is PolicyName.STATISTIC:
            off = statistic_power_off(stats, bank_power, self.cfg)
        else:
            off = threshold_power_off(counters, bank_power, self.cfg)
        decision = on.merged(off)
        decision.branch = off.branch or on.branch
        return decision, stats

    def end_interval(self, interval: int, cache: NucaCache):
        """Decide, apply and reset counters; returns (events, IntervalLog)."""
        counters = cache.counters_snapshot()
        decision, stats = self.decide(counters, cache.powered_on)
        events = apply_decision(decision, cache) if decision else []
        cache.reset_counters()
        log = IntervalLog(
            interval,
            stats.mu,
            stats.sigma,
            decision.branch,
            dict(decision.turn_off),
            list(decision.turn_on),
            sum(1 for e in events if isinstance(e, Writeback)),
            sum(1 for e in events if isinstance(e, Migration)),
        )
        return events, log
