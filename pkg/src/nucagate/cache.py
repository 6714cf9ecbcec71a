"""Banked NUCA last-level cache with zero/FV line compression and bank power gating.

Each bank is a set-associative array with exact LRU.  Every way carries a
tag, a valid/dirty pair and a compressed flag (the zero bit in NIZ mode, the
FV bit in NFV mode).  Tags, flags and one-hot codewords sit in an always-on
sidecar, so a gated bank keeps serving its compressed lines while its data
array (and every uncompressed line in it) is gone.

Ways are keyed by full line address rather than by tag: a line that was
migrated out of a gated bank lives in another bank's set with the same set
index, and ``NucaCache.migrated`` remembers where.
"""

from __future__ import annotations

import enum
import sys
from collections import OrderedDict
from dataclasses import dataclass
from typing import NamedTuple

from .errors import ConfigError, ContractViolation
from .fvcodec import FvTable
from .trace import INVALIDATE, LINE_SIZE, READ, WRITE, ZERO_LINE, AccessRecord, Op

COUNTER_MAX_12BIT = (1 << 12) - 1


class Mode(str, enum.Enum):
    BASELINE = "baseline"
    NIZ = "niz"
    NFV = "nfv"


class OutcomeKind(enum.Enum):
    HIT_UNCOMPRESSED = "HitUncompressed"
    HIT_COMPRESSED = "HitCompressed"
    HIT_INVALID_SLOT = "HitInvalidSlot"
    MISS = "Miss"
    OFF_BANK_COMPRESSED_HIT = "OffBankCompressedHit"
    OFF_BANK_MISS = "OffBankMiss"

    @property
    def is_miss(self) -> bool:
        return self in _MISS_KINDS

    @property
    def is_hit(self) -> bool:
        return self not in _MISS_KINDS


HIT_UNCOMPRESSED = OutcomeKind.HIT_UNCOMPRESSED
HIT_COMPRESSED = OutcomeKind.HIT_COMPRESSED
HIT_INVALID_SLOT = OutcomeKind.HIT_INVALID_SLOT
MISS = OutcomeKind.MISS
OFF_BANK_COMPRESSED_HIT = OutcomeKind.OFF_BANK_COMPRESSED_HIT
OFF_BANK_MISS = OutcomeKind.OFF_BANK_MISS
_MISS_KINDS = frozenset({HIT_INVALID_SLOT, MISS, OFF_BANK_MISS})


def is_zero_line(value: bytes) -> bool:
    return len(value) == LINE_SIZE and value == ZERO_LINE


@dataclass(frozen=True)
class CacheGeometry:
    num_banks: int = 64
    bank_capacity: int = 128 * 1024
    associativity: int = 8
    line_size: int = LINE_SIZE

    def __post_init__(self):
        if self.line_size != LINE_SIZE:
            raise ConfigError("line_size is fixed at 64 bytes")
        if self.num_banks <= 0 or self.num_banks & (self.num_banks - 1):
            raise ConfigError(f"num_banks={self.num_banks} is not a power of two")
        if self.associativity <= 0:
            raise ConfigError("associativity must be positive")
        way_bytes = self.line_size * self.associativity
        if self.bank_capacity <= 0 or self.bank_capacity % way_bytes:
            raise ConfigError(
                f"bank_capacity={self.bank_capacity} not divisible by line_size*associativity={way_bytes}"
            )
        if self.sets_per_bank & (self.sets_per_bank - 1):
            raise ConfigError(f"sets_per_bank={self.sets_per_bank} is not a power of two")

    @property
    def sets_per_bank(self) -> int:
        return self.bank_capacity // (self.line_size * self.associativity)

    @property
    def lines_per_bank(self) -> int:
        return self.bank_capacity // self.line_size

    @property
    def total_capacity(self) -> int:
        return self.num_banks * self.bank_capacity

    @property
    def bank_bits(self) -> int:
        return self.num_banks.bit_length() - 1

    @property
    def set_bits(self) -> int:
        return self.sets_per_bank.bit_length() - 1

    def map_address(self, address: int) -> tuple[int, int, int]:
        line = address // self.line_size
        bank = line % self.num_banks
        s = (line // self.num_banks) % self.sets_per_bank
        tag = line // (self.num_banks * self.sets_per_bank)
        return bank, s, tag

    def line_address(self, bank: int, set_index: int, tag: int) -> int:
        """Inverse of :meth:`map_address` at line granularity (byte address of the line)."""
        line = (tag * self.sets_per_bank + set_index) * self.num_banks + bank
        return line * self.line_size


def map_address(address: int, geometry: CacheGeometry | None = None) -> tuple[int, int, int]:
    return (geometry or CacheGeometry()).map_address(address)


class Writeback(NamedTuple):
    line: int
    value: bytes
    cause: str  # "evict" | "invalidate" | "discard" | "migrate" | "flush"


class Migration(NamedTuple):
    line: int
    src: int
    dst: int


class AccessOutcome(NamedTuple):
    kind: OutcomeKind
    bank: int
    op: Op
    value: bytes | None = None
    evicted: Writeback | None = None
    holder: int = -1
    compressed: bool = False


# builds a namedtuple without the generated __new__ frame; used on the access path
_new = tuple.__new__


class Line:
    __slots__ = ("valid", "dirty", "compressed", "codeword", "data")

    def __init__(self, valid=True, dirty=False, compressed=False, codeword=None, data=None):
        self.valid = valid
        self.dirty = dirty
        self.compressed = compressed
        self.codeword = codeword
        self.data = data

    def __repr__(self) -> str:
        flags = "".join(c for c, on in (("V", self.valid), ("D", self.dirty), ("C", self.compressed)) if on)
        return f"Line({flags or '-'})"


class IntervalCounters:
    __slots__ = ("c_access", "c_compressed", "c_invalid", "c_miss")

    def __init__(self, c_access=0, c_compressed=0, c_invalid=0, c_miss=0):
        self.c_access = c_access
        self.c_compressed = c_compressed
        self.c_invalid = c_invalid
        self.c_miss = c_miss

    def reset(self) -> None:
        self.c_access = self.c_compressed = self.c_invalid = self.c_miss = 0

    def copy(self) -> "IntervalCounters":
        return IntervalCounters(self.c_access, self.c_compressed, self.c_invalid, self.c_miss)

    @property
    def complete(self) -> int:
        return self.c_access - self.c_compressed - self.c_invalid

    def __eq__(self, other) -> bool:
        return isinstance(other, IntervalCounters) and self.as_tuple() == other.as_tuple()

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.c_access, self.c_compressed, self.c_invalid, self.c_miss)

    def __repr__(self) -> str:
        return "IntervalCounters(A=%d, C=%d, I=%d, miss=%d)" % self.as_tuple()


class BankState:
    __slots__ = ("bank_id", "powered_on", "migration_mode", "sets", "counters")

    def __init__(self, bank_id: int, num_sets: int):
        self.bank_id = bank_id
        self.powered_on = True
        self.migration_mode = False
        self.sets: list[OrderedDict[int, Line]] = [OrderedDict() for _ in range(num_sets)]
        self.counters = IntervalCounters()

    def occupancy(self) -> dict[str, int]:
        unc = comp = inv = 0
        for ways in self.sets:
            for e in ways.values():
                if not e.valid:
                    inv += 1
                elif e.compressed:
                    comp += 1
                else:
                    unc += 1
        return {"uncompressed": unc, "compressed": comp, "invalid": inv}


class NucaCache:
    """The shared LLC: ``num_banks`` gateable banks plus a flat backing memory.

    ``backing`` maps line address to the value memory holds.  A line's first
    memory image comes from the trace (the payload of the first Read that
    misses on it); after that memory is only changed by writebacks and by
    writes that bypass a gated bank.
    """

    def __init__(
        self,
        geometry: CacheGeometry | None = None,
        mode: Mode | str = Mode.BASELINE,
        fv_table: FvTable | None = None,
        saturate_counters: bool = False,
    ):
        self.geometry = geometry or CacheGeometry()
        self.mode = Mode(mode)
        if self.mode is Mode.NFV and fv_table is None:
            raise ConfigError("NFV mode requires an FV table")
        self.fv_table = fv_table if self.mode is Mode.NFV else None
        self.saturate_counters = saturate_counters
        self._cap = COUNTER_MAX_12BIT if saturate_counters else sys.maxsize
        g = self.geometry
        self.banks = [BankState(b, g.sets_per_bank) for b in range(g.num_banks)]
        self.backing: dict[int, bytes] = {}
        self.migrated: dict[int, int] = {}
        self._assoc = g.associativity
        self._bank_mask = g.num_banks - 1
        self._bank_bits = g.bank_bits
        self._set_mask = g.sets_per_bank - 1
        self._niz = self.mode is Mode.NIZ
        self._encode = self.fv_table._codes.get if self.fv_table is not None else None

    # -- value representation ------------------------------------------------

    def compress(self, value: bytes) -> tuple[bool, int | None]:
        """(is the value stored compressed, codeword) under this cache's mode."""
        if self.mode is Mode.NIZ:
            return value == ZERO_LINE, None
        if self.mode is Mode.NFV:
            cw = self._encode(value)
            return cw is not None, cw
        return False, None

    def line_value(self, e: Line) -> bytes:
        if not e.compressed:
            return e.data
        if self.mode is Mode.NIZ:
            return ZERO_LINE
        return self.fv_table.decode(e.codeword)

    def _store(self, e: Line, value: bytes) -> bool:
        if self._niz:
            comp = value == ZERO_LINE
            e.codeword = None
        elif self._encode is not None:
            cw = e.codeword = self._encode(value)
            comp = cw is not None
        else:
            e.codeword = None
            e.data = value
            e.compressed = False
            return False
        e.compressed = comp
        e.data = None if comp else value
        return comp

    def home_bank(self, line: int) -> int:
        return line & self._bank_mask

    def set_index(self, line: int) -> int:
        return (line >> self._bank_bits) & self._set_mask

    # -- lookup helpers ------------------------------------------------------

    def find(self, line: int) -> tuple[int, Line] | None:
        """(holding bank, way entry) for ``line``, or None if not cached."""
        home = line & self._bank_mask
        s = (line >> self._bank_bits) & self._set_mask
        e = self.banks[home].sets[s].get(line)
        if e is not None:
            return home, e
        h = self.migrated.get(line)
        if h is not None:
            return h, self.banks[h].sets[s][line]
        return None

    def _evict_from(self, bank_id: int, ways: OrderedDict, cause: str, protect=None) -> Writeback | None | bool:
        """Free one way of a full set: invalid ways first, then LRU.

        Returns the writeback (or None).  With ``protect`` given, lines in
        that set are never chosen; False is returned when nothing is evictable.
        """
        victim = None
        for k, e in ways.items():
            if not e.valid and (protect is None or k not in protect):
                victim = k
                break
        if victim is None:
            for k in ways:
                if protect is None or k not in protect:
                    victim = k
                    break
        if victim is None:
            return False
        e = ways.pop(victim)
        if (victim & self._bank_mask) != bank_id:
            self.migrated.pop(victim, None)
        if e.valid and e.dirty:
            value = self.line_value(e)
            self.backing[victim] = value
            return Writeback(victim, value, cause)
        return None

    # -- the access path -----------------------------------------------------

    def access(self, rec: AccessRecord) -> AccessOutcome:
        cycle, op, address, payload = rec
        if op is not INVALIDATE and payload is None:
            raise ContractViolation(f"{op.value} record at cycle {cycle} has no payload")
        line = address >> 6
        home = line & self._bank_mask
        s = (line >> self._bank_bits) & self._set_mask
        hb = self.banks[home]
        ctr = hb.counters
        cap = self._cap
        counted = ctr.c_access < cap
        if counted:
            ctr.c_access += 1

        holder = home
        ways = hb.sets[s]
        e = ways.get(line)
        on = hb.powered_on
        if e is None:
            h = self.migrated.get(line)
            if h is not None:
                holder = h
                hold = self.banks[h]
                ways = hold.sets[s]
                e = ways[line]
                on = hold.powered_on

        if op is INVALIDATE:
            return self._invalidate(line, home, holder, ways, e, on, ctr, counted)

        if e is not None and e.valid:
            if e.compressed:
                if counted and ctr.c_compressed < cap:
                    ctr.c_compressed += 1
                kind = HIT_COMPRESSED if on else OFF_BANK_COMPRESSED_HIT
            else:
                kind = HIT_UNCOMPRESSED
            if op is READ:
                ways.move_to_end(line)
                value = self.line_value(e) if e.compressed else e.data
                return _new(AccessOutcome, (kind, home, op, value, None, holder, e.compressed))
            # write hit
            if on:
                comp = self._store(e, payload)
                e.dirty = True
                ways.move_to_end(line)
                return _new(AccessOutcome, (kind, home, op, None, None, holder, comp))
            comp, cw = self.compress(payload)
            if comp:
                e.codeword = cw
                e.dirty = True
                ways.move_to_end(line)
                return _new(AccessOutcome, (kind, home, op, None, None, holder, True))
            # an incompressible write cannot live in a gated bank's sidecar
            del ways[line]
            if holder != home:
                del self.migrated[line]
            self.backing[line] = payload
            if ctr.c_miss < cap:
                ctr.c_miss += 1
            return _new(AccessOutcome, (OFF_BANK_MISS, home, op, None, None, holder, False))

        if ctr.c_miss < cap:
            ctr.c_miss += 1
        if e is not None:
            # invalid way still holding this tag (home bank, powered on)
            if counted and ctr.c_invalid < cap:
                ctr.c_invalid += 1
            kind = HIT_INVALID_SLOT
            wb = None
        elif on:
            kind = MISS
            wb = None
            if len(ways) >= self._assoc:
                wb = self._evict_from(home, ways, "evict")
            e = ways[line] = Line()
        else:
            if op is READ:
                value = self.backing.get(line)
                if value is None:
                    value = self.backing[line] = payload
                return _new(AccessOutcome, (OFF_BANK_MISS, home, op, value, None, home, False))
            self.backing[line] = payload
            return _new(AccessOutcome, (OFF_BANK_MISS, home, op, None, None, home, False))

        e.valid = True
        if op is READ:
            value = self.backing.get(line)
            if value is None:
                value = self.backing[line] = payload
            e.dirty = False
            comp = self._store(e, value)
        else:
            value = None
            e.dirty = True
            comp = self._store(e, payload)
        ways.move_to_end(line)
        return _new(AccessOutcome, (kind, home, op, value, wb, home, comp))

    def _invalidate(self, line, home, holder, ways, e, on, ctr, counted) -> AccessOutcome:
        cap = self._cap
        if e is None:
            kind = MISS if self.banks[home].powered_on else OFF_BANK_MISS
            return AccessOutcome(kind, home, INVALIDATE, None, None, home, False)
        if not e.valid:
            if counted and ctr.c_invalid < cap:
                ctr.c_invalid += 1
            return AccessOutcome(HIT_INVALID_SLOT, home, INVALIDATE, None, None, holder, False)
        compressed = e.compressed
        if compressed:
            if counted and ctr.c_compressed < cap:
                ctr.c_compressed += 1
            kind = HIT_COMPRESSED if on else OFF_BANK_COMPRESSED_HIT
        else:
            kind = HIT_UNCOMPRESSED
        wb = None
        if e.dirty:
            value = self.line_value(e)
            self.backing[line] = value
            wb = Writeback(line, value, "invalidate")
        if on and holder == home:
            e.valid = e.dirty = e.compressed = False
            e.codeword = e.data = None
        else:
            del ways[line]
            if holder != home:
                del self.migrated[line]
        return AccessOutcome(kind, home, INVALIDATE, None, wb, holder, compressed)

    # -- interval counters ---------------------------------------------------

    def counters_snapshot(self) -> list[IntervalCounters]:
        return [b.counters.copy() for b in self.banks]

    def reset_counters(self) -> None:
        for b in self.banks:
            b.counters.reset()

    # -- power gating ----------------------------------------------------------

    @property
    def powered_on(self) -> list[bool]:
        return [b.powered_on for b in self.banks]

    def active_banks(self) -> list[int]:
        return [b.bank_id for b in self.banks if b.powered_on]

    def power_on(self, bank_id: int) -> None:
        bank = self.banks[bank_id]
        if bank.powered_on:
            raise ContractViolation(f"bank {bank_id} is already on")
        bank.powered_on = True
        bank.migration_mode = False

    def discard_bank(self, bank_id: int) -> list[Writeback]:
        """Gate a bank, dropping its uncompressed lines after writing back dirty ones."""
        bank = self.banks[bank_id]
        if not bank.powered_on:
            raise ContractViolation(f"bank {bank_id} is already off")
        out = []
        for ways in bank.sets:
            for line, e in list(ways.items()):
                if e.valid and e.compressed:
                    continue
                del ways[line]
                if (line & self._bank_mask) != bank_id:
                    self.migrated.pop(line, None)
                if e.valid and e.dirty:
                    self.backing[line] = e.data
                    out.append(Writeback(line, e.data, "discard"))
        bank.powered_on = False
        bank.migration_mode = True
        return out

    def migrate_bank(self, bank_id: int, targets: list[int]) -> list[Writeback | Migration]:
        """Gate a bank, moving its valid uncompressed lines into ``targets``.

        Line ``l`` goes to ``targets[l % len(targets)]`` at the same set index,
        evicting that set's LRU way.  Lines moved during this call are never
        chosen as victims; a line with no evictable way left is written back
        (if dirty) and dropped.
        """
        bank = self.banks[bank_id]
        if not bank.powered_on:
            raise ContractViolation(f"bank {bank_id} is already off")
        targets = [t for t in targets if t != bank_id and self.banks[t].powered_on]
        if not targets:
            raise ContractViolation("migration needs at least one other active bank")
        events: list[Writeback | Migration] = []
        placed: set[int] = set()
        n = len(targets)
        for s, ways in enumerate(bank.sets):
            for line, e in list(ways.items()):
                if e.valid and e.compressed:
                    continue
                del ways[line]
                home = line & self._bank_mask
                if home != bank_id:
                    self.migrated.pop(line, None)
                if not e.valid:
                    continue
                dst = targets[line % n]
                tways = self.banks[dst].sets[s]
                if len(tways) >= self._assoc:
                    wb = self._evict_from(dst, tways, "migrate", protect=placed)
                    if wb is False:
                        if e.dirty:
                            self.backing[line] = e.data
                            events.append(Writeback(line, e.data, "migrate"))
                        continue
                    if wb is not None:
                        events.append(wb)
                tways[line] = e
                placed.add(line)
                if dst != home:
                    self.migrated[line] = dst
                events.append(Migration(line, bank_id, dst))
        bank.powered_on = False
        bank.migration_mode = False
        return events

    # -- inspection ------------------------------------------------------------

    def dirty_lines(self) -> dict[int, bytes]:
        out = {}
        for bank in self.banks:
            for ways in bank.sets:
                for line, e in ways.items():
                    if e.valid and e.dirty:
                        out[line] = self.line_value(e)
        return out

    def effective_memory(self) -> dict[int, bytes]:
        """Backing memory as it would look after writing back every dirty line."""
        mem = dict(self.backing)
        mem.update(self.dirty_lines())
        return mem

    def flush(self) -> list[Writeback]:
        out = []
        for bank in self.banks:
            for ways in bank.sets:
                for line, e in ways.items():
                    if e.valid and e.dirty:
                        value = self.line_value(e)
                        self.backing[line] = value
                        e.dirty = False
                        out.append(Writeback(line, value, "flush"))
        return out

    def check_invariants(self) -> None:
        """Raise AssertionError if any structural invariant is broken."""
        for bank in self.banks:
            c = bank.counters
            assert c.c_compressed + c.c_invalid <= c.c_access, (bank.bank_id, c)
            for s, ways in enumerate(bank.sets):
                assert len(ways) <= self._assoc
                for line, e in ways.items():
                    assert self.set_index(line) == s
                    assert e.valid or not e.dirty
                    if e.codeword is not None:
                        assert e.compressed and bin(e.codeword).count("1") == 1
                    if not bank.powered_on:
                        assert e.valid and e.compressed, (bank.bank_id, line, e)
                    if self.home_bank(line) != bank.bank_id:
                        assert self.migrated.get(line) == bank.bank_id
                        assert line not in self.banks[self.home_bank(line)].sets[s]
        for line, holder in self.migrated.items():
            assert line in self.banks[holder].sets[self.set_index(line)]
        assert any(b.powered_on for b in self.banks), "every bank is gated"

    def snapshot(self) -> dict:
        return {
            "mode": self.mode.value,
            "banks": [
                {
                    "bank": b.bank_id,
                    "powered_on": b.powered_on,
                    "migration_mode": b.migration_mode,
                    "counters": dict(zip(IntervalCounters.__slots__, b.counters.as_tuple())),
                    "set_occupancy": [
                        sum(1 for e in ways.values() if e.valid and not e.compressed) for ways in b.sets
                    ],
                    **b.occupancy(),
                }
                for b in self.banks
            ],
            "migrated_lines": len(self.migrated),
        }

    def format_snapshot(self) -> str:
        snap = self.snapshot()
        lines = [f"# cache snapshot mode={snap['mode']} migrated_lines={snap['migrated_lines']}"]
        lines.append("bank T M C_A C_C C_I C_miss uncompressed compressed invalid max_set_occupancy")
        for b in snap["banks"]:
            c = b["counters"]
            lines.append(
                f"{b['bank']} {int(b['powered_on'])} {int(b['migration_mode'])} "
                f"{c['c_access']} {c['c_compressed']} {c['c_invalid']} {c['c_miss']} "
                f"{b['uncompressed']} {b['compressed']} {b['invalid']} {max(b['set_occupancy'])}"
            )
        return "\n".join(lines) + "\n"


class ShadowCache:
    """Tag-only, never-gated twin of :class:`NucaCache` used to tell extra misses apart.

    Compression does not change hit/miss behaviour when no bank is gated, so
    only tags, valid bits and LRU order are tracked.
    """

    def __init__(self, geometry: CacheGeometry):
        self.geometry = geometry
        self._assoc = geometry.associativity
        # set s of bank b sits at s * num_banks + b, which is just the line's low bits
        self._index_mask = geometry.num_banks * geometry.sets_per_bank - 1
        self._sets: list[OrderedDict[int, bool]] = [
            OrderedDict() for _ in range(geometry.num_banks * geometry.sets_per_bank)
        ]

    def access(self, op: Op, line: int) -> bool:
        ways = self._sets[line & self._index_mask]
        valid = ways.get(line)
        if op is INVALIDATE:
            if valid:
                ways[line] = False
            return bool(valid)
        if valid:
            ways.move_to_end(line)
            return True
        if valid is None and len(ways) >= self._assoc:
            victim = None
            for k, v in ways.items():
                if not v:
                    victim = k
                    break
            if victim is None:
                victim = next(iter(ways))
            del ways[victim]
        ways[line] = True
        ways.move_to_end(line)
        return False
