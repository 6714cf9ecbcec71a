"""LLC access traces: the text format, a reader/writer pair and a synthetic generator.

One record per line::

    <cycle> <R|W|I> <0x-address> [<128 hex chars of payload>]

Reads carry the value backing memory holds for the line (used on a fill),
writes carry the new line value, invalidates carry nothing.  ``#`` starts a
comment that runs to the end of the line.
"""

from __future__ import annotations

import enum
import io
import os
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, NamedTuple, Sequence, Union

import numpy as np

from .errors import ConfigError, TraceOrderError, TraceParseError

LINE_SIZE = 64
ZERO_LINE = bytes(LINE_SIZE)


class Op(str, enum.Enum):
    READ = "R"
    WRITE = "W"
    INVALIDATE = "I"


READ, WRITE, INVALIDATE = Op.READ, Op.WRITE, Op.INVALIDATE
_OPS = {"R": READ, "W": WRITE, "I": INVALIDATE}


class AccessRecord(NamedTuple):
    cycle: int
    op: Op
    address: int
    payload: bytes | None = None

    @property
    def line(self) -> int:
        return self.address >> 6


def format_record(rec: AccessRecord) -> str:
    if rec.payload is None:
        return f"{rec.cycle} {rec.op.value} {rec.address:#x}"
    return f"{rec.cycle} {rec.op.value} {rec.address:#x} {rec.payload.hex()}"


def _parse_line(line_no: int, text: str) -> AccessRecord | None:
    body = text.split("#", 1)[0].strip()
    if not body:
        return None
    parts = body.split()
    if len(parts) not in (3, 4):
        raise TraceParseError(line_no, f"expected 3 or 4 fields, got {len(parts)}")
    try:
        cycle = int(parts[0], 10)
    except ValueError:
        raise TraceParseError(line_no, f"bad cycle {parts[0]!r}") from None
    if cycle < 0 or cycle >= 1 << 64:
        raise TraceParseError(line_no, f"cycle {cycle} out of u64 range")
    op = _OPS.get(parts[1])
    if op is None:
        raise TraceParseError(line_no, f"unknown op {parts[1]!r}")
    if not parts[2].lower().startswith("0x"):
        raise TraceParseError(line_no, f"address must be 0x-prefixed hex, got {parts[2]!r}")
    try:
        address = int(parts[2], 16)
    except ValueError:
        raise TraceParseError(line_no, f"bad address {parts[2]!r}") from None
    if address >= 1 << 64:
        raise TraceParseError(line_no, "address out of u64 range")
    payload = None
    if op is INVALIDATE:
        if len(parts) == 4:
            raise TraceParseError(line_no, "invalidate records take no payload")
    else:
        if len(parts) != 4:
            raise TraceParseError(line_no, f"{op.value} record requires a payload")
        if len(parts[3]) != 2 * LINE_SIZE:
            raise TraceParseError(
                line_no, f"payload must be {2 * LINE_SIZE} hex chars, got {len(parts[3])}"
            )
        try:
            payload = bytes.fromhex(parts[3])
        except ValueError:
            raise TraceParseError(line_no, "payload is not hex") from None
    return AccessRecord(cycle, op, address, payload)


def iter_trace(stream: Union[IO[str], IO[bytes], Iterable[str]]) -> Iterator[AccessRecord]:
    """Lazily parse records from a text or binary stream (or any iterable of lines)."""
    last = -1
    for line_no, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("ascii", errors="replace")
        rec = _parse_line(line_no, raw)
        if rec is None:
            continue
        if rec.cycle < last:
            raise TraceOrderError(line_no, f"cycle {rec.cycle} precedes previous cycle {last}")
        last = rec.cycle
        yield rec


def parse_trace(stream) -> list[AccessRecord]:
    if isinstance(stream, (bytes, str)):
        stream = io.StringIO(stream.decode("ascii") if isinstance(stream, bytes) else stream)
    return list(iter_trace(stream))


def read_trace(path: str | os.PathLike) -> list[AccessRecord]:
    with open(path, "r", encoding="ascii") as fh:
        return parse_trace(fh)


def write_trace(records: Iterable[AccessRecord], stream: IO[str]) -> None:
    for rec in records:
        stream.write(format_record(rec))
        stream.write("\n")


def dumps_trace(records: Iterable[AccessRecord]) -> str:
    buf = io.StringIO()
    write_trace(records, buf)
    return buf.getvalue()


def save_trace(records: Iterable[AccessRecord], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        write_trace(records, fh)


# --------------------------------------------------------------------------
# synthetic workloads


def repeat_value(pattern: bytes) -> bytes:
    """Tile ``pattern`` into a 64-byte line value."""
    if not pattern or LINE_SIZE % len(pattern):
        raise ConfigError("pattern length must divide 64")
    return pattern * (LINE_SIZE // len(pattern))


def hot_bank_skew(num_banks: int, hot_banks: Sequence[int], hot_mass: float) -> list[tuple[int, float]]:
    """``hot_mass`` spread evenly over ``hot_banks``, the rest evenly over the others."""
    hot = sorted(set(hot_banks))
    cold = [b for b in range(num_banks) if b not in set(hot)]
    if not hot or any(b < 0 or b >= num_banks for b in hot):
        raise ConfigError("hot_banks must be non-empty bank ids below num_banks")
    if not cold:
        return [(b, 1.0 / len(hot)) for b in hot]
    out = [(b, hot_mass / len(hot)) for b in hot]
    out += [(b, (1.0 - hot_mass) / len(cold)) for b in cold]
    return sorted(out)


@dataclass
class WorkloadSpec:
    """Knobs of the synthetic LLC request stream.

    Besides the bank skew and value mix, the generator needs a few shape
    parameters: the per-bank footprint ``lines_per_bank`` (line ``k`` of bank
    ``b`` is line address ``k * num_banks + b``), a Zipf exponent
    ``line_skew`` for reuse inside a bank (0 means uniform) and an optional
    ``warmup`` pass that reads every footprint line once before the random
    phase, the way a program touches its data when initialising it.
    """

    total_accesses: int
    bank_skew: list[tuple[int, float]]
    zero_fraction: float = 0.0
    fv_pool: list[tuple[bytes, float]] = field(default_factory=list)
    invalidate_fraction: float = 0.0
    rng_seed: int = 0
    write_fraction: float = 0.3
    num_banks: int = 64
    lines_per_bank: int = 1024
    line_skew: float = 0.0
    cycles_per_access: int = 1
    zero_fraction_by_bank: dict[int, float] = field(default_factory=dict)
    warmup: bool = False

    @property
    def address_space(self) -> int:
        """Bytes spanned by generated addresses; every address is below this."""
        return self.num_banks * self.lines_per_bank * LINE_SIZE

    def validate(self) -> None:
        if not self.bank_skew:
            raise ConfigError("bank_skew is empty")
        if self.total_accesses < 0:
            raise ConfigError("total_accesses must be >= 0")
        if self.num_banks <= 0 or self.lines_per_bank <= 0 or self.cycles_per_access <= 0:
            raise ConfigError("num_banks, lines_per_bank and cycles_per_access must be positive")
        if not 0 <= self.rng_seed < 1 << 64:
            raise ConfigError("rng_seed must be an unsigned 64-bit integer")
        total = 0.0
        for bank, p in self.bank_skew:
            if not 0 <= bank < self.num_banks:
                raise ConfigError(f"bank {bank} outside 0..{self.num_banks - 1}")
            _check_prob(f"bank_skew[{bank}]", p)
            total += p
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"bank_skew probabilities sum to {total}, not 1")
        for name in ("zero_fraction", "invalidate_fraction", "write_fraction"):
            _check_prob(name, getattr(self, name))
        if self.invalidate_fraction + self.write_fraction > 1.0 + 1e-12:
            raise ConfigError("invalidate_fraction + write_fraction exceeds 1")
        for bank, p in self.zero_fraction_by_bank.items():
            _check_prob(f"zero_fraction_by_bank[{bank}]", p)
        fv_total = 0.0
        for value, p in self.fv_pool:
            if len(value) != LINE_SIZE:
                raise ConfigError("fv_pool values must be 64 bytes")
            _check_prob("fv_pool probability", p)
            fv_total += p
        if fv_total > 1.0 + 1e-9:
            raise ConfigError(f"fv_pool probabilities sum to {fv_total} > 1")
        if self.line_skew < 0:
            raise ConfigError("line_skew must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "WorkloadSpec":
        d = dict(d)
        num_banks = int(d.get("num_banks", 64))
        skew = d.get("bank_skew")
        if isinstance(skew, dict) and "hot_banks" in skew:
            skew = hot_bank_skew(num_banks, skew["hot_banks"], float(skew["hot_mass"]))
        elif skew == "uniform":
            skew = [(b, 1.0 / num_banks) for b in range(num_banks)]
        elif isinstance(skew, dict):
            skew = [(int(k), float(v)) for k, v in skew.items()]
        elif skew is not None:
            skew = [(int(b), float(p)) for b, p in skew]
        d["bank_skew"] = skew or []
        pool = []
        for entry in d.get("fv_pool", []) or []:
            if "value" in entry:
                value = bytes.fromhex(entry["value"])
            elif "repeat" in entry:
                value = repeat_value(bytes.fromhex(entry["repeat"]))
            else:
                raise ConfigError("fv_pool entries need 'value' or 'repeat'")
            pool.append((value, float(entry["p"])))
        d["fv_pool"] = pool
        d["zero_fraction_by_bank"] = {
            int(k): float(v) for k, v in (d.get("zero_fraction_by_bank") or {}).items()
        }
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown workload keys: {sorted(extra)}")
        spec = cls(**d)
        spec.validate()
        return spec


def _check_prob(name: str, p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"{name}={p} is not a probability")


def generate_synthetic(spec: WorkloadSpec) -> list[AccessRecord]:
    """Draw a trace from ``spec``; the same spec always yields the same trace.

    Read payloads always equal the line's current value (the last value
    written, or the value drawn the first time the line was seen), so the
    result is a consistent memory history.
    """
    spec.validate()
    rng = np.random.default_rng(spec.rng_seed)
    n = spec.total_accesses
    nb = spec.num_banks

    banks = np.array([b for b, _ in spec.bank_skew], dtype=np.int64)
    probs = np.array([p for _, p in spec.bank_skew], dtype=float)
    probs = probs / probs.sum()
    bank_draw = banks[np.searchsorted(np.cumsum(probs), rng.random(n), side="right").clip(0, len(banks) - 1)]

    ranks = np.arange(1, spec.lines_per_bank + 1, dtype=float)
    weights = ranks ** -spec.line_skew
    line_cdf = np.cumsum(weights / weights.sum())
    k_draw = np.searchsorted(line_cdf, rng.random(n), side="right").clip(0, spec.lines_per_bank - 1)
    offsets = rng.integers(0, LINE_SIZE // 8, size=n) * 8
    op_u = rng.random(n)
    value_u = rng.random(n)
    fv_u = rng.random(n)
    noise = rng.bytes(LINE_SIZE * n)

    zero_by_bank = [spec.zero_fraction_by_bank.get(b, spec.zero_fraction) for b in range(nb)]
    fv_values = [v for v, _ in spec.fv_pool]
    fv_cum = np.cumsum([p for _, p in spec.fv_pool]).tolist()
    fv_total = fv_cum[-1] if fv_cum else 0.0

    # value class per draw: 0 = zero line, 1 = FV pool entry, 2 = fresh random bytes
    z = np.asarray(zero_by_bank, dtype=float)[bank_draw]
    rest = np.where(z < 1.0, (value_u - z) / np.where(z < 1.0, 1.0 - z, 1.0), 1.0)
    vclass = np.where(value_u < z, 0, np.where(rest < fv_total, 1, 2)).tolist()
    if fv_values:
        fv_idx = np.searchsorted(fv_cum, fv_u * fv_total, side="right").clip(0, len(fv_values) - 1).tolist()
    else:
        fv_idx = None

    def draw(i: int) -> bytes:
        c = vclass[i]
        if c == 0:
            return ZERO_LINE
        if c == 1:
            return fv_values[fv_idx[i]]
        return noise[i * LINE_SIZE:(i + 1) * LINE_SIZE]

    records: list[AccessRecord] = []
    state: dict[int, bytes] = {}
    cycle = 0
    step = spec.cycles_per_access
    if spec.warmup:
        wrng = np.random.default_rng([spec.rng_seed, 1])
        for bank in sorted(b for b, p in spec.bank_skew if p > 0):
            z = zero_by_bank[bank]
            for k in range(spec.lines_per_bank):
                line = k * nb + bank
                u = wrng.random()
                if u < z:
                    value = ZERO_LINE
                elif fv_total > 0.0 and (u - z) / (1.0 - z) < fv_total:
                    j = bisect_right(fv_cum, wrng.random() * fv_total)
                    value = fv_values[min(j, len(fv_values) - 1)]
                else:
                    value = wrng.bytes(LINE_SIZE)
                state[line] = value
                records.append(AccessRecord(cycle, READ, line << 6, value))
                cycle += step

    inv = spec.invalidate_fraction
    wr = inv + spec.write_fraction
    lines = k_draw * nb + bank_draw
    line_list = lines.tolist()
    addr_list = ((lines << 6) | offsets).tolist()
    # 0 = invalidate, 1 = write, 2 = read
    op_list = np.where(op_u < inv, 0, np.where(op_u < wr, 1, 2)).tolist()
    append = records.append
    new = tuple.__new__
    for i in range(n):
        o = op_list[i]
        if o == 2:
            line = line_list[i]
            value = state.get(line)
            if value is None:
                value = state[line] = draw(i)
            append(new(AccessRecord, (cycle, READ, addr_list[i], value)))
        elif o == 1:
            value = state[line_list[i]] = draw(i)
            append(new(AccessRecord, (cycle, WRITE, addr_list[i], value)))
        else:
            append(new(AccessRecord, (cycle, INVALIDATE, addr_list[i], None)))
        cycle += step
    return records
