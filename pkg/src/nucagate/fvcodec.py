"""Frequent-value table, static profiling and the one-hot (1-LWC) line codec."""

from __future__ import annotations

import os
from collections import Counter
from typing import Iterable, Sequence

from .errors import ConfigError, InvalidCodewordError
from .trace import LINE_SIZE, AccessRecord, Op

MAX_ENTRIES = 32


class FvTable:
    """Immutable ordered table of up to 32 distinct 64-byte line values.

    Entry ``i`` is encoded as the 32-bit word with only bit ``i`` set.
    """

    __slots__ = ("_entries", "_index", "_codes")

    def __init__(self, entries: Iterable[bytes] = ()):
        entries = tuple(bytes(e) for e in entries)
        if len(entries) > MAX_ENTRIES:
            raise ConfigError(f"FV table holds at most {MAX_ENTRIES} values, got {len(entries)}")
        index = {}
        for i, e in enumerate(entries):
            if len(e) != LINE_SIZE:
                raise ConfigError(f"FV entry {i} is {len(e)} bytes, expected {LINE_SIZE}")
            if e in index:
                raise ConfigError(f"FV entry {i} duplicates entry {index[e]}")
            index[e] = i
        self._entries = entries
        self._index = index
        self._codes = {v: 1 << i for v, i in index.items()}

    @property
    def entries(self) -> tuple[bytes, ...]:
        return self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __contains__(self, value) -> bool:
        return value in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, FvTable) and self._entries == other._entries

    def __hash__(self) -> int:
        return hash(self._entries)

    def __repr__(self) -> str:
        return f"FvTable({len(self)} entries)"

    def index_of(self, value: bytes) -> int | None:
        return self._index.get(value)

    def codeword(self, i: int) -> int:
        if not 0 <= i < len(self._entries):
            raise IndexError(i)
        return 1 << i

    def encode(self, value: bytes) -> int | None:
        return self._codes.get(value)

    def decode(self, codeword: int) -> bytes:
        if codeword <= 0 or codeword & (codeword - 1):
            raise InvalidCodewordError(f"codeword {codeword:#010x} does not have weight 1")
        i = codeword.bit_length() - 1
        if i >= len(self._entries):
            raise InvalidCodewordError(
                f"codeword {codeword:#010x} selects entry {i}; table has {len(self._entries)}"
            )
        return self._entries[i]

    # serialization: one 128-hex-char value per line, line number = entry index

    def dumps(self) -> str:
        return "".join(e.hex() + "\n" for e in self._entries)

    @classmethod
    def loads(cls, text: str) -> "FvTable":
        entries = []
        for n, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            if len(line) != 2 * LINE_SIZE:
                raise ConfigError(f"FV table line {n}: expected {2 * LINE_SIZE} hex chars")
            try:
                entries.append(bytes.fromhex(line))
            except ValueError:
                raise ConfigError(f"FV table line {n}: not hex") from None
        return cls(entries)

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path: str | os.PathLike) -> "FvTable":
        with open(path, "r", encoding="ascii") as fh:
            return cls.loads(fh.read())


def encode(value: bytes, table: FvTable) -> int | None:
    return table.encode(value)


def decode(codeword: int, table: FvTable) -> bytes:
    return table.decode(codeword)


def value_histogram(trace: Iterable[AccessRecord]) -> Counter:
    """Occurrences of each payload over R and W records, in first-seen order."""
    counts: Counter = Counter()
    for rec in trace:
        if rec.op is not Op.INVALIDATE and rec.payload is not None:
            counts[rec.payload] += 1
    return counts


def profile_frequent_values(trace: Iterable[AccessRecord], k: int = MAX_ENTRIES) -> FvTable:
    """Static profiling: the ``k`` most common payloads, earlier first-seen wins ties."""
    if not 0 <= k <= MAX_ENTRIES:
        raise ConfigError(f"k must be in 0..{MAX_ENTRIES}")
    counts = value_histogram(trace)
    # Counter keeps insertion (first-seen) order and sorted() is stable
    ranked = sorted(counts.items(), key=lambda kv: -kv[1])
    return FvTable(v for v, _ in ranked[:k])


def fv_accesses_per_kilo(trace: Sequence[AccessRecord], table: FvTable) -> float:
    """FV-carrying R/W records per thousand trace records."""
    if not trace:
        return 0.0
    hits = sum(1 for r in trace if r.payload is not None and r.payload in table)
    return 1000.0 * hits / len(trace)
