"""Crosstalk model of a TSV bundle.

Words on the bundle are Python ints: bit ``i`` is the logic level of wire
``i``.  Two views are provided:

* per-wire coupling on a square grid (coupling factor, effective
  capacitance, RC delay), where every wire has up to four vertical/horizontal
  and four diagonal neighbours;
* interconnect energy of a word stream, counted empirically transition by
  transition, and its closed-form expectation from transition probabilities.
  Both count coupling only towards wire ``i+1`` (north) and ``i+2``
  (northwest).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, ContractViolation

COUPLING_RATIO = 5.54  # C_c / C_L
DIAGONAL_RATIO = 1.385  # C_d / C_L
FV_WIRES = 32


@dataclass
class TsvBundle:
    width: int = 3
    num_wires: int = 128
    c_base: float = 1.0
    c1: float = 1.0
    c2: float = 0.5
    r: float = 1.0
    vdd: float = 1.0
    c_load: float = 1.0
    c_c: float | None = None
    c_d: float | None = None
    # enforce the reference diagonal/adjacent coupling ratio c2 = 0.5 * c1
    fixed_coupling_ratio: bool = False
    prev_word: int = 0

    def __post_init__(self):
        if self.width < 2:
            raise ConfigError("bundle width must be >= 2")
        if self.num_wires < 3:
            raise ConfigError("bundle needs at least 3 wires")
        for name in ("c_base", "c1", "c2", "r", "vdd", "c_load"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.c_c is None:
            self.c_c = COUPLING_RATIO * self.c_load
        if self.c_d is None:
            self.c_d = DIAGONAL_RATIO * self.c_load
        if self.fixed_coupling_ratio and abs(self.c2 - 0.5 * self.c1) > 1e-12 * max(1.0, self.c1):
            raise ConfigError("fixed-ratio bundles need c2 = 0.5 * c1")
        self._mask = (1 << self.num_wires) - 1

    def neighbors(self, i: int) -> tuple[list[int], list[int]]:
        """(vertical/horizontal, diagonal) neighbour indices of wire ``i`` on the grid."""
        if not 0 <= i < self.num_wires:
            raise IndexError(i)
        w = self.width
        row, col = divmod(i, w)
        vh, diag = [], []
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == dc == 0:
                    continue
                r, c = row + dr, col + dc
                if c < 0 or c >= w or r < 0:
                    continue
                j = r * w + c
                if j >= self.num_wires:
                    continue
                (diag if dr and dc else vh).append(j)
        return sorted(vh), sorted(diag)

    def drive(self, words: Sequence[int]) -> float:
        """Energy of driving ``words`` after the current bus state; updates the state.

        Same accounting as :func:`stream_energy`, without building the breakdown.
        """
        n = self.num_wires
        m1 = self._mask >> 1
        m2 = self._mask >> 2
        prev = self.prev_word
        tr = ev1 = ev2 = 0
        for cur in words:
            t = prev ^ cur
            if t:
                tr += t.bit_count()
                d1 = (cur ^ (cur >> 1)) & m1
                d2 = (cur ^ (cur >> 2)) & m2
                ev1 += (d1 & t).bit_count() + (d1 & (t >> 1)).bit_count()
                ev2 += (d2 & t).bit_count() + (d2 & (t >> 2)).bit_count()
            prev = cur
        self.prev_word = prev
        v2 = self.vdd * self.vdd
        return v2 * (self.c_load * tr + self.c_c * ev1 + self.c_d * ev2)

    def transfer(self, words: Sequence[int]) -> "StreamEnergy":
        """Drive ``words`` after the current bus state and remember the last one."""
        energy = stream_energy([self.prev_word, *words], self)
        if words:
            self.prev_word = words[-1]
        return energy


def _bit(word, i: int) -> int:
    if isinstance(word, (int, np.integer)):
        return (int(word) >> i) & 1
    return int(word[i])


def delta(v_i_before: float, v_i_after: float, v_j_before: float, v_j_after: float, vdd: float = 1.0) -> int:
    """Coupling factor of a wire pair over one transition: 0, 1 or 2."""
    dv_i = v_i_after - v_i_before
    dv_j = v_j_after - v_j_before
    return int(round(abs((dv_i - dv_j) / vdd)))


def effective_capacitance(bundle: TsvBundle, i: int, before, after) -> float:
    """Load seen by wire ``i`` when the bundle goes from word ``before`` to ``after``."""
    vh, diag = bundle.neighbors(i)
    bi, ai = _bit(before, i), _bit(after, i)
    s1 = sum(delta(bi, ai, _bit(before, j), _bit(after, j)) for j in vh)
    s2 = sum(delta(bi, ai, _bit(before, j), _bit(after, j)) for j in diag)
    return bundle.c_base + bundle.c1 * s1 + bundle.c2 * s2


def crosstalk_delay(bundle: TsvBundle, i: int, before, after) -> float:
    """RC delay of wire ``i``; zero when the wire does not switch."""
    if _bit(before, i) == _bit(after, i):
        return 0.0
    return bundle.r * effective_capacitance(bundle, i, before, after)


@dataclass
class StreamEnergy:
    transitions: int = 0
    north_events: int = 0
    northwest_events: int = 0
    steps: int = 0
    num_wires: int = 0
    transition_energy: float = 0.0
    north_energy: float = 0.0
    northwest_energy: float = 0.0

    @property
    def coupling_energy(self) -> float:
        return self.north_energy + self.northwest_energy

    @property
    def total(self) -> float:
        return self.transition_energy + self.coupling_energy

    def transition_rate(self) -> float:
        """Mean transitions per wire per step."""
        if not self.steps:
            return 0.0
        return self.transitions / (self.steps * self.num_wires)

    def per_wire(self) -> float:
        """Mean energy per TSV per step, each coupling term averaged over the pairs that exist."""
        if not self.steps:
            return 0.0
        n = self.num_wires
        return (
            self.transition_energy / n + self.north_energy / (n - 1) + self.northwest_energy / (n - 2)
        ) / self.steps

    def __iadd__(self, other: "StreamEnergy") -> "StreamEnergy":
        self.transitions += other.transitions
        self.north_events += other.north_events
        self.northwest_events += other.northwest_events
        self.steps += other.steps
        self.num_wires = self.num_wires or other.num_wires
        self.transition_energy += other.transition_energy
        self.north_energy += other.north_energy
        self.northwest_energy += other.northwest_energy
        return self


def as_words(words, num_wires: int) -> list[int]:
    """Normalise ints, bit arrays or a 2-D 0/1 array to a list of int words."""
    if isinstance(words, np.ndarray) and words.ndim == 2:
        if words.shape[1] != num_wires:
            raise ContractViolation(f"words are {words.shape[1]} bits wide, bundle has {num_wires} wires")
        weights = [1 << i for i in range(num_wires)]
        return [sum(w for w, b in zip(weights, row) if b) for row in words.tolist()]
    out = []
    limit = 1 << num_wires
    for w in words:
        if isinstance(w, (int, np.integer)):
            w = int(w)
            if w < 0 or w >= limit:
                raise ContractViolation(f"word {w:#x} does not fit on {num_wires} wires")
            out.append(w)
        else:
            bits = list(w)
            if len(bits) != num_wires:
                raise ContractViolation(f"word has {len(bits)} bits, bundle has {num_wires} wires")
            out.append(sum(1 << i for i, b in enumerate(bits) if b))
    return out


def stream_energy(words: Iterable, bundle: TsvBundle) -> StreamEnergy:
    """Energy of driving ``words`` back to back over the bundle.

    Each step charges C_L*V^2 per switching wire, and for the pairs (i, i+1)
    and (i, i+2) that end at different levels, C_c*V^2 (resp. C_d*V^2) per
    wire of the pair that switched.
    """
    n = bundle.num_wires
    ws = as_words(words, n)
    m1 = (1 << (n - 1)) - 1
    m2 = (1 << (n - 2)) - 1
    tr = ev1 = ev2 = 0
    for prev, cur in zip(ws, ws[1:]):
        t = prev ^ cur
        if not t:
            continue
        tr += t.bit_count()
        d1 = (cur ^ (cur >> 1)) & m1
        d2 = (cur ^ (cur >> 2)) & m2
        ev1 += (d1 & t).bit_count() + (d1 & (t >> 1)).bit_count()
        ev2 += (d2 & t).bit_count() + (d2 & (t >> 2)).bit_count()
    v2 = bundle.vdd * bundle.vdd
    return StreamEnergy(
        tr, ev1, ev2, max(0, len(ws) - 1), n,
        bundle.c_load * v2 * tr, bundle.c_c * v2 * ev1, bundle.c_d * v2 * ev2,
    )


def line_words(value: bytes, num_wires: int = 128) -> list[int]:
    """Split a line value into bundle-wide words, lowest bytes first."""
    step = num_wires // 8
    return [int.from_bytes(value[k:k + step], "little") for k in range(0, len(value), step)]


def fv_word(prev_word: int, codeword: int, active_wires: int = FV_WIRES) -> int:
    """Bus word for a one-hot transfer: the low ``active_wires`` carry the code, the rest hold."""
    mask = (1 << active_wires) - 1
    return (prev_word & ~mask) | (codeword & mask)


# --------------------------------------------------------------------------
# closed form


def transition_probability(p_fv: float, p_trans_fv: float, p_trans_uncoded: float = 0.5) -> float:
    """Per-wire switching probability of a mix of coded FV and uncoded transfers."""
    return p_fv * p_trans_fv + (1.0 - p_fv) * p_trans_uncoded


def coupled_transitions(p_trans: float) -> float:
    """Expected switching events of a coupled pair, E[T] over T in {0, 1, 2}."""
    return 2 * (1 - p_trans) * p_trans + 2 * p_trans ** 2


@dataclass(frozen=True)
class TransitionStats:
    p_trans: float
    p_fv: float = 0.0

    def __post_init__(self):
        for name in ("p_trans", "p_fv"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name}={v} is not a probability")

    @property
    def e_t(self) -> float:
        return coupled_transitions(self.p_trans)

    @classmethod
    def from_mix(cls, p_fv: float, p_trans_fv: float, p_trans_uncoded: float = 0.5) -> "TransitionStats":
        return cls(transition_probability(p_fv, p_trans_fv, p_trans_uncoded), p_fv)


@dataclass(frozen=True)
class AnalyticEnergy:
    p_trans: float
    e_t: float
    transition: float
    north: float
    northwest: float

    @property
    def total(self) -> float:
        return self.transition + self.north + self.northwest


def analytic_energy(stats: TransitionStats, bundle: TsvBundle, p_unequal: float = 0.5) -> AnalyticEnergy:
    """Expected energy per TSV per transfer."""
    v2 = bundle.vdd * bundle.vdd
    e_t = stats.e_t
    return AnalyticEnergy(
        stats.p_trans,
        e_t,
        bundle.c_load * v2 * stats.p_trans,
        bundle.c_c * v2 * p_unequal * e_t,
        bundle.c_d * v2 * p_unequal * e_t,
    )
