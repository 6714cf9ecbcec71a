import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nucagate import AccessRecord, WorkloadSpec, generate_synthetic, hot_bank_skew, parse_trace
from nucagate.errors import ConfigError, TraceOrderError, TraceParseError
from nucagate.trace import (
    INVALIDATE,
    READ,
    WRITE,
    ZERO_LINE,
    dumps_trace,
    read_trace,
    repeat_value,
    save_trace,
)

ZERO_HEX = "00" * 64


def test_parse_write_with_zero_payload():
    (rec,) = parse_trace(f"100 W 0x1000 {ZERO_HEX}\n")
    assert rec == AccessRecord(100, WRITE, 0x1000, ZERO_LINE)


def test_parse_invalidate_has_no_payload():
    (rec,) = parse_trace("100 I 0x1000")
    assert rec.op is INVALIDATE and rec.payload is None and rec.address == 0x1000


def test_comments_and_blank_lines_are_skipped():
    text = f"# header\n\n5 R 0x40 {ZERO_HEX}  # trailing\n"
    assert parse_trace(text) == [AccessRecord(5, READ, 0x40, ZERO_LINE)]


def test_three_line_round_trip_is_byte_identical(tmp_path):
    text = f"1 W 0x40 {'ab' * 64}\n2 R 0x40 {'ab' * 64}\n2 I 0x80\n"
    recs = parse_trace(text)
    assert len(recs) == 3
    assert dumps_trace(recs) == text
    path = tmp_path / "t.trace"
    save_trace(recs, path)
    assert path.read_bytes() == text.encode()
    assert read_trace(path) == recs


def test_parse_accepts_bytes_and_binary_streams():
    data = f"7 W 0x0 {ZERO_HEX}\n".encode()
    assert parse_trace(data) == parse_trace(io.BytesIO(data).read())


@pytest.mark.parametrize(
    "line",
    [
        "100 X 0x1000",
        "abc R 0x0 " + ZERO_HEX,
        "100 R 0x1000",
        "100 I 0x1000 " + ZERO_HEX,
        "100 W 0x1000 " + ZERO_HEX[:-2],
        "100 W 0x1000 " + "zz" * 64,
        "100 W 4096 " + ZERO_HEX,
        "100",
    ],
)
def test_malformed_lines_report_their_line_number(line):
    with pytest.raises(TraceParseError) as exc:
        parse_trace(f"1 I 0x0\n{line}\n")
    assert exc.value.line_no == 2


def test_decreasing_cycle_is_an_ordering_error():
    with pytest.raises(TraceOrderError) as exc:
        parse_trace("5 I 0x0\n4 I 0x40\n")
    assert exc.value.line_no == 2


_payload = st.binary(min_size=64, max_size=64)
_record = st.tuples(
    st.integers(0, 1000),
    st.sampled_from([READ, WRITE, INVALIDATE]),
    st.integers(0, 2**64 - 1),
    _payload,
)


@given(st.lists(_record, max_size=30))
def test_round_trip_property(raw):
    recs, cycle = [], 0
    for dc, op, addr, payload in raw:
        cycle += dc
        recs.append(AccessRecord(cycle, op, addr, None if op is INVALIDATE else payload))
    assert parse_trace(dumps_trace(recs)) == recs


def _spec(**kw):
    base = dict(total_accesses=1000, bank_skew=[(0, 1.0)], rng_seed=7)
    base.update(kw)
    return WorkloadSpec(**base)


def test_degenerate_skew_maps_everything_to_bank_zero():
    recs = generate_synthetic(_spec())
    assert len(recs) == 1000
    assert all((r.address >> 6) % 64 == 0 for r in recs)


def test_zero_fraction_one_gives_zero_payloads():
    recs = generate_synthetic(_spec(zero_fraction=1.0, bank_skew=hot_bank_skew(64, [1, 2], 0.5)))
    assert all(r.payload == ZERO_LINE for r in recs if r.payload is not None)


def test_vips_shape_bank_share():
    hot = [0, 11, 22, 33, 44, 55]
    recs = generate_synthetic(
        WorkloadSpec(total_accesses=10**6, bank_skew=hot_bank_skew(64, hot, 0.95), rng_seed=42)
    )
    banks = np.array([r.address for r in recs]) >> 6 & 63
    share = np.isin(banks, hot).mean()
    assert abs(share - 0.95) <= 0.005


def test_same_seed_same_trace_and_different_seed_differs():
    spec = _spec(zero_fraction=0.3, invalidate_fraction=0.1, bank_skew=hot_bank_skew(64, [3], 0.5))
    assert generate_synthetic(spec) == generate_synthetic(spec)
    other = _spec(zero_fraction=0.3, invalidate_fraction=0.1, bank_skew=hot_bank_skew(64, [3], 0.5), rng_seed=8)
    assert generate_synthetic(other) != generate_synthetic(spec)


@given(
    seed=st.integers(0, 2**64 - 1),
    lines=st.integers(1, 64),
    zf=st.floats(0, 1),
    inv=st.floats(0, 0.5),
    warm=st.booleans(),
)
def test_generated_traces_are_well_formed(seed, lines, zf, inv, warm):
    spec = WorkloadSpec(
        total_accesses=200, bank_skew=hot_bank_skew(16, [0, 5], 0.8), zero_fraction=zf,
        invalidate_fraction=inv, rng_seed=seed, num_banks=16, lines_per_bank=lines, warmup=warm,
        fv_pool=[(repeat_value(b"\x01\x02"), 0.5)],
    )
    recs = generate_synthetic(spec)
    assert len(recs) == 200 + (16 * lines if warm else 0)
    assert all(0 <= r.address < spec.address_space for r in recs)
    assert all(a.cycle <= b.cycle for a, b in zip(recs, recs[1:]))
    assert all((r.payload is None) == (r.op is INVALIDATE) for r in recs)
    # reads always see the line's latest value
    state = {}
    for r in recs:
        line = r.address >> 6
        if r.op is WRITE:
            state[line] = r.payload
        elif r.op is READ:
            assert state.setdefault(line, r.payload) == r.payload


def test_empirical_zero_fraction_converges():
    recs = generate_synthetic(_spec(total_accesses=50_000, zero_fraction=0.4, write_fraction=1.0))
    zero = np.mean([r.payload == ZERO_LINE for r in recs])
    assert abs(zero - 0.4) < 0.01


@pytest.mark.parametrize(
    "kw",
    [
        dict(bank_skew=[]),
        dict(bank_skew=[(0, 0.5)]),
        dict(bank_skew=[(64, 1.0)]),
        dict(zero_fraction=1.5),
        dict(invalidate_fraction=-0.1),
        dict(fv_pool=[(b"\x00" * 10, 0.1)]),
    ],
)
def test_invalid_specs_are_configuration_errors(kw):
    with pytest.raises(ConfigError):
        generate_synthetic(_spec(**kw))


def test_workload_from_dict_forms():
    spec = WorkloadSpec.from_dict({
        "total_accesses": 10, "bank_skew": {"hot_banks": [1], "hot_mass": 0.9},
        "fv_pool": [{"repeat": "ff", "p": 0.2}, {"value": "00" * 64, "p": 0.1}],
    })
    assert dict(spec.bank_skew)[1] == pytest.approx(0.9)
    assert spec.fv_pool[0][0] == b"\xff" * 64
    assert WorkloadSpec.from_dict({"total_accesses": 1, "bank_skew": "uniform", "num_banks": 4}).bank_skew[3] == (3, 0.25)
    with pytest.raises(ConfigError):
        WorkloadSpec.from_dict({"total_accesses": 1, "bank_skew": "uniform", "bogus": 1})
