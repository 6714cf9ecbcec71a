"""
Baseline, NIZ and NFV side by side
==================================

One trace, five configurations.  Energies are normalised to the first
(never-gated baseline) row.  The energy parameters are dimensionless
placeholders, so only the relative picture means anything.
"""

from nucagate import CacheGeometry, EnergyParams, Mode, PolicyConfig, PolicyName, SimConfig, TsvConfig
from nucagate import WorkloadSpec, generate_synthetic, hot_bank_skew, storage_overhead
from nucagate.simulator import compare
from nucagate.trace import repeat_value

hot = [0, 11, 22, 33, 44, 55]
spec = WorkloadSpec(
    total_accesses=80_000,
    bank_skew=hot_bank_skew(64, hot, 0.95),
    zero_fraction=0.25,
    zero_fraction_by_bank={b: 0.9 for b in range(64) if b not in hot},
    fv_pool=[(repeat_value(bytes.fromhex("ffffffff")), 0.1)],
    rng_seed=3,
    lines_per_bank=128,
    cycles_per_access=100,
    warmup=True,
)
trace = generate_synthetic(spec)


def config(mode, policy):
    return SimConfig(
        geometry=CacheGeometry(),
        mode=mode,
        policy=policy,
        policy_cfg=PolicyConfig(interval_cycles=1_000_000),
        energy=EnergyParams(),
        tsv=TsvConfig(enabled=True),
        fv_table_path="auto" if mode is Mode.NFV else None,
        name=f"{mode.value}-{policy.value}",
    )


configs = [
    config(Mode.BASELINE, PolicyName.NONE),
    config(Mode.NIZ, PolicyName.STATISTIC),
    config(Mode.NIZ, PolicyName.THRESHOLD),
    config(Mode.NFV, PolicyName.STATISTIC),
    config(Mode.NFV, PolicyName.THRESHOLD),
]
rows = compare(configs, trace)
print("%-20s %8s %8s %8s %8s" % ("config", "energy", "EDP", "miss", "active"))
for r in rows:
    print("%-20s %8.3f %8.3f %8.4f %8.3f"
          % (r["name"], r["normalized_energy"], r["normalized_edp"], r["miss_rate"], r["active_ratio_mean"]))

# what the extra hardware costs in storage on a 32 MiB LLC
big = CacheGeometry(num_banks=64, bank_capacity=512 * 1024)
for mode in (Mode.NIZ, Mode.NFV):
    o = storage_overhead(big, mode)
    extra = o.flag_bytes + o.fv_table_bytes
    print("%s: %d KiB of flags and tables (%.2f%%), counters %d B"
          % (mode.value, extra // 1024, 100 * o.fraction(extra), o.counter_bytes))
