"""
Statistic- and threshold-based bank power-off
=============================================

Both policies look at each bank's complete accesses (accesses that really
touch the data array) at the end of every interval.  The statistic policy
gates every bank below the mean when the spread is large; the threshold
policy gates banks under 0.5% of the traffic, at most 16 of them.
"""

from nucagate import CacheGeometry, Mode, PolicyConfig, PolicyName, SimConfig, TsvConfig
from nucagate import WorkloadSpec, generate_synthetic, hot_bank_skew
from nucagate.simulator import Simulator

hot = [0, 11, 22, 33, 44, 55]
cold_zero = {b: 0.9 for b in range(64) if b not in hot}
spec = WorkloadSpec(
    total_accesses=150_000,
    bank_skew=hot_bank_skew(64, hot, 0.95),
    zero_fraction=0.2,
    zero_fraction_by_bank=cold_zero,
    rng_seed=1,
    lines_per_bank=256,
    line_skew=0.5,
    cycles_per_access=50,
    warmup=True,
)
trace = generate_synthetic(spec)

results = {}
for policy in (PolicyName.STATISTIC, PolicyName.THRESHOLD):
    cfg = SimConfig(
        geometry=CacheGeometry(),
        mode=Mode.NIZ,
        policy=policy,
        policy_cfg=PolicyConfig(interval_cycles=1_000_000),
        tsv=TsvConfig(enabled=False),
        name=policy.value,
    )
    sim = Simulator(cfg)
    results[policy] = sim.run(trace)

# active ratio per interval: the statistic policy keeps only the hot banks on
for policy, res in results.items():
    ratios = " ".join("%.2f" % row["active_ratio"] for row in res.rows)
    print("%-9s active ratio per interval: %s" % (policy.value, ratios))

for policy, res in results.items():
    print("%-9s mean active ratio %.3f, miss rate %.4f, extra misses %d"
          % (policy.value, res.active_ratio_mean, res.miss_rate, res.extra_misses))

# the decision log records every boundary
print()
print(results[PolicyName.STATISTIC].decisions[1].format()[:120], "...")
