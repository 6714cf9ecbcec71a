"""
Bank skew, zero lines and frequent values
=========================================

A few LLC banks take most of the requests, and zero lines and a handful of
repeated values make up a large share of the data.  This script builds a
synthetic trace with that shape and measures it.
"""

import numpy as np

from nucagate import CacheGeometry, WorkloadSpec, generate_synthetic, hot_bank_skew, profile_frequent_values
from nucagate.fvcodec import fv_accesses_per_kilo
from nucagate.trace import ZERO_LINE, repeat_value

# six hot banks share 95% of the requests, like vips
hot = [0, 11, 22, 33, 44, 55]
spec = WorkloadSpec(
    total_accesses=100_000,
    bank_skew=hot_bank_skew(64, hot, 0.95),
    zero_fraction=0.3,
    fv_pool=[(repeat_value(bytes.fromhex("ffffffff")), 0.1), (repeat_value(bytes.fromhex("01000000")), 0.05)],
    rng_seed=42,
    lines_per_bank=256,
)
trace = generate_synthetic(spec)
geometry = CacheGeometry()

banks = np.array([geometry.map_address(r.address)[0] for r in trace])
per_bank = np.bincount(banks, minlength=geometry.num_banks)
print("requests to the 6 hot banks: %.2f%%" % (100 * per_bank[hot].sum() / len(trace)))
print("busiest banks:", np.argsort(-per_bank)[:8].tolist())

# value mix seen on the interconnect (reads and writes carry a payload)
payloads = [r.payload for r in trace if r.payload is not None]
zero = sum(p == ZERO_LINE for p in payloads)
print("zero-line transfers: %.1f%%" % (100 * zero / len(payloads)))

# static profiling keeps the 32 most common values; the zero line is one of them
table = profile_frequent_values(trace)
print("FV table entries:", len(table), " zero line is entry", table.index_of(ZERO_LINE))
print("FV accesses per 1000 requests: %.1f" % fv_accesses_per_kilo(trace, table))
