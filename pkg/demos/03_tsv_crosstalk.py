"""
TSV crosstalk: coupling, delay and energy
=========================================

Wires in a TSV bundle sit on a square grid.  The load one wire sees depends
on how its neighbours switch at the same time; one-hot codes keep at most
two wires switching per transfer.
"""

import numpy as np

from nucagate import TransitionStats, TsvBundle, analytic_energy, delta, effective_capacitance, stream_energy
from nucagate.tsv import crosstalk_delay, fv_word

# coupling factor of a wire pair: same direction 0, one static 1, opposite 2
print("delta(0->1, 0->1) =", delta(0, 1, 0, 1))
print("delta(0->1, 1->0) =", delta(0, 1, 1, 0))
print("delta(0->1, static) =", delta(0, 1, 0, 0))

# wire 4 is the centre of a 3x3 bundle; every neighbour switches against it
bundle = TsvBundle(width=3, num_wires=9, c_base=1.0, c1=1.0, c2=0.5, r=2.0)
before, after = 0b111101111, 0b000010000
print("neighbours of wire 4:", bundle.neighbors(4))
print("C_eff(wire 4) =", effective_capacitance(bundle, 4, before, after))
print("delay(wire 4) =", crosstalk_delay(bundle, 4, before, after))

# random uncoded data on a 128-wire bundle
rng = np.random.default_rng(0)
wide = TsvBundle(num_wires=128, c_load=1.0)
words = [int.from_bytes(rng.bytes(16), "little") for _ in range(20_000)]
uncoded = stream_energy(words, wide)
print("uncoded transition rate: %.4f" % uncoded.transition_rate())
print("uncoded energy per TSV:  %.4f C_L V^2 (analytic %.4f)"
      % (uncoded.per_wire(), analytic_energy(TransitionStats(0.5), wide).total))

# one-hot frequent values only use the low 32 wires
word = 0
coded = [word := fv_word(word, 1 << int(i)) for i in rng.integers(0, 32, size=20_000)]
fv = stream_energy(coded, wide)
print("one-hot transition rate: %.4f" % fv.transition_rate())
print("one-hot energy per TSV:  %.4f C_L V^2" % fv.per_wire())

# closed form for a mix of FV and uncoded transfers
mix = TransitionStats.from_mix(p_fv=0.2, p_trans_fv=2 / 32)
print("mixed p_trans %.3f, e_t %.3f, energy %.4f" % (mix.p_trans, mix.e_t, analytic_energy(mix, wide).total))
print("anchor: e_t(0.378) = %.3f" % TransitionStats(0.378).e_t)
