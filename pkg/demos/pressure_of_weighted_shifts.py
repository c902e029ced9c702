"""Finite-horizon pressure of the full shift with weights, three ways.

Run with ``python demos/pressure_of_weighted_shifts.py``.
"""

import math

from nsdyn.potentials import PotentialSeq
from nsdyn.pressure import bowen_outer_measure, critical_s, packing_content, separated_P, sn_sequence
from nsdyn.seqspace import AlphabetSeq

m = AlphabetSeq.constant(2)
# symbol 2 weighs twice as much as symbol 1
a = PotentialSeq.first_coord(m, [], [[0.0, math.log(2)]])

# 1. capacity: s_n = (1/n) sum_j log sum_i exp(a_j[i]) is constant here
est = sn_sequence(m, a, 50)
print(f"s_n brackets on {est.window}: [{est.liminf_bracket:.12f}, {est.limsup_bracket:.12f}]")
print(f"log 3                     = {math.log(3):.12f}")

# 2. separated sums: an (n, e^-r) Bowen ball is a cylinder of rank n + r - 1,
# so the rates differ by (r - 1) log 3 / n and share the limit
for r in (1, 2, 3):
    rates = [math.log(separated_P(m, a, n, math.exp(-r))) / n for n in (5, 10, 20)]
    print(f"r = {r}: (1/n) log P_n at n = 5, 10, 20 -> " + ", ".join(f"{x:.4f}" for x in rates))

# 3. critical exponents of the depth-limited cover and packing sums
for fn in (bowen_outer_measure, packing_content):
    res = critical_s(fn, m, a, 6, 12, tol=1e-4)
    print(f"{fn.__name__:20s} critical s in [{res.lo:.5f}, {res.hi:.5f}]")

# below the critical exponent packings gain weight with depth, above it
# covers lose weight with depth
for s in (1.0, math.log(3), 1.2):
    pack = [packing_content(m, a, s, 4, d).value for d in (6, 9, 12)]
    cover = [bowen_outer_measure(m, a, s, 4, d).value for d in (6, 9, 12)]
    print(f"s = {s:.4f}: depth 6, 9, 12 packing " + ", ".join(f"{v:.4g}" for v in pack)
          + " | cover " + ", ".join(f"{v:.4g}" for v in cover))

# alphabets that alternate between 2 and 3 symbols: entropy (log 2 + log 3) / 2
m23 = AlphabetSeq.periodic([2, 3])
alt = sn_sequence(m23, PotentialSeq.constant(m23, 0.0), 200)
print(f"alternating alphabet: s_199 = {alt.s_values[-2]:.5f}, s_200 = {alt.s_values[-1]:.5f}, "
      f"limit = {(math.log(2) + math.log(3)) / 2:.5f}")
