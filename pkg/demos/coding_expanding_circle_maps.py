"""Symbolic coding of x -> m(k) x mod 1 and what expansiveness looks like.

Run with ``python demos/coding_expanding_circle_maps.py``.
"""

import math
from fractions import Fraction

from nsdyn.expansive import (
    IntervalNDS,
    decode,
    encode,
    expansiveness_falsifier,
    pressure_via_orbits,
    semiconjugacy_residual,
    sue_modulus,
)
from nsdyn.potentials import PotentialSeq
from nsdyn.seqspace import AlphabetSeq

m = AlphabetSeq.periodic([2, 3])
sys = IntervalNDS(m)

x = Fraction(5, 17)
w = encode(sys, x, 12)
print(f"itinerary of {x}: {w.symbols}")
print(f"decoded left end {decode(sys, w, exact=True)} ~ {decode(sys, w):.8f}")
w = encode(sys, x, 60)
print(f"shift-then-decode vs decode-then-map, 20 steps: residual {semiconjugacy_residual(sys, w, 20):.1e}")

# doubling keeps 1/3 and 2/3 exactly 1/3 apart, so no delta >= 1/3 is expansive
doubling = IntervalNDS(AlphabetSeq.constant(2))
for delta in (0.3, 0.4):
    rep = expansiveness_falsifier(doubling, delta, J=40, grid=420)
    print(f"delta = {delta}: {rep.verdict}" + (f", e.g. {rep.witnesses[0]}" if rep.witnesses else ""))

# steps needed before eps-far points are pushed delta apart
mod = sue_modulus(doubling, 0.3, [2.0**-k for k in range(2, 9)])
print("sue modulus at delta = 0.3:", {f"2^-{round(-math.log2(e))}": n for e, n in mod.moduli.items()})

# separated and spanning counts on the circle approach the symbolic rate slowly
zero = PotentialSeq.constant(m, 0.0)
for n in (4, 8, 12):
    rep = pressure_via_orbits(sys, zero, n, 0.2)
    print(f"n = {n:2d}: (1/n) log Q_n = {rep.rate_Q:.4f}, (1/n) log P_n = {rep.rate_P:.4f}, "
          f"symbolic {(math.log(2) + math.log(3)) / 2:.4f}")
