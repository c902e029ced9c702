"""Equilibrium Bernoulli measures: sampling, local pressure and Gibbs ratios.

Run with ``python demos/bernoulli_equilibrium_states.py``.
"""

import math

import numpy as np

from nsdyn.bernoulli import (
    equilibrium_from_potential,
    gibbs_constant,
    gibbs_log_ratios,
    lln_diagnostic,
    local_pressure_seq,
    perturb,
    pressure_proxy,
    sample_path,
)
from nsdyn.potentials import PotentialSeq
from nsdyn.pressure import sn_sequence
from nsdyn.seqspace import AlphabetSeq

m = AlphabetSeq.periodic([2, 3])
a = PotentialSeq.first_coord(m, [], [[0.0, math.log(2)], [0.5, -1.0, 2.0]])
mu = equilibrium_from_potential(m, a)
print("equilibrium vectors:", [np.round(p, 4).tolist() for p in mu.vectors])

# along any path the local pressure equals the capacity s_n
omega = sample_path(mu, seed=1, n=40)
gap = np.max(np.abs(local_pressure_seq(mu, a, omega, 40) - sn_sequence(m, a, 40).s_values))
print(f"max |local pressure - s_n| along a sampled path: {gap:.1e}")

# entropy along typical paths concentrates at the average entropy
stats = lln_diagnostic(mu, None, n=2000, samples=300, seed=7)
print(f"local entropy: mean {stats.mean:.5f}, expected {stats.expected:.5f}, "
      f"stderr {stats.stderr:.1e}, verdict {stats.verdict}")

# the Gibbs ratio mu([omega|n]) / exp(-n s_n + S_n f) is 1 for the equilibrium ...
proxy = pressure_proxy(a)
lr = gibbs_log_ratios(mu, a, sample_path(mu, 3, 1000), 1000, proxy)
print(f"equilibrium: max |log ratio| over n <= 1000: {np.max(np.abs(lr)):.1e}")

# ... and drifts when one probability is moved by 0.01: slowly along typical
# paths, exponentially along the worst ones
bad = perturb(mu, 0, 0.01)
print("perturbed, worst ratio at n = 10, 100, 1000 -> "
      + ", ".join(f"{gibbs_constant(bad, a, n, proxy):.3g}" for n in (10, 100, 1000)))
for task in range(3):
    lr = gibbs_log_ratios(bad, a, sample_path(bad, 3, 1000, task=task), 1000, proxy)
    print(f"perturbed, path {task}: log ratio at n = 100, 500, 1000 -> "
          + ", ".join(f"{lr[k - 1]:+.3f}" for k in (100, 500, 1000)))
