"""
Finite-N pressure of the Reeb map and a Hamiltonian map
========================================================

Greedy separated sets in the Bowen metric give lower bounds for the partition
functions. For the Reeb map the potential vanishes, so Z_N only counts points.
A Hamiltonian map carries a nonzero potential, and then beta matters.
"""

import numpy as np

from contact_thermo import ContactForm, ContactPair, pressure_estimate, torus3
from contact_thermo.fields import TrigTerm, trig_field
from contact_thermo.pressure import default_candidates

model = torus3()
lam = ContactForm.base(model)
cand = default_candidates(model, 8)

reeb = ContactPair.reeb(lam, 1.0, dt=0.1)
est = pressure_estimate(reeb, 0.0, 0.15, [1, 2, 4, 8], cand)
for N, Z, v in est.per_N:
    print(f"Reeb  N={N:2d}  Z_N={Z:8.1f}  (1/N) log Z_N={v:.4f}")

###############################################################################
# The time-0.5 map of H = cos(2 pi x), at three inverse temperatures.
H = trig_field([TrigTerm(1.0, (("cos", 0, 1),))], 3, "cos 2 pi x")
pair = ContactPair.from_flow(lam, H, 0.5, dt=0.02)
small = default_candidates(model, 5)
for beta in (-1.0, 0.0, 1.0):
    est = pressure_estimate(pair, beta, 0.2, [1, 2, 3], small)
    print(f"beta={beta:+.0f}  " + "  ".join(f"N={N}: {v:.4f}" for N, _, v in est.per_N))
