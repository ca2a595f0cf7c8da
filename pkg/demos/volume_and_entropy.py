"""
Volumes and relative entropy of contact forms
==============================================

The base form on the unit 3-torus has volume 2 pi. Rescaling by a function f
multiplies the volume density by f^2, and the relative entropy of two forms is
the Kullback-Leibler divergence of their volumes.
"""

import math

import numpy as np

from contact_thermo import ContactForm, Grid, mass, normalize, relative_entropy, torus3
from contact_thermo.fields import TrigTerm, trig_field

model = torus3()
grid = Grid.uniform(model.periods, 32)
lam0 = ContactForm.base(model)
print("V(lam0)           =", mass(lam0, grid), " (2 pi =", 2 * math.pi, ")")

###############################################################################
# A wiggly conformal factor. Its volume follows from the f^2 rule alone.
f = trig_field([TrigTerm(1.0), TrigTerm(0.3, (("cos", 0, 1), ("sin", 2, 1)))], 3, "1+0.3 cos x sin z")
lam = ContactForm.scaled(model, f)
print("V(f lam0)         =", mass(lam, grid))

###############################################################################
# Entropy is not symmetric, and it only vanishes on equal volumes.
a, b = normalize(lam, grid), normalize(lam0, grid)
print("S(a|b), S(b|a)    =", relative_entropy(a, b, grid), relative_entropy(b, a, grid))
print("S(2 lam0 | lam0)  =", relative_entropy(ContactForm.scaled(model, 2.0), lam0, grid),
      " (16 pi log 2 =", 16 * math.pi * math.log(2), ")")
