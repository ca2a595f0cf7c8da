"""
The potential of a contact Hamiltonian flow
============================================

A contact Hamiltonian flow rescales the contact form, psi^* lam = exp(g) lam.
The exponent g is accumulated along each trajectory as -R[H], and it can also
be read off from the pulled-back form. This demo compares the two.
"""

import numpy as np

from contact_thermo import ContactForm, FlowMap, flow_point, pullback_exponent, torus3
from contact_thermo.fields import TrigTerm, trig_field

model = torus3()
lam = ContactForm.base(model)
H = trig_field([TrigTerm(1.0, (("cos", 0, 1),))], 3, "cos 2 pi x")
x = model.sample(np.random.default_rng(0), 8)

for dt in (2e-2, 1e-2, 5e-3):
    fm = FlowMap(H, lam, 0.5, dt)
    end, trace = flow_point(fm, x, keep_trace=False)
    g_pull = pullback_exponent(lam, fm.as_diffeomorphism(), x)
    print(f"dt={dt:<5g}  max |g_pullback - g_integrated| = {np.abs(g_pull - trace.g_values[-1]).max():.2e}")

###############################################################################
# The trace keeps the whole history of g along each orbit.
_, trace = flow_point(FlowMap(H, lam, 0.5, 0.05), x[:2])
for t, g in zip(trace.times, trace.g_values):
    print(f"t={t:4.2f}  g={g}")
