"""
Maximum entropy and the Legendrian equilibrium
===============================================

Fix the moment of cos(2 pi x). The entropy extremum is an exponential family
whose log-partition function is log I_0(p). Sweeping the multiplier traces
(q, p, z) with dz = p dq, and the midpoint residual of that relation falls
like the cube of the step.
"""

import numpy as np

from contact_thermo import ContactForm, Grid, MaxEntProblem, ObservableSystem, log_partition, normalize, solve, sweep, torus3
from contact_thermo.fields import TrigTerm, trig_field

model = torus3()
grid = Grid.uniform(model.periods, 32)
lam0 = normalize(ContactForm.base(model), grid)
F = trig_field([TrigTerm(1.0, (("cos", 0, 1),))], 3, "cos 2 pi x")
prob = MaxEntProblem(lam0, ObservableSystem([F]), grid=grid)

sol = solve(prob.with_targets([0.4]))
print("target q=0.4 -> p =", sol.p, " w =", sol.w, " entropy =", sol.entropy)
print("Newton objective history:", np.round(sol.objective_history, 12))

###############################################################################
# Legendrian residuals for two step sizes.
for steps in (50, 100, 200):
    _, rep = sweep(prob, [[2 * k / steps] for k in range(steps + 1)])
    print(f"{steps:4d} steps  max |dz - p dq| = {rep.max_residual:.3e}")

###############################################################################
# q(p) = I_1(p) / I_0(p) is increasing, so the branch never folds here.
for p in (0.5, 1.0, 2.0, 4.0):
    print(f"p={p}: q={log_partition(prob, [p]).q[0]:.6f}")
