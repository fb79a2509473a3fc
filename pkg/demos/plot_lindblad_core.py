"""
Stationary two-point function and current
=========================================

The two-point function ``R`` evolves under a linear generator ``l``.  The
stationary current follows from one solve of ``l(X) = P_N``.
"""

import numpy as np

from latcurrent import (CouplingSpec, build_hamiltonian_1d, current_via_ode, evolve,
                        generator_spectrum, make_generator, site_current, stationary_current,
                        stationary_two_point)

rng = np.random.default_rng(0)
v = rng.uniform(-1, 1, 8)
c = CouplingSpec(alpha_in_l=1.0, alpha_out_l=0.1, alpha_in_r=0.2, alpha_out_r=0.9, beta=0.5)
g = make_generator(build_hamiltonian_1d(v), c)

###############################################################################
# In the stationary state the current is the same on every bond.

R = stationary_two_point(g)
print([round(site_current(R, n), 12) for n in range(1, 8)])
print("linear solve:", stationary_current(g))

###############################################################################
# Integrating the dynamics from the empty state reaches the same value.

print("time integration:", current_via_ode(g))
for t in (0.5, 2.0, 8.0, 32.0):
    print(t, site_current(evolve(g, np.zeros((8, 8)), t), 1))

###############################################################################
# The spectrum of ``l`` lies strictly in the left half plane, which makes
# the stationary state unique and attracting.

ev = generator_spectrum(g)
print("slowest mode:", ev[0])
