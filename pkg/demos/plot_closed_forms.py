"""
Closed forms for the potential-free model
=========================================

With ``v = 0`` the current is a rational function of the rates: ballistic
(independent of N) without dephasing and diffusive (~1/N) with it.
"""

import numpy as np

from latcurrent import (CouplingSpec, LatticeSpec, build_hamiltonian_1d, build_hamiltonian_dd,
                        closed_form_1d, closed_form_dd, make_generator, stationary_current,
                        strong_noise_leading, znidaric_current, znidaric_map)

c = CouplingSpec(1, 0, 0, 1, beta=1.0)
for N in (10, 100, 1000):
    print(N, closed_form_1d(c, N), N * closed_form_1d(c, N))

###############################################################################
# The solver agrees with the formula, and in a box the current grows with
# the cross section.

print(stationary_current(make_generator(build_hamiltonian_1d(np.zeros(30)), c)),
      closed_form_1d(c, 30))
for dims in [(4, 1, 1), (4, 2, 1), (4, 2, 3)]:
    lat = LatticeSpec(dims)
    g = make_generator(build_hamiltonian_dd(lat, np.zeros(lat.size)), c, lat)
    print(dims, stationary_current(g), closed_form_dd(c, dims))

###############################################################################
# The symmetric-bath parametrization (Gamma, mu, gamma) is a special case.

print(znidaric_current(0.7, 0.3, 0.25, 40), closed_form_1d(znidaric_map(0.7, 0.3, 0.25), 40))

###############################################################################
# For strong dephasing beta*J tends to a limit independent of the potential.

for beta in (1e2, 1e4, 1e6):
    print(beta, beta * closed_form_1d(c.with_beta(beta), 10), strong_noise_leading(c, 10))
