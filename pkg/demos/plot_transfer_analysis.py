"""
Transfer matrices, Lyapunov exponents and the noiseless current
===============================================================

Without dephasing the current is an energy integral of the squared corner
entry of the resolvent of ``h_D``.  Up to constants that integrand is
``1/||T_N(E)||^2``, so the current decays at most like ``exp(-2 N min L)``.
"""

import math

import numpy as np

from latcurrent import (CouplingSpec, PotentialSpec, build_hamiltonian_1d,
                        current_via_energy_integral, lyapunov, make_generator, min_lyapunov,
                        realization, sample_potential, stationary_current, transfer_integral)

###############################################################################
# The free chain at E = 3 has L = acosh(3/2).

print(lyapunov(3.0, PotentialSpec.zero(), N=10_000).mean, math.acosh(1.5))

###############################################################################
# The energy integral reproduces the linear solve.

spec = PotentialSpec.bernoulli(1.0, seed=1)
v = sample_potential(spec, 20).values
g = make_generator(build_hamiltonian_1d(v), CouplingSpec(1, 0, 0, 1))
print(stationary_current(g), current_via_energy_integral(g, tol=1e-12))

###############################################################################
# For the Anderson model the averaged log of the transfer integral decays
# linearly in N, at a rate below twice the smallest Lyapunov exponent.

Ns = np.arange(10, 61, 10)
logs = [np.mean([math.log(transfer_integral(sample_potential(realization(spec, k), N).values))
                 for k in range(20)]) for N in Ns]
rate = -np.polyfit(Ns, logs, 1)[0]
L = min_lyapunov(spec, N=1000, samples=10)
print(f"rate {rate:.3f}, 2 L_min = {2 * L.mean:.3f} at E = {L.energy:.2f}")
