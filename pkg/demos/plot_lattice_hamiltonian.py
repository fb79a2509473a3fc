"""
Lattices, potentials and Hamiltonians
=====================================

A box ``N1 x N2 x N3`` is numbered row-major with the transport axis slowest,
so each plane ``nu_1 = i`` is one contiguous block of sites.
"""

import numpy as np

from latcurrent import (CouplingSpec, LatticeSpec, PotentialSpec, build_effective_hd,
                        build_hamiltonian_1d, build_hamiltonian_dd, realization, sample_potential)

###############################################################################
# Potentials are described by small JSON-serializable specs.  Random ones are
# reproducible from a seed; realization k derives its own seed from it.

spec = PotentialSpec.bernoulli(1.0, seed=7)
print(spec.to_json())
for k in range(3):
    print(k, sample_potential(realization(spec, k), 10).values)

fib = PotentialSpec.fibonacci(1.0)
print("Fibonacci word:", sample_potential(fib, 13).values.astype(int))

###############################################################################
# The chain Hamiltonian is tridiagonal with hopping -1.

h = build_hamiltonian_1d(sample_potential(spec, 5).values)
print(h)

###############################################################################
# In a box every plane is coupled to the reservoirs as a whole.  The effective
# non-Hermitian Hamiltonian carries the absorption on the two end planes.

lat = LatticeSpec((3, 2, 2))
H = build_hamiltonian_dd(lat, np.zeros(lat.size))
hd = build_effective_hd(H, CouplingSpec(1, 0, 0, 1), lat)
print("plane 1:", lat.plane(1), "plane 3:", lat.plane(3))
print("imaginary part of the diagonal:", hd.diagonal().imag)
