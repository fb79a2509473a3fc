"""Lattices, reservoir couplings and one-particle Hamiltonians.

Sites of a box ``N1 x ... x Nd`` are numbered row-major with the transport
coordinate ``nu_1`` slowest, so the plane ``nu_1 = i`` is the contiguous index
block ``[(i-1)*S, i*S)`` with ``S = N2*...*Nd``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .potentials import ValidationError


@dataclass(frozen=True)
class LatticeSpec:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in np.atleast_1d(self.dims))
        if not dims or any(n < 1 for n in dims):
            raise ValidationError(f"lattice dimensions must be positive, got {self.dims!r}")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def chain(cls, N: int) -> "LatticeSpec":
        return cls((N,))

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return math.prod(self.dims)

    @property
    def length(self) -> int:
        """Extent N1 along the transport direction."""
        return self.dims[0]

    @property
    def cross_section(self) -> int:
        return math.prod(self.dims[1:])

    def plane(self, i: int) -> np.ndarray:
        """Site indices of the plane nu_1 = i (1-based i)."""
        if not 1 <= i <= self.length:
            raise IndexError(f"plane {i} outside 1..{self.length}")
        S = self.cross_section
        return np.arange((i - 1) * S, i * S)

    def plane_projector(self, i: int) -> np.ndarray:
        """Diagonal of the projection onto the plane nu_1 = i."""
        p = np.zeros(self.size)
        p[self.plane(i)] = 1.0
        return p


@dataclass(frozen=True)
class CouplingSpec:
    """Injection/extraction rates at both ends and the dephasing rate."""

    alpha_in_l: float = 1.0
    alpha_out_l: float = 0.0
    alpha_in_r: float = 0.0
    alpha_out_r: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        for name in ("alpha_in_l", "alpha_out_l", "alpha_in_r", "alpha_out_r", "beta"):
            x = float(getattr(self, name))
            if not (math.isfinite(x) and x >= 0):
                raise ValidationError(f"{name} must be a finite nonnegative number, got {x!r}")
            object.__setattr__(self, name, x)

    @property
    def zeta_l(self) -> float:
        return self.alpha_in_l + self.alpha_out_l

    @property
    def zeta_r(self) -> float:
        return self.alpha_in_r + self.alpha_out_r

    @property
    def delta(self) -> float:
        """alpha_in_l*alpha_out_r - alpha_out_l*alpha_in_r; fixes the sign of the current."""
        return self.alpha_in_l * self.alpha_out_r - self.alpha_out_l * self.alpha_in_r

    def with_beta(self, beta: float) -> "CouplingSpec":
        return CouplingSpec(self.alpha_in_l, self.alpha_out_l, self.alpha_in_r,
                            self.alpha_out_r, beta)

    def require_driven(self) -> None:
        if self.zeta_l == 0 and self.zeta_r == 0:
            raise ValidationError("at least one of the four reservoir rates must be nonzero")

    def require_both_ends(self) -> None:
        if not (self.zeta_l > 0 and self.zeta_r > 0):
            raise ValidationError("currents need alpha_in+alpha_out > 0 at both ends")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.alpha_in_l, self.alpha_out_l, self.alpha_in_r, self.alpha_out_r, self.beta)


def build_hamiltonian_1d(v) -> np.ndarray:
    """Tridiagonal chain Hamiltonian: -1 hopping, ``v`` on the diagonal, Dirichlet ends."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size < 1:
        raise ValidationError("chain needs at least one site")
    h = np.diag(v)
    idx = np.arange(v.size - 1)
    h[idx, idx + 1] = -1.0
    h[idx + 1, idx] = -1.0
    return h


def adjacency(lattice: LatticeSpec) -> sp.csr_matrix:
    """Nearest-neighbour adjacency of the box (open boundaries), site order as above."""
    A = None
    for k, n in enumerate(lattice.dims):
        path = sp.diags([np.ones(n - 1), np.ones(n - 1)], [-1, 1], shape=(n, n))
        term = sp.identity(1)
        for j, m in enumerate(lattice.dims):
            term = sp.kron(term, path if j == k else sp.identity(m))
        A = term if A is None else A + term
    return sp.csr_matrix(A)


def build_hamiltonian_dd(lattice: LatticeSpec, v, sparse: bool = False):
    """Box Hamiltonian ``-(adjacency) + diag(v)``; ``v`` follows the row-major site order."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != lattice.size:
        raise ValidationError(f"potential has {v.size} values, lattice has {lattice.size} sites")
    H = sp.diags(v) - adjacency(lattice)
    return sp.csr_matrix(H) if sparse else H.toarray()


def build_effective_hd(h: np.ndarray, c: CouplingSpec, lattice: LatticeSpec | None = None) -> np.ndarray:
    """Non-Hermitian ``h - i*zeta_l*P_1 - i*zeta_r*P_N1`` with P the end-plane projectors."""
    c.require_driven()
    h = np.asarray(h)
    if lattice is None:
        lattice = LatticeSpec.chain(h.shape[0])
    if h.shape != (lattice.size, lattice.size):
        raise ValidationError("Hamiltonian shape does not match lattice")
    gamma = c.zeta_l * lattice.plane_projector(1) + c.zeta_r * lattice.plane_projector(lattice.length)
    return h.astype(complex) - 1j * np.diag(gamma)
