"""Transfer matrices, boundary resolvent entries and Lyapunov exponents.

The noiseless current is an energy integral of |<e_1, (h_D - E)^{-1} e_N>|^2,
and that corner entry is controlled by the 2x2 transfer matrix of the chain.
Everything here is one-dimensional.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .lattice import CouplingSpec
from .lindblad import GeneratorHandle, SolverError
from .potentials import (PotentialSpec, PotentialValues, ValidationError, realization,
                         sample_potential)
from .quadrature import integrate

RENORM_EVERY = 8


@dataclass(frozen=True)
class LyapunovEstimate:
    energy: float
    mean: float
    std_error: float
    N: int
    samples: int


@dataclass(frozen=True)
class EnergyGrid:
    """Energies on [-R, R] (nodes, optional quadrature weights) and the tail bound beyond R."""

    R: float
    nodes: np.ndarray
    weights: np.ndarray | None = None
    tail_bound: float = 0.0

    @classmethod
    def uniform(cls, C: float, spacing: float = 0.01, margin: float = 1.0) -> "EnergyGrid":
        R = C + margin
        n = int(round(2 * R / spacing)) + 1
        return cls(R, np.linspace(-R, R, n))


def _as_values(v) -> np.ndarray:
    if isinstance(v, PotentialValues):
        return v.values
    return np.asarray(v, dtype=float).reshape(-1)


def sup_constant(v) -> float:
    """C = 2 + sup|v|; the chain spectrum lies in [-C, C]."""
    v = _as_values(v)
    return 2.0 + (float(np.max(np.abs(v))) if v.size else 0.0)


def _modified_potential(v: np.ndarray, couplings: CouplingSpec) -> np.ndarray:
    vt = v.astype(complex)
    vt[0] -= 1j * couplings.zeta_l
    vt[-1] -= 1j * couplings.zeta_r
    return vt


def transfer_matrix(E: complex, v, boundary_modified: bool = False,
                    couplings: CouplingSpec | None = None) -> np.ndarray:
    """T_N(E) = A_N ... A_1 with A_n = [[v(n) - E, -1], [1, 0]].

    With ``boundary_modified`` the end potentials become v(1) - i*zeta_l and
    v(N) - i*zeta_r (both shifts land on the single site when N = 1).
    """
    v = _as_values(v)
    if v.size < 1:
        raise ValidationError("transfer matrix needs N >= 1")
    if boundary_modified:
        if couplings is None:
            raise ValidationError("boundary-modified transfer matrix needs couplings")
        v = _modified_potential(v, couplings)
    T = np.eye(2, dtype=complex)
    for x in v:
        T = np.array([[(x - E) * T[0, 0] - T[1, 0], (x - E) * T[0, 1] - T[1, 1]],
                      [T[0, 0], T[0, 1]]])
    return T


def norm2x2(T) -> np.ndarray:
    """Operator 2-norm of (a stack of) 2x2 matrices from the singular-value closed form."""
    T = np.asarray(T)
    fro2 = np.sum(np.abs(T) ** 2, axis=(-2, -1))
    det = np.abs(T[..., 0, 0] * T[..., 1, 1] - T[..., 0, 1] * T[..., 1, 0])
    disc = np.sqrt(np.maximum(fro2 ** 2 - 4 * det ** 2, 0.0))
    return np.sqrt(0.5 * (fro2 + disc))


def _log_norm_rows(a, b, c, d, logscale):
    # log of the 2-norm of [[a, b], [c, d]] times exp(logscale); det = 1 assumed away
    fro2 = np.abs(a) ** 2 + np.abs(b) ** 2 + np.abs(c) ** 2 + np.abs(d) ** 2
    det = np.abs(a * d - b * c)
    smax2 = 0.5 * (fro2 + np.sqrt(np.maximum(fro2 ** 2 - 4 * det ** 2, 0.0)))
    return logscale + 0.5 * np.log(smax2)


def log_transfer_norm(E, V) -> np.ndarray:
    """log ||T_N(E)|| for every energy in ``E`` and every row of ``V``.

    ``E`` has shape (m,) and ``V`` shape (s, N) (or (N,)); the result has shape
    (m, s) (or (m,)).  Products are renormalized every few steps, so N can be
    large.
    """
    E = np.atleast_1d(np.asarray(E, dtype=float))
    V = np.asarray(V, dtype=float)
    single = V.ndim == 1
    V = np.atleast_2d(V)
    shape = (E.size, V.shape[0])
    a = np.ones(shape)
    b = np.zeros(shape)
    c = np.zeros(shape)
    d = np.ones(shape)
    logscale = np.zeros(shape)
    Ecol = E[:, None]
    for n in range(V.shape[1]):
        x = V[None, :, n] - Ecol
        a, b, c, d = x * a - c, x * b - d, a, b
        if n % RENORM_EVERY == RENORM_EVERY - 1:
            s = np.maximum(np.maximum(np.abs(a), np.abs(b)), np.maximum(np.abs(c), np.abs(d)))
            a, b, c, d = a / s, b / s, c / s, d / s
            logscale += np.log(s)
    out = _log_norm_rows(a, b, c, d, logscale)
    return out[:, 0] if single else out


def inverse_norm_squared(E, v) -> np.ndarray:
    """1/||T_N(E)||^2 on an array of energies (underflows gracefully to 0)."""
    return np.exp(-2.0 * log_transfer_norm(E, _as_values(v)))


# -- resolvent corner entries --------------------------------------------------

def resolvent_entries(E: float, g: GeneratorHandle):
    """(g11, g1N, gN1, gNN) with g_ij = <e_i, (h_D - E)^{-1} e_j>, by dense solve."""
    if g.lattice.d != 1:
        raise ValidationError("resolvent corner entries are defined for chains only")
    g.couplings.require_both_ends()
    n = g.n
    A = g.h_d - E * np.eye(n)
    rhs = np.zeros((n, 2), dtype=complex)
    rhs[0, 0] = 1.0
    rhs[-1, 1] = 1.0
    try:
        G = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"h_D - E singular at E={E!r}") from exc
    return G[0, 0], G[0, 1], G[-1, 0], G[-1, 1]


def transfer_identity_residual(E: float, g: GeneratorHandle) -> float:
    """Scaled residual of T~_N(E) [[g11, g1N], [1, 0]] = [[0, 1], [gN1, gNN]].

    The residual is divided by ||T~|| ||M|| + ||RHS|| so that it measures
    relative (backward) error; ||T~_N(E)|| grows like |E|^N off the spectrum.
    """
    g11, g1N, gN1, gNN = resolvent_entries(E, g)
    T = transfer_matrix(E, np.diag(g.h), True, g.couplings)
    M = np.array([[g11, g1N], [1.0, 0.0]])
    rhs = np.array([[0.0, 1.0], [gN1, gNN]])
    scale = np.linalg.norm(T, 2) * np.linalg.norm(M, 2) + np.linalg.norm(rhs, 2)
    return float(np.linalg.norm(T @ M - rhs, 2) / scale)


def log_abs_det_hd(E, v, couplings: CouplingSpec) -> np.ndarray:
    """log|det(h_D - E)| via the three-term continuant recurrence (vectorized in E)."""
    vt = _modified_potential(_as_values(v), couplings)
    E = np.asarray(E, dtype=float)
    p_prev = np.ones(E.shape, dtype=complex)
    p = vt[0] - E + 0j
    logscale = np.zeros(E.shape)
    for n in range(1, vt.size):
        p, p_prev = (vt[n] - E) * p - p_prev, p
        if n % RENORM_EVERY == 0:
            s = np.maximum(np.abs(p), np.abs(p_prev))
            s = np.where(s > 0, s, 1.0)
            p, p_prev = p / s, p_prev / s
            logscale += np.log(s)
    return logscale + np.log(np.abs(p))


def corner_resolvent_fast(E, v, couplings: CouplingSpec, log: bool = False):
    """|g_1N(E)| = 1/|det(h_D - E)| (the (N,1) minor is triangular with unit diagonal).

    With ``log=True`` returns log|g_1N(E)|, which never underflows.
    """
    la = -log_abs_det_hd(E, v, couplings)
    return la if log else np.exp(la)


def energy_integral_tail(N: int, rho: float, R: float) -> float:
    """Bound on the integral of |g_1N|^2 over |E| > R when all eigenvalues of h_D have modulus <= rho."""
    x = R - rho
    if x <= 0:
        return math.inf
    return 2.0 * x ** (1 - 2 * N) / (2 * N - 1)


_GRADING = np.array([-256, -64, -16, -4, -1, 0, 1, 4, 16, 64, 256])
RESONANCE_MAX_SITES = 2000


def resonance_breakpoints(lam, R: float) -> np.ndarray:
    """Quadrature breakpoints graded geometrically around complex resonances ``lam``.

    A resonance contributes a Lorentzian of width |Im lam| which can be far
    narrower than any panel the error estimate would ever inspect.
    """
    lam = np.asarray(lam)
    pts = (lam.real[:, None] + np.abs(lam.imag)[:, None] * _GRADING).ravel()
    return pts[np.abs(pts) < R]


def current_via_energy_integral(g: GeneratorHandle, tol: float = 1e-9,
                                R: float | None = None, max_R: float = 1e7,
                                return_info: bool = False):
    """Noiseless current 4*Delta/(2*pi) * integral of |g_1N(E)|^2 over the real line.

    The integral over [-R, R] is adaptive Gauss-Kronrod (breakpoints at the real
    parts of the h_D eigenvalues); beyond R, |g_1N(E)|^2 <= (|E| - rho)^{-2N}
    with rho the spectral radius of h_D.  R is doubled until that tail bound is
    below a quarter of the budget.  The tail midpoint is added, so the absolute
    error on the current is at most ``tol``.
    """
    c, lat = g.couplings, g.lattice
    if c.beta != 0:
        raise ValidationError("the energy-integral formula holds only for beta = 0 "
                              "(dephasing couples the resolvent entries)")
    if lat.d != 1:
        raise ValidationError("the energy-integral formula is implemented for chains")
    c.require_both_ends()
    N = lat.length
    if N < 2:
        raise ValidationError("current needs N >= 2")
    delta = c.delta
    if delta == 0:
        return (0.0, {"R": 0.0, "tail_bound": 0.0, "quad_error": 0.0}) if return_info else 0.0
    scale = 4.0 * abs(delta) / (2.0 * math.pi)
    tol_I = tol / scale
    v = np.diag(g.h).copy()
    lam = np.linalg.eigvals(g.h_d)
    rho = float(np.max(np.abs(lam)))
    R = sup_constant(v) + 3.0 if R is None else float(R)
    R = max(R, rho + 1.0)
    while energy_integral_tail(N, rho, R) > tol_I / 4:
        R *= 2
        if R > max_R:
            raise SolverError(f"tail bound still above tolerance at R={R:g}")
    tail = energy_integral_tail(N, rho, R)

    def f(E):
        return np.exp(2.0 * corner_resolvent_fast(E, v, c, log=True))

    pts = np.concatenate([[-R, R, -rho, rho], resonance_breakpoints(lam, R)])
    q = integrate(f, pts, atol=tol_I / 2, max_panels=200000)
    if not q.converged:
        raise SolverError(f"energy quadrature did not converge (error {q.error:.3e})")
    value = scale * (q.value + 0.5 * tail) * math.copysign(1.0, delta)
    if return_info:
        return value, {"R": R, "tail_bound": scale * tail, "quad_error": scale * q.error}
    return value


# -- transfer integral ---------------------------------------------------------

def transfer_tail_bound(N: int, C: float, R: float) -> float:
    """Closed-form integral of 2(|E| + C)^2/(|E| - C)^{2N} over |E| >= R (both sides).

    Uses ||T_N(E)|| >= (|E| - C)^N / (sqrt(2)(|E| + C)) for |E| > C; finite for N >= 2.
    """
    if N < 2:
        raise ValidationError("the transfer-integral tail bound needs N >= 2")
    a = R - C
    if a <= 0:
        raise ValidationError(f"truncation R={R} must exceed C={C}")
    # (x + 2C)^2 / x^{2N} with x = |E| - C
    one_side = (2.0 * a ** (3 - 2 * N) / (2 * N - 3)
                + 8.0 * C * a ** (2 - 2 * N) / (2 * N - 2)
                + 8.0 * C * C * a ** (1 - 2 * N) / (2 * N - 1))
    return 2.0 * one_side


def transfer_integral(v, N: int | None = None, R: float | None = None,
                      rtol: float = 1e-8, return_info: bool = False):
    """Integral of 1/||T_N(E)||^2 over the real line.

    Adaptive quadrature on [-R, R] (default R = C + 3, C = 2 + sup|v|) plus the
    midpoint of the closed-form tail bound beyond R.
    """
    v = _as_values(v)
    if N is None:
        N = v.size
    if N > v.size:
        raise ValidationError(f"potential has {v.size} values, N={N} requested")
    v = v[:N]
    C = sup_constant(v)
    R = C + 3.0 if R is None else float(R)
    if R <= C:
        raise ValidationError(f"truncation R={R} must exceed C={C}")
    tail = transfer_tail_bound(N, C, R)

    def f(E):
        return inverse_norm_squared(E, v)

    pts = np.linspace(-R, R, 33)
    if N <= RESONANCE_MAX_SITES:
        # 1/||T_N||^2 is comparable to |g_1N|^2 for any fixed end couplings, so
        # the resonances of the unit-coupled chain mark its narrow peaks; first
        # order in the coupling, E_k - i(|psi_k(1)|^2 + |psi_k(N)|^2)
        if N == 1:
            lam = np.array([v[0] - 2j])
        else:
            e, psi = sla.eigh_tridiagonal(v, -np.ones(N - 1))
            lam = e - 1j * (psi[0] ** 2 + psi[-1] ** 2)
        pts = np.concatenate([pts, resonance_breakpoints(lam, R)])
    q = integrate(f, pts, atol=1e-300, rtol=rtol, max_panels=200000)
    value = q.value + 0.5 * tail
    if return_info:
        return value, {"R": R, "C": C, "tail_bound": tail, "quad_error": q.error,
                       "converged": q.converged}
    return value


# -- Lyapunov exponents --------------------------------------------------------

def _realization_matrix(spec: PotentialSpec, N: int, samples: int, start: int = 0) -> np.ndarray:
    return np.stack([sample_potential(realization(spec, start + k), N).values
                     for k in range(samples)])


def lyapunov_samples(E, spec: PotentialSpec, N: int, samples: int, start: int = 0) -> np.ndarray:
    """(1/N) log||T_{N,omega}(E)|| for each energy (rows) and realization (columns)."""
    if samples < 1 or N < 1:
        raise ValidationError("need N >= 1 and samples >= 1")
    V = _realization_matrix(spec, N, samples, start)
    return log_transfer_norm(E, V) / N


def _estimate(E: float, vals: np.ndarray, N: int) -> LyapunovEstimate:
    s = vals.size
    se = float(np.std(vals, ddof=1) / math.sqrt(s)) if s > 1 else 0.0
    return LyapunovEstimate(float(E), float(np.mean(vals)), se, N, s)


def lyapunov(E: float, spec: PotentialSpec, N: int, samples: int = 1) -> LyapunovEstimate:
    """Mean and standard error of (1/N) log||T_{N,omega}(E)|| over realizations."""
    if not spec.is_dynamical:
        raise ValidationError("Lyapunov exponents need a dynamically defined ensemble")
    vals = lyapunov_samples([E], spec, N, samples)[0]
    return _estimate(E, vals, N)


def min_lyapunov(spec: PotentialSpec, grid: EnergyGrid | None = None, N: int = 1000,
                 samples: int = 10, refine: bool = True) -> LyapunovEstimate:
    """Grid minimum of the Lyapunov estimate; the returned record carries E_min.

    Default grid: spacing 0.01 on [-(C+1), C+1]; the minimum is then refined
    once on a 10x finer grid over the neighbouring cells.
    """
    if grid is None:
        grid = EnergyGrid.uniform(2.0 + spec.sup_bound())
    nodes = np.asarray(grid.nodes, dtype=float)
    if nodes.size == 0:
        raise ValidationError("empty energy grid")
    V = _realization_matrix(spec, N, samples)
    vals = log_transfer_norm(nodes, V) / N
    means = vals.mean(axis=1)
    i = int(np.argmin(means))
    E_best, row = nodes[i], vals[i]
    if refine and nodes.size > 1:
        h = float(np.min(np.diff(np.sort(nodes))))
        fine = np.linspace(E_best - h, E_best + h, 21)
        fvals = log_transfer_norm(fine, V) / N
        j = int(np.argmin(fvals.mean(axis=1)))
        if fvals[j].mean() < row.mean():
            E_best, row = fine[j], fvals[j]
    return _estimate(E_best, row, N)


@lru_cache(maxsize=64)
def _reference_lyapunov(spec_json: str, E: float, length: int) -> float:
    spec = PotentialSpec.from_json(spec_json)
    v = sample_potential(realization(spec, 0), length).values
    # scalar loop: ratio form is enough for the growth rate of a long chain
    x0, x1 = 1.0, 0.0
    logscale = 0.0
    for n, vn in enumerate(v.tolist()):
        x0, x1 = (vn - E) * x0 - x1, x0
        if n % RENORM_EVERY == RENORM_EVERY - 1:
            s = abs(x0) + abs(x1)
            x0 /= s
            x1 /= s
            logscale += math.log(s)
    return (logscale + math.log(math.hypot(x0, x1))) / length


def reference_lyapunov(spec: PotentialSpec, E: float, length: int = 10**6) -> float:
    """Single long-chain estimate of L(E) (one deterministic realization)."""
    return _reference_lyapunov(spec.to_json(), float(E), int(length))


def ld_deviation_probability(spec: PotentialSpec, E: float, N: int, epsilon: float,
                             samples: int = 1000, L_ref: float | None = None,
                             reference_length: int = 10**6) -> float:
    """Empirical P(|(1/N) log||T_{N,omega}(E)|| - L(E)| >= epsilon)."""
    if L_ref is None:
        L_ref = reference_lyapunov(spec, E, reference_length)
    vals = lyapunov_samples([E], spec, N, samples, start=1)[0]
    return float(np.mean(np.abs(vals - L_ref) >= epsilon))
