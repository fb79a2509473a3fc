"""One-particle reduction of the boundary-driven, dephasing Lindblad dynamics.

The two-point function ``R`` (``R[j, i] = <a_i^* a_j>``) obeys

    dR/dt = l(R) + 2*alpha_in_l*P_1 + 2*alpha_in_r*P_N1,
    l(X)  = -i[h, X] - {G, X} + beta*(diag(X) - X),   G = zeta_l*P_1 + zeta_r*P_N1,

where ``P_1``/``P_N1`` project onto the two end planes of the lattice.  All
spectral values of ``l`` have negative real part, so ``R(t)`` relaxes to
``R_inf = -l^{-1}(source)`` from any initial state.

Matrix norms are Frobenius throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .lattice import CouplingSpec, LatticeSpec, build_effective_hd
from .potentials import ValidationError


class SolverError(ArithmeticError):
    """A numerical routine failed to reach its accuracy contract."""


class IntegrationError(SolverError):
    pass


SPECTRUM_MAX_SITES = 40
_DENSE_PROPAGATOR_MAX_SITES = 32
_EIG_COND_LIMIT = 1e8


@dataclass(frozen=True, eq=False)
class GeneratorHandle:
    """Immutable bundle (h, couplings, lattice) with lazily cached factorizations."""

    h: np.ndarray = field(repr=False)
    couplings: CouplingSpec
    lattice: LatticeSpec
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        h = np.array(self.h, dtype=float)
        if h.shape != (self.lattice.size, self.lattice.size):
            raise ValidationError(
                f"Hamiltonian of shape {h.shape} does not match lattice {self.lattice.dims}")
        if not np.array_equal(h, h.T):
            raise ValidationError("Hamiltonian must be real symmetric")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)
        self.couplings.require_driven()

    @property
    def n(self) -> int:
        return self.lattice.size

    @cached_property
    def gamma(self) -> np.ndarray:
        """Diagonal of zeta_l*P_1 + zeta_r*P_N1."""
        lat, c = self.lattice, self.couplings
        return c.zeta_l * lat.plane_projector(1) + c.zeta_r * lat.plane_projector(lat.length)

    @cached_property
    def source(self) -> np.ndarray:
        """2*alpha_in_l*P_1 + 2*alpha_in_r*P_N1 as a dense matrix."""
        lat, c = self.lattice, self.couplings
        d = 2 * c.alpha_in_l * lat.plane_projector(1) + 2 * c.alpha_in_r * lat.plane_projector(lat.length)
        return np.diag(d).astype(complex)

    @cached_property
    def h_d(self) -> np.ndarray:
        return build_effective_hd(self.h, self.couplings, self.lattice)

    @cached_property
    def _hd_eig(self):
        lam, V = np.linalg.eig(self.h_d)
        if np.linalg.cond(V) > _EIG_COND_LIMIT:
            return None
        return lam, V, np.linalg.inv(V)

    @cached_property
    def superoperator(self) -> sp.csc_matrix:
        """Sparse matrix of l acting on row-major vectorized matrices."""
        n = self.n
        h = sp.csr_matrix(self.h)
        eye = sp.identity(n, format="csr")
        G = sp.diags(self.gamma)
        L = -1j * (sp.kron(h, eye) - sp.kron(eye, h.T)) - (sp.kron(G, eye) + sp.kron(eye, G))
        beta = self.couplings.beta
        if beta:
            mask = np.zeros(n * n)
            mask[:: n + 1] = 1.0
            L = L + beta * sp.diags(mask - 1.0)
        return sp.csc_matrix(L)

    @cached_property
    def _lu(self):
        try:
            return spla.splu(self.superoperator)
        except RuntimeError as exc:  # SuperLU reports exact singularity this way
            raise SolverError(f"generator is singular: {exc}") from exc

    @property
    def step_cap(self) -> float:
        """Largest RK4 step used by :func:`evolve` (0.1 over a bound on the generator scale)."""
        c = self.couplings
        hnorm = float(np.max(np.sum(np.abs(self.h), axis=1)))
        return 0.1 / (hnorm + c.zeta_l + c.zeta_r + c.beta)


def make_generator(h, couplings: CouplingSpec, lattice: LatticeSpec | None = None) -> GeneratorHandle:
    h = np.asarray(h)
    if lattice is None:
        lattice = LatticeSpec.chain(h.shape[0])
    return GeneratorHandle(h, couplings, lattice)


def _check_shape(g: GeneratorHandle, X) -> np.ndarray:
    X = np.asarray(X)
    if X.shape != (g.n, g.n):
        raise ValidationError(f"matrix of shape {X.shape} does not match lattice size {g.n}")
    return X


def apply_generator(g: GeneratorHandle, X) -> np.ndarray:
    """Return l(X)."""
    X = _check_shape(g, X).astype(complex, copy=False)
    h, G = g.h, g.gamma
    out = -1j * (h @ X - X @ h) - (G[:, None] * X + X * G[None, :])
    beta = g.couplings.beta
    if beta:
        out += beta * (np.diag(np.diag(X)) - X)
    return out


def _solve_eig(g: GeneratorHandle, S: np.ndarray):
    # beta = 0: l(X) = -i(h_D X - X h_D^*), diagonal in the eigenbasis of h_D
    eig = g._hd_eig
    if eig is None:
        return None
    lam, V, Vinv = eig
    if np.any(lam.imag >= 0):  # a mode decoupled from both reservoirs: l is singular
        return None
    St = Vinv @ S @ Vinv.conj().T
    Xt = 1j * St / (lam[:, None] - lam.conj()[None, :])
    return V @ Xt @ V.conj().T


def _solve_sylvester(g: GeneratorHandle, S: np.ndarray) -> np.ndarray:
    hd = g.h_d
    with np.errstate(all="ignore"):
        return sla.solve_sylvester(hd, -hd.conj().T, 1j * S)


def _solve_vectorized(g: GeneratorHandle, S: np.ndarray, refine: int = 2) -> np.ndarray:
    n = g.n
    b = S.reshape(-1)
    lu = g._lu
    x = lu.solve(b)
    for _ in range(refine):
        r = b - g.superoperator @ x
        x = x + lu.solve(r)
    return x.reshape(n, n)


def stationary_solve(g: GeneratorHandle, S, method: str = "auto") -> np.ndarray:
    """Solve l(X) = S.

    ``method="auto"`` uses the eigenbasis of h_D when beta = 0 (falling back to a
    Bartels-Stewart Sylvester solve if that basis is ill-conditioned) and a
    sparse LU of the vectorized generator otherwise.  ``"vectorized"`` forces
    the LU route for any beta.
    """
    S = _check_shape(g, S).astype(complex)
    if method not in ("auto", "vectorized", "eig", "sylvester"):
        raise ValidationError(f"unknown solve method {method!r}")
    beta = g.couplings.beta
    if method in ("eig", "sylvester") and beta:
        raise ValidationError(f"method {method!r} needs beta = 0")
    X = None
    if method == "eig" or (method == "auto" and beta == 0):
        X = _solve_eig(g, S)
        if X is not None and not _rel_residual(g, X, S) <= 1e-11:
            X = None
        if X is None:
            method = "sylvester"
    if method == "sylvester":
        X = _solve_sylvester(g, S)
    if X is None:
        X = _solve_vectorized(g, S)
    if np.array_equal(S, S.conj().T):
        X = 0.5 * (X + X.conj().T)
    res = _rel_residual(g, X, S)
    if not res <= 1e-10:  # also catches NaN
        raise SolverError(f"stationary solve residual {res:.3e} exceeds 1e-10")
    return X


def _rel_residual(g: GeneratorHandle, X, S) -> float:
    s = np.linalg.norm(S)
    r = np.linalg.norm(apply_generator(g, X) - S)
    return r / s if s else r


def stationary_two_point(g: GeneratorHandle) -> np.ndarray:
    """Long-time limit R_inf = -l^{-1}(source); independent of the initial state."""
    src = g.source
    if not np.any(src):
        return np.zeros((g.n, g.n), dtype=complex)
    return -stationary_solve(g, src)


# -- time evolution ------------------------------------------------------------

class _RK4Map:
    """One classical RK4 step of dy/dt = Ly + s as a dense affine map y -> Py + q.

    Repeated squaring of the map advances 2^k steps in k matrix products, which
    reproduces the stepwise RK4 iterate exactly (up to rounding).
    """

    def __init__(self, g: GeneratorHandle, dt: float):
        L = g.superoperator.toarray()
        s = g.source.reshape(-1)
        m = L.shape[0]
        Z = dt * L
        Z2 = Z @ Z
        Z3 = Z2 @ Z
        eye = np.eye(m)
        self.P = eye + Z + Z2 / 2 + Z3 / 6 + (Z3 @ Z) / 24
        self.q = dt * ((eye + Z / 2 + Z2 / 6 + Z3 / 24) @ s)
        self.dt = dt
        self._powers = [(self.P, self.q)]

    def power(self, k: int):
        while len(self._powers) <= k:
            P, q = self._powers[-1]
            self._powers.append((P @ P, P @ q + q))
        return self._powers[k]

    def advance(self, y: np.ndarray, nsteps: int) -> np.ndarray:
        k = 0
        while nsteps:
            if nsteps & 1:
                P, q = self.power(k)
                y = P @ y + q
            nsteps >>= 1
            k += 1
        return y


def _rk4_dense(g: GeneratorHandle, R0: np.ndarray, dt: float, nsteps: int) -> np.ndarray:
    key = ("rk4", dt)
    M = g._cache.get(key)
    if M is None:
        M = g._cache[key] = _RK4Map(g, dt)
    return M.advance(R0.reshape(-1), nsteps).reshape(g.n, g.n)


def _rk4_steps(g: GeneratorHandle, R0: np.ndarray, dt: float, nsteps: int) -> np.ndarray:
    src = g.source
    R = R0.copy()
    for _ in range(nsteps):
        k1 = apply_generator(g, R) + src
        k2 = apply_generator(g, R + 0.5 * dt * k1) + src
        k3 = apply_generator(g, R + 0.5 * dt * k2) + src
        k4 = apply_generator(g, R + dt * k3) + src
        R = R + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return R


def _rk4(g, R0, dt, nsteps):
    if g.n <= _DENSE_PROPAGATOR_MAX_SITES:
        return _rk4_dense(g, R0, dt, nsteps)
    return _rk4_steps(g, R0, dt, nsteps)


def evolve(g: GeneratorHandle, R0, t: float, dt: float | None = None,
           rtol: float = 1e-8, min_dt: float = 1e-7, return_info: bool = False):
    """Integrate the two-point equation from ``R0`` over a time ``t``.

    Fixed-step RK4 with step ``dt`` (default: ``g.step_cap``).  The run is
    repeated with half the step (Richardson) until the estimated error is at
    most ``rtol * max(t, 1) * max(|source|, |R0|)``; halving below ``min_dt``
    raises :class:`IntegrationError`.  With ``return_info`` the pair
    ``(R, {"dt": ..., "error_estimate": ..., "steps": ...})`` is returned.
    """
    R0 = _check_shape(g, R0).astype(complex)
    t = float(t)
    if not (t >= 0 and math.isfinite(t)):
        raise ValidationError(f"time must be finite and nonnegative, got {t!r}")
    if t == 0:
        return (R0.copy(), {"dt": 0.0, "error_estimate": 0.0, "steps": 0}) if return_info else R0.copy()
    cap = g.step_cap if dt is None else float(dt)
    nsteps = max(1, math.ceil(t / cap))
    scale = max(np.linalg.norm(g.source), np.linalg.norm(R0), 1e-300)
    tol = rtol * max(t, 1.0) * scale
    coarse = _rk4(g, R0, t / nsteps, nsteps)
    while True:
        fine = _rk4(g, R0, t / (2 * nsteps), 2 * nsteps)
        err = np.linalg.norm(fine - coarse) * 16 / 15
        if err <= tol:
            break
        nsteps *= 2
        if t / (2 * nsteps) < min_dt:
            raise IntegrationError(
                f"step size fell below {min_dt:g} (t={t:g}, last error estimate {err:.3e}, "
                f"tolerance {tol:.3e})")
        coarse = fine
    if return_info:
        return fine, {"dt": t / (2 * nsteps), "error_estimate": err, "steps": 2 * nsteps}
    return fine


def stationarity_residual(g: GeneratorHandle, R) -> float:
    """|l(R) + source|_F relative to |source|_F."""
    s = np.linalg.norm(g.source)
    r = np.linalg.norm(apply_generator(g, R) + g.source)
    return r / s if s else r


def relax(g: GeneratorHandle, R0=None, rtol: float = 1e-12, t0: float = 10.0,
          t_max: float = 1e9):
    """Evolve from ``R0`` (default 0) with doubling horizons until stationary.

    Stops when :func:`stationarity_residual` is at most ``rtol``; returns
    ``(R, t)``.
    """
    R = np.zeros((g.n, g.n), dtype=complex) if R0 is None else _check_shape(g, R0).astype(complex)
    t_total, t = 0.0, float(t0)
    while stationarity_residual(g, R) > rtol:
        if t_total > t_max:
            raise IntegrationError(f"no stationary state reached by t={t_total:g}")
        R = evolve(g, R, t)
        t_total += t
        t *= 2
    return R, t_total


# -- currents ------------------------------------------------------------------

def site_current(R, n: int, lattice: LatticeSpec | None = None) -> float:
    """Particle current from plane n to plane n+1 (1-based), 2*sum Im <e_{nu+}, R e_nu>."""
    R = np.asarray(R)
    if lattice is None:
        lattice = LatticeSpec.chain(R.shape[0])
    if R.shape != (lattice.size, lattice.size):
        raise ValidationError("two-point matrix does not match lattice")
    if not 1 <= n <= lattice.length - 1:
        raise IndexError(f"bond {n} outside 1..{lattice.length - 1}")
    S = lattice.cross_section
    nu = lattice.plane(n)
    return float(2.0 * np.sum(R[nu + S, nu].imag))


def stationary_current(g: GeneratorHandle, method: str = "auto") -> float:
    """Stationary current -4*Delta*Tr(P_1 l^{-1}(P_N1))."""
    c, lat = g.couplings, g.lattice
    c.require_both_ends()
    if lat.length < 2:
        raise ValidationError("current needs at least two planes along the transport axis")
    delta = c.delta
    if delta == 0:
        return 0.0
    P_end = np.diag(lat.plane_projector(lat.length)).astype(complex)
    X = stationary_solve(g, P_end, method=method)
    return float(-4.0 * delta * np.sum(np.diag(X)[lat.plane(1)]).real)


def current_via_ode(g: GeneratorHandle, rtol: float = 1e-12) -> float:
    """Current at bond 1 of the state reached by time integration from R = 0."""
    g.couplings.require_both_ends()
    R, _ = relax(g, rtol=rtol)
    return site_current(R, 1, g.lattice)


def vectorized_generator(g: GeneratorHandle) -> np.ndarray:
    if g.n > SPECTRUM_MAX_SITES:
        raise ValidationError(
            f"dense generator spectrum limited to {SPECTRUM_MAX_SITES} sites (got {g.n})")
    return g.superoperator.toarray()


def generator_spectrum(g: GeneratorHandle) -> np.ndarray:
    """Eigenvalues of l (|lattice|^2 of them), sorted by decreasing real part."""
    ev = np.linalg.eigvals(vectorized_generator(g))
    return ev[np.argsort(-ev.real, kind="stable")]


def slowest_rate(g: GeneratorHandle) -> float:
    """-max Re spectrum(l) > 0: the asymptotic relaxation rate."""
    return float(-generator_spectrum(g)[0].real)
