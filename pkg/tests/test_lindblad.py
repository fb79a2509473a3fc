import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import simpson
from scipy.linalg import expm

from latcurrent import (CouplingSpec, IntegrationError, LatticeSpec, SolverError,
                        ValidationError, apply_generator, build_hamiltonian_1d,
                        build_hamiltonian_dd, closed_form_1d, current_via_ode, evolve,
                        generator_spectrum, make_generator, relax, site_current,
                        stationary_current, stationary_solve, stationary_two_point)
from latcurrent.lindblad import slowest_rate, stationarity_residual, vectorized_generator

from conftest import chain_generator, random_couplings, random_hermitian

STD = CouplingSpec(1, 0, 0, 1)


def explicit_generator(g, X):
    """l(X) written out entrywise from the definition."""
    h = g.h
    G = np.diag(g.gamma)
    beta = g.couplings.beta
    return -1j * (h @ X - X @ h) - (G @ X + X @ G) + beta * (np.diag(np.diag(X)) - X)


def exact_evolution(g, R0, t):
    n = g.n
    L = vectorized_generator(g)
    Rinf = stationary_two_point(g)
    return (expm(t * L) @ (R0 - Rinf).reshape(-1)).reshape(n, n) + Rinf


# -- generator -----------------------------------------------------------------

def test_apply_zero():
    g = chain_generator([0.3, -0.2, 1.0], CouplingSpec(1, 2, 0.5, 0, 0.7))
    np.testing.assert_array_equal(apply_generator(g, np.zeros((3, 3))), 0)


def test_apply_identity():
    g = chain_generator([0, 0], STD)
    np.testing.assert_allclose(apply_generator(g, np.eye(2)), -2 * np.eye(2), atol=1e-15)


def test_dephasing_off_diagonal():
    g0 = chain_generator([0, 0], STD)
    g1 = chain_generator([0, 0], STD.with_beta(1.0))
    X = np.array([[0, 1], [0, 0]], dtype=complex)
    diff = apply_generator(g1, X) - apply_generator(g0, X)
    np.testing.assert_allclose(diff, -X, atol=1e-15)


def test_apply_matches_definition(rng):
    for dims in ((5,), (3, 2)):
        lat = LatticeSpec(dims)
        g = make_generator(build_hamiltonian_dd(lat, rng.normal(size=lat.size)),
                           random_couplings(rng, beta=0.4), lat)
        X = rng.normal(size=(lat.size,) * 2) + 1j * rng.normal(size=(lat.size,) * 2)
        np.testing.assert_allclose(apply_generator(g, X), explicit_generator(g, X), atol=1e-12)
        np.testing.assert_allclose(vectorized_generator(g) @ X.reshape(-1),
                                   explicit_generator(g, X).reshape(-1), atol=1e-12)


def test_apply_shape_mismatch():
    g = chain_generator([0, 0, 0], STD)
    with pytest.raises(ValidationError):
        apply_generator(g, np.eye(2))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), N=st.integers(1, 7),
       beta=st.floats(0, 3), a=st.complex_numbers(max_magnitude=5))
def test_apply_linear_and_hermitian(seed, N, beta, a):
    rng = np.random.default_rng(seed)
    g = chain_generator(rng.normal(size=N), random_couplings(rng, beta=beta))
    X, Y = random_hermitian(rng, N), random_hermitian(rng, N)
    LX = apply_generator(g, X)
    np.testing.assert_allclose(LX, LX.conj().T, atol=1e-12)
    np.testing.assert_allclose(apply_generator(g, a * X + Y),
                               a * LX + apply_generator(g, Y), atol=1e-10)


def test_undriven_handle_rejected():
    with pytest.raises(ValidationError):
        chain_generator([0, 0], CouplingSpec(0, 0, 0, 0, 1.0))


def test_asymmetric_hamiltonian_rejected():
    with pytest.raises(ValidationError):
        make_generator(np.array([[0, 1], [0, 0]]), STD)


# -- stationary solve ----------------------------------------------------------

def test_round_trip(rng):
    for beta in (0.0, 0.9):
        g = chain_generator(rng.normal(size=8), random_couplings(rng, beta=beta))
        Y = random_hermitian(rng, 8)
        X = stationary_solve(g, apply_generator(g, Y))
        np.testing.assert_allclose(X, Y, atol=1e-9)


def test_two_site_corner_value():
    g = chain_generator([0, 0], STD)
    X = stationary_solve(g, np.diag([0, 1]))
    assert X[0, 0].real == pytest.approx(-1 / 8, abs=1e-14)
    assert abs(X[0, 0].imag) < 1e-14


def test_eig_and_vectorized_paths_agree(rng):
    for _ in range(20):
        N = int(rng.integers(2, 13))
        g = chain_generator(rng.uniform(-2, 2, N), random_couplings(rng))
        S = random_hermitian(rng, N)
        a = stationary_solve(g, S, method="eig")
        b = stationary_solve(g, S, method="vectorized")
        c = stationary_solve(g, S, method="sylvester")
        assert np.linalg.norm(a - b) <= 1e-10 * np.linalg.norm(b)
        assert np.linalg.norm(c - b) <= 1e-10 * np.linalg.norm(b)


def test_residual_and_hermiticity(rng):
    for beta in (0.0, 2.0):
        g = chain_generator(rng.normal(size=10), random_couplings(rng, beta=beta))
        S = random_hermitian(rng, 10)
        X = stationary_solve(g, S)
        assert np.linalg.norm(apply_generator(g, X) - S) <= 1e-10 * np.linalg.norm(S)
        np.testing.assert_array_equal(X, X.conj().T)


def test_eig_path_requires_noiseless():
    g = chain_generator([0, 0], STD.with_beta(1))
    with pytest.raises(ValidationError):
        stationary_solve(g, np.eye(2), method="eig")
    with pytest.raises(ValidationError):
        stationary_solve(g, np.eye(2), method="lu")


# -- stationary state ----------------------------------------------------------

def test_no_injection_gives_empty_state():
    g = chain_generator([0.1, 0.2, 0.3], CouplingSpec(0, 1, 0, 2, 0.5))
    np.testing.assert_array_equal(stationary_two_point(g), 0)


def test_no_extraction_gives_full_state(rng):
    for beta in (0.0, 0.7):
        g = chain_generator(rng.normal(size=5), CouplingSpec(0.4, 0, 1.3, 0, beta))
        np.testing.assert_allclose(stationary_two_point(g), np.eye(5), atol=1e-12)


def test_three_site_profile():
    g = chain_generator(np.zeros(3), STD)
    R = stationary_two_point(g)
    d = np.diag(R).real
    assert np.all((d >= 0) & (d <= 1))
    assert d[0] > d[2]
    Rode, _ = relax(g, rtol=1e-12)
    np.testing.assert_allclose(R, Rode, atol=1e-10)


def test_stationary_state_is_a_two_point_function(rng):
    for _ in range(20):
        N = int(rng.integers(2, 12))
        g = chain_generator(rng.uniform(-2, 2, N), random_couplings(rng, beta=rng.uniform(0, 2)))
        R = stationary_two_point(g)
        np.testing.assert_allclose(R, R.conj().T, atol=1e-12)
        ev = np.linalg.eigvalsh(R)
        assert ev.min() >= -1e-10 and ev.max() <= 1 + 1e-10


# -- time evolution ------------------------------------------------------------

def test_evolve_zero_time(rng):
    g = chain_generator([0, 0, 0], STD)
    R0 = random_hermitian(rng, 3)
    np.testing.assert_array_equal(evolve(g, R0, 0.0), R0)


@pytest.mark.parametrize("R0", [np.zeros((2, 2)), np.eye(2)])
def test_two_sites_reach_stationarity(R0):
    g = chain_generator([0, 0], STD)
    assert np.linalg.norm(evolve(g, R0, 20.0) - stationary_two_point(g)) <= 1e-6


def test_semigroup_property(rng):
    g = chain_generator(rng.normal(size=4), random_couplings(rng, beta=0.3))
    R0 = np.diag(rng.uniform(0, 1, 4)).astype(complex)
    a = evolve(g, R0, 3.7)
    b = evolve(g, evolve(g, R0, 1.2), 2.5)
    assert np.linalg.norm(a - b) <= 1e-7


def test_evolve_matches_matrix_exponential(rng):
    for beta in (0.0, 0.8):
        g = chain_generator(rng.normal(size=5), random_couplings(rng, beta=beta))
        R0 = np.diag(rng.uniform(0, 1, 5)).astype(complex)
        t = 6.3
        err = np.linalg.norm(evolve(g, R0, t) - exact_evolution(g, R0, t))
        assert err <= 1e-8 * t * np.linalg.norm(g.source)


def test_large_lattice_uses_direct_steps(rng):
    lat = LatticeSpec((12, 3))
    g = make_generator(build_hamiltonian_dd(lat, rng.uniform(-1, 1, 36)),
                       CouplingSpec(1, 0.2, 0.1, 1, 0.5), lat)
    R1 = evolve(g, np.zeros((36, 36)), 2.0)
    R2 = evolve(g, evolve(g, np.zeros((36, 36)), 1.0), 1.0)
    assert np.linalg.norm(R1 - R2) <= 1e-7


def test_step_size_underflow_reported():
    g = chain_generator(np.zeros(3), STD)
    with pytest.raises(IntegrationError, match="step size"):
        evolve(g, np.zeros((3, 3)), 50.0, dt=5.0, rtol=1e-14, min_dt=1.0)


def test_negative_time_rejected():
    g = chain_generator([0, 0], STD)
    with pytest.raises(ValidationError):
        evolve(g, np.zeros((2, 2)), -1.0)


def test_initial_state_independence(rng):
    for _ in range(20):
        N = int(rng.integers(2, 11))
        g = chain_generator(rng.uniform(-1, 1, N), random_couplings(rng, 0.0, 0.3, 1.5))
        T_big = 40.0 / slowest_rate(g)
        U = np.linalg.qr(random_hermitian(rng, N))[0]
        R0 = U @ np.diag(rng.uniform(0, 1, N)) @ U.conj().T
        assert np.linalg.norm(evolve(g, R0, T_big) - stationary_two_point(g)) <= 1e-6


def test_positivity_along_trajectory(rng):
    g = chain_generator(rng.uniform(-1, 1, 6), random_couplings(rng, beta=0.5))
    U = np.linalg.qr(random_hermitian(rng, 6))[0]
    R = U @ np.diag(rng.uniform(0, 1, 6)) @ U.conj().T
    for _ in range(30):
        R = evolve(g, R, 0.5)
        ev = np.linalg.eigvalsh(0.5 * (R + R.conj().T))
        assert ev.min() >= -1e-8 and ev.max() <= 1 + 1e-8


def test_relaxation_rate_matches_spectrum():
    g = chain_generator(np.zeros(3), CouplingSpec(0.7, 0.3, 0.2, 0.6, 0.4))
    Rinf = stationary_two_point(g)
    ts = np.linspace(10, 30, 9)
    errs = [np.linalg.norm(evolve(g, np.zeros((3, 3)), t) - Rinf) for t in ts]
    slope = np.polyfit(ts, np.log(errs), 1)[0]
    assert slope == pytest.approx(-slowest_rate(g), rel=0.05)


def test_time_integral_equivalence():
    N = 3
    c = CouplingSpec(0.8, 0.3, 0.4, 1.1)
    g = chain_generator([0.3, -0.5, 0.2], c)
    # same zeta, no injection: evolve then gives T_t(X) itself
    g0 = chain_generator([0.3, -0.5, 0.2], CouplingSpec(0, c.zeta_l, 0, c.zeta_r))
    T_big = 40.0 / slowest_rate(g)
    ts = np.linspace(0, T_big, 2001)
    X = np.diag([0.0, 0.0, 1.0]).astype(complex)
    vals = [X[0, 0].real]
    for dt in np.diff(ts):
        X = evolve(g0, X, dt)
        vals.append(X[0, 0].real)
    J = 4 * c.delta * simpson(vals, x=ts)
    assert J == pytest.approx(stationary_current(g), rel=1e-5)


# -- currents ------------------------------------------------------------------

def test_site_current_trivial_states():
    assert site_current(np.eye(4), 2) == 0.0
    A = np.random.default_rng(0).normal(size=(4, 4))
    assert site_current(A + A.T, 1) == 0.0
    with pytest.raises(IndexError):
        site_current(np.eye(4), 4)


def test_site_current_sign_convention():
    # R_{ji} = <a_i^* a_j>; current from 1 to 2 is 2 Im R[1, 0]
    R = np.zeros((2, 2), dtype=complex)
    R[1, 0], R[0, 1] = 0.25j, -0.25j
    assert site_current(R, 1) == pytest.approx(0.5)


def test_four_site_profile():
    g = chain_generator(np.zeros(4), STD)
    R = stationary_two_point(g)
    for n in (1, 2, 3):
        assert site_current(R, n) == pytest.approx(0.5, abs=1e-12)


def test_current_examples():
    assert stationary_current(chain_generator(np.zeros(5), CouplingSpec(.5, .5, .5, .5))) == 0.0
    for N in (2, 3, 9, 30):
        assert stationary_current(chain_generator(np.zeros(N), STD)) == pytest.approx(0.5, abs=1e-12)
    assert stationary_current(chain_generator(np.zeros(11), STD.with_beta(1))) == pytest.approx(1 / 7, abs=1e-12)


def test_site_independence_random(rng):
    for _ in range(15):
        N = int(rng.integers(2, 21))
        g = chain_generator(rng.uniform(-2, 2, N), random_couplings(rng, beta=rng.uniform(0, 1)))
        R = stationary_two_point(g)
        J = stationary_current(g)
        assert max(abs(site_current(R, n) - J) for n in range(1, N)) <= 1e-9


def test_site_independence_boxes(rng):
    for dims in ((4, 2), (3, 3, 2), (6, 3, 3)):
        lat = LatticeSpec(dims)
        g = make_generator(build_hamiltonian_dd(lat, rng.uniform(-1, 1, lat.size)),
                           random_couplings(rng, beta=0.5), lat)
        R = stationary_two_point(g)
        J = stationary_current(g)
        assert max(abs(site_current(R, n, lat) - J) for n in range(1, dims[0])) <= 1e-9


def test_sign_law(rng):
    for _ in range(40):
        N = int(rng.integers(2, 10))
        rates = rng.uniform(0.05, 2, 4) * (rng.random(4) < 0.8)
        c = CouplingSpec(*rates, rng.uniform(0, 1))
        if c.zeta_l == 0 or c.zeta_r == 0:
            continue
        J = stationary_current(chain_generator(rng.uniform(-2, 2, N), c))
        assert J * c.delta >= 0
        if c.delta != 0:
            assert J * c.delta > 0


def test_d1_pipeline_consistency(rng):
    for beta in (0.0, 0.6):
        v = rng.normal(size=9)
        c = random_couplings(rng, beta=beta)
        a = stationary_current(chain_generator(v, c))
        lat = LatticeSpec((9,))
        b = stationary_current(make_generator(build_hamiltonian_dd(lat, v), c, lat))
        assert abs(a - b) <= 1e-12


def test_current_needs_two_planes():
    with pytest.raises(ValidationError):
        stationary_current(chain_generator([0.0], CouplingSpec(1, 0, 0, 1)))
    with pytest.raises(ValidationError):
        stationary_current(chain_generator([0.0, 0.0], CouplingSpec(1, 0, 0, 0)))


def test_ode_current_agrees(rng):
    for beta in (0.0, 0.5):
        g = chain_generator(rng.uniform(-1, 1, 7), random_couplings(rng, beta=beta))
        assert current_via_ode(g) == pytest.approx(stationary_current(g), rel=1e-7)


def test_stationarity_residual_of_exact_state(rng):
    g = chain_generator(rng.normal(size=6), random_couplings(rng, beta=0.2))
    assert stationarity_residual(g, stationary_two_point(g)) <= 1e-10


# -- spectrum ------------------------------------------------------------------

def test_single_site_spectrum():
    g = chain_generator([0.0], CouplingSpec(1, 0, 0, 0))
    np.testing.assert_allclose(generator_spectrum(g), [-2.0])


def test_two_site_spectrum_stable():
    ev = generator_spectrum(chain_generator([0, 0], STD))
    assert ev.size == 4 and np.all(ev.real < 0)


def test_spectrum_size_guard():
    lat = LatticeSpec((7, 6))
    g = make_generator(build_hamiltonian_dd(lat, np.zeros(42)), STD, lat)
    with pytest.raises(ValidationError):
        generator_spectrum(g)


def test_singular_generator_reported():
    # no hopping: the middle site never talks to a reservoir, so l has a kernel
    for beta in (0.0, 0.3):
        g = make_generator(np.diag([0.0, 0.5, 0.0]), CouplingSpec(1, 0, 0, 1, beta))
        with pytest.raises(SolverError):
            stationary_solve(g, np.eye(3))


def test_current_matches_closed_form_quick(rng):
    for _ in range(10):
        c = random_couplings(rng, beta=rng.uniform(0, 2))
        N = int(rng.integers(2, 30))
        assert stationary_current(chain_generator(np.zeros(N), c)) == pytest.approx(
            closed_form_1d(c, N), rel=1e-10)
