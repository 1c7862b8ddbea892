import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import jv

from qwalk2d.evolution import (
    EigendecompositionError,
    EvolutionTrace,
    KrylovConvergenceError,
    ProbabilityGrid,
    evolve_krylov,
    evolve_spectral,
    evolve_trace,
    initial_state,
    probabilities,
)
from qwalk2d.hamiltonian import Hamiltonian, build_hamiltonian

from conftest import chain, make_lattice


def two_site(c):
    return Hamiltonian(np.array([[0.0, c], [c, 0.0]]))


@pytest.fixture(scope="module")
def h5():
    return build_hamiltonian(make_lattice(5, 5, nearest=0.5))


def random_state(rng, n):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


@pytest.mark.parametrize("evolve", [evolve_spectral, evolve_krylov])
def test_zero_length_is_identity(evolve, h5, rng):
    psi = random_state(rng, h5.n)
    np.testing.assert_array_equal(evolve(h5, psi, 0.0), psi)


@pytest.mark.parametrize("z", [0.0, 0.3, 1.7, 5.0, 12.5])
def test_two_site_amplitudes(z):
    c = 0.8
    psi = evolve_spectral(two_site(c), [1, 0], z)
    np.testing.assert_allclose(psi, [np.cos(c * z), -1j * np.sin(c * z)], atol=1e-12)
    psi = evolve_krylov(two_site(c), [1, 0], z, tol=1e-12)
    np.testing.assert_allclose(psi, [np.cos(c * z), -1j * np.sin(c * z)], atol=1e-10)


def test_bessel_chain_spectral():
    c = 0.5
    lat = chain(101, nearest=c)
    h = build_hamiltonian(lat)
    psi0 = initial_state(lat)
    n = np.arange(101) - 50
    for z in (1.0, 4.0, 10.0):  # C z <= 5
        p = probabilities(evolve_spectral(h, psi0, z)).flat
        np.testing.assert_allclose(p, jv(n, 2 * c * z) ** 2, atol=1e-6)


def test_krylov_matches_spectral(h5, rng):
    psi = random_state(rng, h5.n)
    a = evolve_spectral(h5, psi, 5.0)
    b = evolve_krylov(h5, psi, 5.0, tol=1e-10)
    assert np.max(np.abs(a - b)) < 1e-8


def test_krylov_small_subspace_needs_splitting(h5, rng):
    psi = random_state(rng, h5.n)
    a = evolve_spectral(h5, psi, 2.0)
    b = evolve_krylov(h5, psi, 2.0, max_subspace=8, tol=1e-10)
    assert np.max(np.abs(a - b)) < 1e-8


def test_krylov_step_budget_error(h5, rng):
    psi = random_state(rng, h5.n)
    with pytest.raises(KrylovConvergenceError):
        evolve_krylov(h5, psi, 50.0, max_subspace=3, tol=1e-12, max_steps=5)


def test_krylov_argument_checks(h5):
    psi = initial_state(h5.lattice)
    with pytest.raises(ValueError):
        evolve_krylov(h5, psi, 1.0, max_subspace=1)
    with pytest.raises(ValueError):
        evolve_krylov(h5, psi, 1.0, tol=0)
    with pytest.raises(ValueError):
        evolve_spectral(h5, psi, -1.0)
    with pytest.raises(ValueError):
        evolve_spectral(h5, psi[:-1], 1.0)


def test_nonfinite_hamiltonian_raises_distinct_error():
    h = Hamiltonian(np.array([[0.0, np.nan], [np.nan, 0.0]]))
    with pytest.raises(EigendecompositionError):
        evolve_spectral(h, [1, 0], 1.0)


def test_probabilities_examples():
    np.testing.assert_array_equal(probabilities([1, 0, 0]).flat, [1, 0, 0])
    np.testing.assert_allclose(probabilities([(1 + 1j) / 2, (1 - 1j) / 2]).flat, [0.5, 0.5])


def test_probability_grid_shape():
    g = probabilities(np.ones(6) / np.sqrt(6), (2, 3))
    assert g.shape == (2, 3)
    assert g.total() == pytest.approx(1.0)


@pytest.mark.parametrize("backend,tol", [("spectral", 1e-10), ("krylov", 1e-8)])
def test_trace_unitarity(h5, backend, tol):
    z = np.linspace(0.0, 10.0, 11)
    tr = evolve_trace(h5, initial_state(h5.lattice), z, backend)
    assert len(tr) == 11
    for g in tr.grids:
        assert abs(g.total() - 1) < tol
        assert g.values.min() >= 0 and g.values.max() <= 1


def test_trace_z0_and_order(h5):
    psi0 = initial_state(h5.lattice)
    tr = evolve_trace(h5, psi0, [0.0])
    np.testing.assert_array_equal(tr.grids[0].flat, probabilities(psi0).flat)
    with pytest.raises(ValueError):
        evolve_trace(h5, psi0, [1.0, 0.5])
    with pytest.raises(ValueError):
        evolve_trace(h5, psi0, [1.0], backend="pade")


def test_trace_threads_deterministic(h5):
    psi0 = initial_state(h5.lattice)
    z = np.linspace(0.1, 9.81, 16)
    a = evolve_trace(h5, psi0, z).stack()
    b = evolve_trace(h5, psi0, z, threads=4).stack()
    np.testing.assert_array_equal(a, b)


def test_trace_validation():
    with pytest.raises(ValueError):
        EvolutionTrace([0.0, 0.0], (ProbabilityGrid([1.0]), ProbabilityGrid([1.0])))
    with pytest.raises(ValueError):
        EvolutionTrace([0.0], ())


@settings(max_examples=15, deadline=None)
@given(z1=st.floats(0.0, 5.0), z2=st.floats(0.0, 5.0), seed=st.integers(0, 2**16))
def test_composition(h5, z1, z2, seed):
    psi = random_state(np.random.default_rng(seed), h5.n)
    for evolve in (evolve_spectral, evolve_krylov):
        two = evolve(h5, evolve(h5, psi, z1), z2)
        one = evolve(h5, psi, z1 + z2)
        assert np.max(np.abs(two - one)) < 1e-8


@settings(max_examples=15, deadline=None)
@given(z=st.floats(0.0, 10.0), seed=st.integers(0, 2**16))
def test_time_reversal(h5, z, seed):
    psi = random_state(np.random.default_rng(seed), h5.n)
    back = evolve_spectral(h5.negated(), evolve_spectral(h5, psi, z), z)
    assert np.max(np.abs(back - psi)) < 1e-8
    back = evolve_krylov(h5.negated(), evolve_krylov(h5, psi, z), z)
    assert np.max(np.abs(back - psi)) < 1e-8


@settings(max_examples=10, deadline=None)
@given(z=st.floats(0.0, 10.0), seed=st.integers(0, 2**16))
def test_norm_preserved(h5, z, seed):
    psi = random_state(np.random.default_rng(seed), h5.n)
    assert abs(np.linalg.norm(evolve_spectral(h5, psi, z)) - 1) < 1e-10
    assert abs(np.linalg.norm(evolve_krylov(h5, psi, z)) - 1) < 1e-9


@pytest.mark.parametrize("shape", [(5, 5), (7, 9), (1, 11)])
def test_mirror_symmetry(shape):
    lat = make_lattice(*shape, nearest=0.5)
    h = build_hamiltonian(lat)
    psi0 = initial_state(lat)
    for z in (1.0, 3.3, 7.0):
        p = probabilities(evolve_spectral(h, psi0, z), lat.shape).values
        assert np.max(np.abs(p - p[::-1, :])) < 1e-10
        assert np.max(np.abs(p - p[:, ::-1])) < 1e-10
