import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom

from spinwell.fock import Basis
from spinwell.model import ModelParams, assemble
from spinwell.observables import (
    SqueezingUndefined, collective_spin, populations, spin_moments, spin_operators,
    squeezing_general, squeezing_xi2,
)
from spinwell.spectra import ground_state


def basis_vector(basis, state):
    v = np.zeros(basis.dim)
    v[basis.rank(state)] = 1.0
    return v


def coherent_state(basis, p_left=0.5):
    """All atoms in g, each in sqrt(p) |L> + sqrt(1-p) |R> (binomial amplitudes)."""
    N = basis.N
    psi = np.zeros(basis.dim)
    for k in range(N + 1):
        psi[basis.rank((0, k, 0, N - k))] = math.sqrt(binom.pmf(k, N, p_left))
    return psi


def random_state(basis, rng):
    v = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    return v / np.linalg.norm(v)


def test_definite_occupation():
    basis = Basis(8)
    rep = populations(basis_vector(basis, (4, 4, 0, 0)), basis)
    assert rep.diff_total == 8 and rep.diff_e == 4 and rep.diff_g == 4
    spin = collective_spin(basis_vector(basis, (4, 4, 0, 0)), basis)
    assert spin.Sz == 4 and spin.Sx == 0 and spin.varSz == 0
    assert math.isnan(spin.xi2_zx)


def test_symmetric_single_atom():
    basis = Basis(1)
    psi = (basis_vector(basis, (1, 0, 0, 0)) + basis_vector(basis, (0, 0, 1, 0))) / math.sqrt(2)
    rep = populations(psi, basis)
    assert rep.diff_e == 0 and rep.diff_total == 0
    psi = (basis_vector(basis, (0, 1, 0, 0)) + basis_vector(basis, (0, 0, 0, 1))) / math.sqrt(2)
    spin = collective_spin(psi, basis)
    assert spin.Sx == pytest.approx(0.5) and spin.Sz == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_population_bookkeeping(N, seed):
    basis = Basis(N)
    rep = populations(random_state(basis, np.random.default_rng(seed)), basis)
    assert rep.total == pytest.approx(N, abs=1e-10)
    assert rep.diff_total == pytest.approx(rep.diff_e + rep.diff_g, abs=1e-12)
    for x in (rep.n_eL, rep.n_gL, rep.n_eR, rep.n_gR):
        assert -1e-12 <= x <= N + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_spin_bounds(N, seed):
    basis = Basis(N)
    spin = collective_spin(random_state(basis, np.random.default_rng(seed)), basis)
    assert spin.varSz >= 0
    for s in (spin.Sx, spin.Sy, spin.Sz):
        assert abs(s) <= N / 2 + 1e-10
    if not math.isnan(spin.xi2_zx):
        assert spin.xi2_zx > 0


def test_commutator_on_random_states(rng):
    basis = Basis(4)
    Sx, Sy, Sz = spin_operators(basis).matrices()
    C = (Sx @ Sy - Sy @ Sx).toarray()
    np.testing.assert_allclose(C, 1j * Sz.toarray(), atol=1e-14)
    for _ in range(5):
        psi = random_state(basis, rng)
        lhs = np.vdot(psi, C @ psi)
        rhs = 1j * np.vdot(psi, Sz @ psi)
        assert abs(lhs - rhs) < 1e-10


def test_casimir_for_symmetric_states():
    # states with all atoms in g form the spin-N/2 multiplet
    basis = Basis(6)
    Sx, Sy, Sz = (M.toarray() for M in spin_operators(basis).matrices())
    S2 = Sx @ Sx + Sy @ Sy + Sz @ Sz
    psi = coherent_state(basis, 0.3)
    assert np.vdot(psi, S2 @ psi).real == pytest.approx(3 * 4, abs=1e-10)


def test_expectations_are_real(rng):
    basis = Basis(5)
    psi = random_state(basis, rng)
    for M in spin_operators(basis).matrices():
        assert abs(np.vdot(psi, M @ psi).imag) < 1e-12


@pytest.mark.parametrize("N", [2, 8, 20])
def test_coherent_state_xi2_is_one(N):
    basis = Basis(N)
    assert squeezing_xi2(coherent_state(basis), basis) == pytest.approx(1.0, abs=1e-12)


def test_noninteracting_ground_state_is_coherent():
    basis = Basis(8)
    g = ground_state(assemble(basis).evaluate(ModelParams(8, U=0, Delta=20)))
    assert squeezing_xi2(g.vector, basis) == pytest.approx(1.0, abs=1e-6)


def test_interacting_ground_state_is_squeezed():
    basis = Basis(8)
    g = ground_state(assemble(basis).evaluate(ModelParams(8, U=10, Delta=200)))
    assert squeezing_xi2(g.vector, basis) < 1


def test_balanced_ground_state_populations():
    basis = Basis(8)
    g = ground_state(assemble(basis).evaluate(ModelParams(8, U=10, Delta=20)))
    rep = populations(g.vector, basis)
    assert abs(rep.diff_total) < 1e-10 and rep.n_e < 1e-8


def test_squeezing_undefined():
    basis = Basis(4)
    with pytest.raises(SqueezingUndefined):
        squeezing_xi2(basis_vector(basis, (2, 2, 0, 0)), basis)


def test_input_validation():
    basis = Basis(2)
    with pytest.raises(ValueError):
        populations(np.ones(3), basis)


def test_general_reduces_to_zx(rng):
    basis = Basis(6)
    psi = coherent_state(basis, 0.4) + 0.1 * rng.normal(size=basis.dim)
    psi /= np.linalg.norm(psi)  # real amplitudes: <S_y> = 0
    assert collective_spin(psi, basis).Sy == pytest.approx(0, abs=1e-14)
    zxy = np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], float)
    assert squeezing_general(psi, basis, zxy) == pytest.approx(squeezing_xi2(psi, basis),
                                                               rel=1e-12)


@given(st.floats(0, 2 * math.pi))
def test_coherent_state_any_perpendicular_axis(phi):
    basis = Basis(8)
    psi = coherent_state(basis)  # mean spin along +x
    n1 = np.array([0, math.cos(phi), math.sin(phi)])
    n3 = np.cross(n1, [1, 0, 0])
    axes = np.array([n1, [1, 0, 0], n3])
    assert squeezing_general(psi, basis, axes) == pytest.approx(1.0, abs=1e-6)


def test_covariance_eigenaxis_minimises_xi2():
    basis = Basis(8)
    g = ground_state(assemble(basis).evaluate(ModelParams(8, U=2, Delta=20, Omega=20)))
    mean, cov = spin_moments(g.vector, basis)
    m = mean / np.linalg.norm(mean)
    # orthonormal frame perpendicular to the mean spin
    u = np.cross(m, [0, 1, 0]) if abs(m[1]) < 0.9 else np.cross(m, [1, 0, 0])
    u /= np.linalg.norm(u)
    w = np.cross(m, u)
    P = np.array([u, w])
    evals, evecs = np.linalg.eigh(P @ cov @ P.T)
    best_axis = evecs[:, 0] @ P

    def xi2(n1):
        n3 = np.cross(n1, m)
        return squeezing_general(g.vector, basis, np.array([n1, m, n3]))

    best = xi2(best_axis)
    for phi in np.linspace(0, math.pi, 181):
        n1 = math.cos(phi) * u + math.sin(phi) * w
        assert xi2(n1) >= best - 1e-12


def test_general_rejects_non_orthonormal():
    basis = Basis(2)
    with pytest.raises(ValueError):
        squeezing_general(coherent_state(basis), basis, np.ones((3, 3)))
