import numpy as np
import pytest

from spinwell.analytic import sector_energy, tunneling_thresholds
from spinwell.fock import Basis
from spinwell.model import ModelParams, assemble
from spinwell.observables import populations
from spinwell.spectra import (
    SweepTable, count_dwell_steps, detect_steps, find_plateaus, fix_phase, ground_state,
    omega_grid, sector_restricted_ground_energy, sweep_ground,
)


@pytest.fixture(scope="module")
def H8():
    return assemble(Basis(8))


def test_single_atom_degenerate():
    H = assemble(Basis(1)).evaluate(ModelParams(1))
    g = ground_state(H)
    assert g.energy == pytest.approx(-1.0)
    assert g.gap == pytest.approx(0.0, abs=1e-12) and g.degenerate


def test_balanced_ground_state_in_g(H8):
    g = ground_state(H8.evaluate(ModelParams(8, U=10, Delta=20)))
    pops = populations(g.vector, H8.basis)
    assert abs(pops.diff_total) < 1e-10 and pops.n_e < 1e-8
    assert 318 < g.energy < 320
    assert not g.degenerate


def test_dense_and_lanczos_agree_n6(rng):
    H = assemble(Basis(6))
    for _ in range(10):
        U, D, Om, Omp = rng.uniform([0, -30, 0, 0], [20, 30, 100, 10])
        M = H.evaluate(ModelParams(6, U=U, Delta=D, Omega=Om, OmegaPrime=Omp))
        a = ground_state(M, method="dense")
        b = ground_state(M, method="lanczos")
        assert b.energy == pytest.approx(a.energy, rel=1e-10, abs=1e-10)
        assert abs(abs(np.vdot(a.vector, b.vector)) - 1) < 1e-8
        assert b.gap == pytest.approx(a.gap, rel=1e-6, abs=1e-8)


def test_solution_invariants(H8):
    g = ground_state(H8.evaluate(ModelParams(8, U=3, Delta=5, Omega=30)))
    assert abs(np.linalg.norm(g.vector) - 1) < 1e-12
    assert g.gap >= 0
    i = np.argmax(np.abs(g.vector))
    assert g.vector[i] > 0


def test_unknown_method():
    with pytest.raises(ValueError):
        ground_state(assemble(Basis(1)).evaluate(ModelParams(1)), method="qr")


def test_fix_phase_complex():
    v = np.array([0.1, -2j, 0.3])
    assert fix_phase(v)[1] == pytest.approx(2.0)


def test_omega_grid_inclusive():
    g = omega_grid(0, 1, 0.25)
    np.testing.assert_allclose(g, [0, 0.25, 0.5, 0.75, 1.0])
    assert omega_grid(0, 160, 0.1).size == 1601
    assert omega_grid(2, 1, 0.5).size == 0


@pytest.mark.parametrize("bad", [[], [1, 1], [2, 1], [-1, 0]])
def test_sweep_rejects_bad_grids(bad):
    with pytest.raises(ValueError):
        sweep_ground(ModelParams(2), bad)


def test_sweep_balanced_at_zero_coupling(H8):
    t = sweep_ground(ModelParams(8, U=10, Delta=20), [0.0, 10.0], H=H8)
    assert abs(t.diff_total[0]) < 1e-10
    assert len(t) == 2 and t.as_array().shape == (2, 7)


def test_sweep_threads_identical(H8):
    p = ModelParams(8, U=10, Delta=20)
    grid = np.linspace(0, 100, 9)
    a = sweep_ground(p, grid, H=H8).as_array()
    b = sweep_ground(p, grid, H=H8, threads=3).as_array()
    np.testing.assert_array_equal(a, b)


def test_sweep_smooth_for_weak_interaction(H8):
    t = sweep_ground(ModelParams(8, U=0.1, Delta=20), omega_grid(0, 160, 0.5), H=H8)
    assert np.max(np.abs(np.diff(t.diff_total))) < 0.5
    assert np.all(np.diff(t.diff_total) > -1e-9)


def test_sweep_steps_for_strong_interaction(H8):
    t = sweep_ground(ModelParams(8, U=10, Delta=20), omega_grid(0, 160, 0.5), H=H8)
    steps = detect_steps(t)
    np.testing.assert_allclose(steps, tunneling_thresholds(8, 10, 20), rtol=2e-3)
    levels = {round(m) for *_, m in find_plateaus(t.omega, t.diff_total, 0.05, 5.0)}
    assert {0, 2, 4, 6} <= levels


def test_detect_steps_synthetic():
    t = SweepTable(np.arange(11.0), *(np.zeros(11),) * 2, np.arange(11.0) / 5,
                   *(np.zeros(11),) * 3)
    assert detect_steps(t, levels=[1]) == [pytest.approx(5.0)]
    # unreached levels are omitted
    assert detect_steps(t, levels=[1, 3]) == [pytest.approx(5.0)]


def test_find_plateaus_staircase():
    x = np.linspace(0, 30, 301)
    y = np.floor(x / 10) * 2.0
    runs = find_plateaus(x, y, tol=0.05, min_width=5)
    assert [m for *_, m in runs] == [0, 2, 4]


def test_find_plateaus_ramp_has_none():
    x = np.linspace(0, 30, 301)
    assert find_plateaus(x, x / 3, tol=0.05, min_width=5) == []


def test_count_dwell_steps():
    t = np.linspace(0, 1, 2001)
    stair = np.round(8 * t / 2) * 2 + 0.0
    assert count_dwell_steps(stair, [2, 4, 6]) == 3
    assert count_dwell_steps(8 * t, [2, 4, 6]) == 0
    assert count_dwell_steps([], [2]) == 0


@pytest.mark.parametrize("n", range(0, 5))
def test_sector_restricted_matches_analytic(n):
    # J -> 0 limit of the sector Hamiltonian is the dressed-atom energy
    H = assemble(Basis(8))
    for om in (0.0, 15.0, 60.0):
        p = ModelParams(8, J=1e-9, U=10, Delta=20, Omega=om)
        ref = sector_energy(n, 8, 10, 20, om)
        assert sector_restricted_ground_energy(H, p, n) == pytest.approx(ref, rel=1e-6)


def _free_left_fraction(Om, Delta=20.0, J=1.0):
    h = np.array([[Delta, Om, -J, 0], [Om, 0, 0, -J], [-J, 0, Delta, 0], [0, -J, 0, 0]])
    g = np.linalg.eigh(h)[1][:, 0]
    return g[0] ** 2 + g[1] ** 2


def test_noninteracting_sweep_factorises(H8):
    # U = 0: every atom independently occupies the one-body ground orbital
    grid = np.arange(0, 40.0, 2.5)
    t = sweep_ground(ModelParams(8, U=0.0, Delta=20), grid, H=H8)
    ref = [8 * (2 * _free_left_fraction(o) - 1) for o in grid]
    np.testing.assert_allclose(t.diff_total, ref, atol=1e-9)
