import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinwell.analytic import (
    HBAR, RB87_MASS, NoRealThreshold, ThreeLevelParams, adiabatic_elimination,
    dressed_splitting, effective_trap_frequency, rotation_angle, sector_energies,
    sector_energy, tunneling_threshold, tunneling_thresholds,
)

TWO_PI = 2 * math.pi


def test_rotation_angle_limits():
    assert rotation_angle(20, 0) == 0
    assert rotation_angle(0, 5) == pytest.approx(-math.pi / 2)
    with pytest.raises(ValueError):
        rotation_angle(0, 0)


@given(st.floats(-100, 100), st.floats(0, 100))
def test_rotation_angle_removes_transverse_term(D, Om):
    if D == 0 and Om == 0:
        return
    th = rotation_angle(D, Om)
    assert abs(D * math.sin(th) + 2 * Om * math.cos(th)) <= 1e-13 * max(abs(D), Om, 1)


def test_rotation_angle_example():
    th = rotation_angle(20, 10)
    assert th == pytest.approx(-math.pi / 4, abs=1e-15)
    assert abs(20 * math.sin(th) + 20 * math.cos(th)) < 1e-14


@pytest.mark.parametrize("n", range(-4, 5))
def test_sector_energy_without_coupling(n):
    assert sector_energy(n, 8, 10, 20, 0) == pytest.approx(2 * 10 * n * n + 320)


def test_balanced_sector_energy():
    assert sector_energy(0, 8, 10, 20, 0) == 320


def test_sector_energy_domain():
    with pytest.raises(ValueError):
        sector_energy(0, 7, 1, 1, 1)
    with pytest.raises(ValueError):
        sector_energy(5, 8, 1, 1, 1)


def test_sector_energies_shape():
    ns, es = sector_energies(8, 10, 20, 30)
    assert list(ns) == list(range(-4, 5)) and es.shape == (9,)


def test_thresholds_values():
    # closed form evaluated by hand: 1/2 sqrt((4U(2n-1)+D)^2 - D^2)
    expected = [0.5 * math.sqrt(3200), 0.5 * math.sqrt(140**2 - 400),
                0.5 * math.sqrt(220**2 - 400), 0.5 * math.sqrt(300**2 - 400)]
    np.testing.assert_allclose(tunneling_thresholds(8, 10, 20), expected, rtol=1e-15)
    np.testing.assert_allclose(expected, [28.284, 69.282, 109.545, 149.666], atol=5e-4)


@pytest.mark.parametrize("n", range(1, 5))
def test_threshold_is_sector_crossing(n):
    om = tunneling_threshold(n, 10, 20)
    e_n = sector_energy(n, 8, 10, 20, om)
    e_m = sector_energy(n - 1, 8, 10, 20, om)
    assert abs(e_n - e_m) < 1e-12 * abs(e_n)


def test_threshold_without_interaction():
    assert tunneling_thresholds(8, 0, 20) == [0, 0, 0, 0]


def test_threshold_errors():
    with pytest.raises(ValueError):
        tunneling_threshold(0, 10, 20)
    with pytest.raises(NoRealThreshold):
        tunneling_threshold(1, 1, -10)


@given(st.floats(0.01, 50), st.floats(0, 100), st.integers(1, 10))
def test_thresholds_increase_with_n(U, D, n):
    assert tunneling_threshold(n + 1, U, D) > tunneling_threshold(n, U, D)


def test_dressed_splitting():
    assert dressed_splitting(3, 2) == 5


def test_trap_frequency_scaling():
    w = effective_trap_frequency(1e-30, RB87_MASS, 1e-6)
    assert effective_trap_frequency(4e-30, RB87_MASS, 1e-6) == pytest.approx(2 * w)
    assert effective_trap_frequency(1e-30, RB87_MASS, 2e-6) == pytest.approx(w / 2)


@pytest.mark.parametrize("vb_hz, x0_um, f_hz", [
    (50, 1, 215.685), (50, 2, 107.843), (250, 1, 482.287), (250, 2, 241.144),
])
def test_trap_frequency_corners(vb_hz, x0_um, f_hz):
    # sqrt(8 h f_b / (m x0^2)) / 2 pi, evaluated independently
    ref = math.sqrt(8 * 6.62607015e-34 * vb_hz / (RB87_MASS * (x0_um * 1e-6) ** 2)) / TWO_PI
    got = effective_trap_frequency(HBAR * TWO_PI * vb_hz, RB87_MASS, x0_um * 1e-6) / TWO_PI
    assert got == pytest.approx(ref, rel=1e-9)
    assert got == pytest.approx(f_hz, abs=1e-3)


def test_trap_frequency_stated_band_at_high_barrier_small_separation():
    # the stated 220-350 Hz band at V_b = 250 Hz, x0 = 1 um
    f = effective_trap_frequency(HBAR * TWO_PI * 250, RB87_MASS, 1e-6) / TWO_PI
    assert 220 <= f <= 350


def test_trap_frequency_rejects_nonpositive():
    with pytest.raises(ValueError):
        effective_trap_frequency(0, 1, 1)


def test_elimination_values():
    eff = adiabatic_elimination(ThreeLevelParams(0.02, 0.02, 1.0))
    assert eff.Omega_eff == pytest.approx(-4e-4, rel=1e-12)
    assert eff.stark_g == pytest.approx(-4e-4) and eff.stark_e == pytest.approx(-4e-4)


def test_elimination_decoupled_excited():
    eff = adiabatic_elimination(ThreeLevelParams(0.05, 0.0, 2.0, Delta_e=0.3))
    assert eff.Omega_eff == 0
    assert eff.stark_g == -0.05**2 / 2.0
    assert eff.stark_e == 0.3


@given(st.floats(1e-3, 1), st.floats(1e-3, 1), st.floats(20, 100))
def test_elimination_sign_and_exact_product(Og, Oe, Dr):
    eff = adiabatic_elimination(ThreeLevelParams(Og, Oe, Dr))
    assert eff.Omega_eff < 0
    assert eff.Omega_eff == -Oe * Og / Dr


def test_elimination_warns_outside_regime():
    with pytest.warns(UserWarning, match="outside adiabatic-elimination regime"):
        adiabatic_elimination(ThreeLevelParams(0.3, 0.3, 1.0))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        adiabatic_elimination(ThreeLevelParams(0.02, 0.02, 1.0))


def test_elimination_zero_detuning():
    with pytest.raises(ZeroDivisionError):
        adiabatic_elimination(ThreeLevelParams(0.1, 0.1, 0.0))


def test_three_level_hamiltonian_hermitian():
    H = ThreeLevelParams(0.1, 0.2, 3.0, 0.4).hamiltonian()
    np.testing.assert_array_equal(H, H.T)
    assert H[2, 2] == 3.0 and H[1, 1] == 0.4
