"""Closed-form results for the strong-interaction (vanishing tunnelling) limit.

In that limit the atom numbers in each well are conserved. With ``N/2 + n``
atoms on the left and ``N/2 - n`` on the right, each left atom is dressed by
the laser into the lower eigenstate of ``[[Delta, Omega], [Omega, 0]]`` and
the right atoms stay in ``|g>``; the sector energies cross at the couplings
where one more atom can tunnel to the left.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

HBAR = 1.054571817e-34  # J s
RB87_MASS = 1.443160648e-25  # kg


class NoRealThreshold(ValueError):
    pass


def rotation_angle(Delta: float, Omega: float) -> float:
    """Angle that removes the ``S_x'`` term of the dressed left well.

    Solves ``Delta*sin(theta) + 2*Omega*cos(theta) = 0`` on the branch
    ``theta = atan2(-2 Omega, Delta)``, continuous as ``Omega -> 0+``.
    """
    if Delta == 0 and Omega == 0:
        raise ValueError("underdetermined rotation: Delta and Omega both zero")
    return math.atan2(-2.0 * Omega, Delta)


def dressed_splitting(Delta: float, Omega: float) -> float:
    return math.sqrt(Delta * Delta + 4.0 * Omega * Omega)


def sector_energy(n: int, N: int, U: float, Delta: float, Omega: float) -> float:
    """Ground energy of the sector with ``N/2 + n`` atoms in the left well."""
    if N % 2:
        raise ValueError(f"sector energies are defined for even N, got N={N}")
    if abs(n) > N // 2:
        raise ValueError(f"imbalance n={n} outside [-{N // 2}, {N // 2}]")
    half = N / 2
    root = dressed_splitting(Delta, Omega)
    return (
        -Delta * (half - n) / 2
        - root * (half + n) / 2
        + 2 * U * n * n
        + U * N * N / 2
        + Delta * N / 2
    )


def sector_energies(N: int, U: float, Delta: float, Omega: float):
    """``(ns, energies)`` for every imbalance ``n = -N/2 .. N/2``."""
    ns = np.arange(-(N // 2), N // 2 + 1)
    return ns, np.array([sector_energy(int(n), N, U, Delta, Omega) for n in ns])


def tunneling_threshold(n: int, U: float, Delta: float) -> float:
    """Coupling at which sectors ``n - 1`` and ``n`` are degenerate."""
    if n < 1:
        raise ValueError(f"threshold index must be >= 1, got {n}")
    a = 4.0 * U * (2 * n - 1) + Delta
    radicand = a * a - Delta * Delta
    if a < 0 or radicand < 0:
        # a < 0 would need a negative square root of Delta^2 + 4 Omega^2
        raise NoRealThreshold(
            f"no real threshold for these parameters (n={n}, U={U}, Delta={Delta})"
        )
    return 0.5 * math.sqrt(radicand)


def tunneling_thresholds(N: int, U: float, Delta: float):
    return [tunneling_threshold(n, U, Delta) for n in range(1, N // 2 + 1)]


def effective_trap_frequency(V_b: float, m: float, x0: float) -> float:
    """Harmonic frequency ``sqrt(8 V_b / (m x0^2))`` near a well minimum.

    SI units: ``V_b`` in joules, ``m`` in kg, ``x0`` (half the well
    separation) in metres; returns rad/s.
    """
    if V_b <= 0 or m <= 0 or x0 <= 0:
        raise ValueError("barrier height, mass and half-separation must be positive")
    return math.sqrt(8.0 * V_b / (m * x0 * x0))


@dataclass(frozen=True)
class ThreeLevelParams:
    Omega_g: float
    Omega_e: float
    Delta_r: float
    Delta_e: float = 0.0

    def hamiltonian(self) -> np.ndarray:
        """Rotating-frame Hamiltonian in the ``(g, e, r)`` basis."""
        return np.array(
            [
                [0.0, 0.0, self.Omega_g],
                [0.0, self.Delta_e, self.Omega_e],
                [self.Omega_g, self.Omega_e, self.Delta_r],
            ]
        )

    @property
    def max_coupling(self) -> float:
        return max(abs(self.Omega_g), abs(self.Omega_e))


@dataclass(frozen=True)
class EffectiveTwoLevel:
    stark_g: float
    stark_e: float
    Omega_eff: float

    def hamiltonian(self) -> np.ndarray:
        """Effective Hamiltonian in the ``(g, e)`` basis."""
        return np.array(
            [[self.stark_g, self.Omega_eff], [self.Omega_eff, self.stark_e]]
        )


def adiabatic_elimination(p: ThreeLevelParams, ratio: float = 10.0) -> EffectiveTwoLevel:
    """Eliminate the far-detuned upper level ``|r>``.

    Warns (does not fail) when ``|Delta_r| <= ratio * max(|Omega_g|, |Omega_e|)``;
    at the boundary itself the second-order error is already ~1e-2, so it
    counts as outside the regime.
    """
    if p.Delta_r == 0:
        raise ZeroDivisionError("Delta_r = 0: the upper level cannot be eliminated")
    if abs(p.Delta_r) <= ratio * p.max_coupling:
        warnings.warn(
            "outside adiabatic-elimination regime: "
            f"|Delta_r|={abs(p.Delta_r):g} <= {ratio:g} * {p.max_coupling:g}",
            stacklevel=2,
        )
    return EffectiveTwoLevel(
        stark_g=-p.Omega_g**2 / p.Delta_r,
        stark_e=p.Delta_e - p.Omega_e**2 / p.Delta_r,
        Omega_eff=-p.Omega_e * p.Omega_g / p.Delta_r,
    )
