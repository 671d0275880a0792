"""Expectation values on state vectors over a :class:`~spinwell.fock.Basis`.

The collective spin is built from the well (left/right) degree of freedom
summed over both internal states::

    S_x = (eL^+ eR + gL^+ gR + h.c.) / 2
    S_y = (eL^+ eR + gL^+ gR - h.c.) / 2i
    S_z = (n_eL + n_gL - n_eR - n_gR) / 2
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .fock import Basis, Mode

SX_MIN = 1e-12


class SqueezingUndefined(ValueError):
    """Raised when the mean spin in the denominator vanishes."""


@dataclass(frozen=True)
class PopulationReport:
    n_eL: float
    n_gL: float
    n_eR: float
    n_gR: float

    @property
    def diff_e(self) -> float:
        return self.n_eL - self.n_eR

    @property
    def diff_g(self) -> float:
        return self.n_gL - self.n_gR

    @property
    def diff_total(self) -> float:
        return self.n_eL + self.n_gL - self.n_eR - self.n_gR

    @property
    def n_e(self) -> float:
        return self.n_eL + self.n_eR

    @property
    def total(self) -> float:
        return self.n_eL + self.n_gL + self.n_eR + self.n_gR


@dataclass(frozen=True)
class SpinReport:
    Sx: float
    Sy: float
    Sz: float
    varSz: float
    N: int

    @property
    def xi2_numerator(self) -> float:
        return self.N * self.varSz

    @property
    def xi2_denominator(self) -> float:
        return self.Sx**2

    @property
    def xi2_zx(self) -> float:
        if abs(self.Sx) < SX_MIN:
            return float("nan")
        return self.xi2_numerator / self.xi2_denominator


def _check(psi, basis):
    psi = np.asarray(psi)
    if psi.ndim != 1 or psi.shape[0] != basis.dim:
        raise ValueError(
            f"state of shape {psi.shape} does not match basis dimension {basis.dim}"
        )
    return psi


def populations(psi, basis: Basis) -> PopulationReport:
    psi = _check(psi, basis)
    w = np.abs(psi) ** 2
    n = w @ basis.states
    return PopulationReport(*(float(x) for x in n))


class SpinOperators:
    """Sparse collective-spin matrices on a basis (real ``S_x``, real ``i S_y``)."""

    def __init__(self, basis: Basis):
        from .model import _offdiag_coo

        dim = basis.dim
        # raise: a^+_L a_R on both internal states
        r, c, v = _offdiag_coo(
            basis, [(Mode.eR, Mode.eL, 1.0), (Mode.gR, Mode.gL, 1.0)]
        )
        raise_lr = sp.csr_matrix((v, (r, c)), shape=(dim, dim))
        self.basis = basis
        self.raise_lr = raise_lr
        self.Sx = ((raise_lr + raise_lr.T) * 0.5).tocsr()
        # S_y = (R - R^T)/(2i), stored as the real antisymmetric i*S_y
        self.iSy = ((raise_lr - raise_lr.T) * 0.5).tocsr()
        occ = basis.states
        self.sz_diag = 0.5 * (occ[:, 0] + occ[:, 1] - occ[:, 2] - occ[:, 3])
        self.Sz = sp.diags(self.sz_diag).tocsr()

    def Sy_apply(self, psi):
        return -1j * (self.iSy @ psi)

    def matrices(self):
        return self.Sx, (-1j * self.iSy).tocsr(), self.Sz


@lru_cache(maxsize=16)
def _spin_ops(N: int) -> SpinOperators:
    return SpinOperators(Basis(N, max_atoms=N))


def spin_operators(basis: Basis) -> SpinOperators:
    return _spin_ops(basis.N)


def collective_spin(psi, basis: Basis) -> SpinReport:
    psi = _check(psi, basis)
    ops = spin_operators(basis)
    conj = psi.conj()
    sx = conj @ (ops.Sx @ psi)
    sy = conj @ ops.Sy_apply(psi)
    w = np.abs(psi) ** 2
    sz = w @ ops.sz_diag
    sz2 = w @ ops.sz_diag**2
    var = max(float(sz2 - sz**2), 0.0)
    return SpinReport(
        Sx=float(np.real(sx)), Sy=float(np.real(sy)), Sz=float(sz),
        varSz=var, N=basis.N,
    )


def squeezing_xi2(psi, basis: Basis) -> float:
    """Squeezing parameter ``N Var(S_z) / <S_x>^2``."""
    rep = collective_spin(psi, basis)
    if abs(rep.Sx) < SX_MIN:
        raise SqueezingUndefined("squeezing undefined: vanishing mean spin")
    return rep.xi2_numerator / rep.xi2_denominator


def spin_moments(psi, basis: Basis):
    """Mean vector and symmetrised covariance matrix of (S_x, S_y, S_z)."""
    psi = _check(psi, basis)
    ops = spin_operators(basis)
    vecs = [ops.Sx @ psi, ops.Sy_apply(psi), ops.Sz @ psi]
    mean = np.array([np.real(np.vdot(psi, v)) for v in vecs])
    cov = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            # <{S_i, S_j}>/2 = Re <S_i psi | S_j psi> for Hermitian S_i
            cov[i, j] = np.real(np.vdot(vecs[i], vecs[j])) - mean[i] * mean[j]
    return mean, cov


def squeezing_general(psi, basis: Basis, axes) -> float:
    """Wineland-type parameter for an orthonormal axis triple ``(n1, n2, n3)``.

    ``N Var(S_n1) / (<S_n2>^2 + <S_n3>^2)`` with ``S_n = n . (S_x, S_y, S_z)``.
    """
    axes = np.asarray(axes, dtype=float)
    if axes.shape != (3, 3):
        raise ValueError("axes must be a 3x3 array of row vectors")
    if not np.allclose(axes @ axes.T, np.eye(3), atol=1e-12, rtol=0):
        raise ValueError("axes are not orthonormal")
    mean, cov = spin_moments(psi, basis)
    n1, n2, n3 = axes
    var = max(float(n1 @ cov @ n1), 0.0)
    denom = float((n2 @ mean) ** 2 + (n3 @ mean) ** 2)
    if denom < SX_MIN**2:
        raise SqueezingUndefined("squeezing undefined: vanishing mean spin")
    return basis.N * var / denom
