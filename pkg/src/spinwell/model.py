"""Hamiltonian of the laser-dressed two-component double well.

The total Hamiltonian is stored as five real symmetric terms sharing one
sparsity pattern, so that ``H(Omega, Omega')`` is a weighted sum of data
arrays and never needs structural reassembly::

    H = J*H_J + U*H_U + Delta*H_Delta + Omega*H_Omega + OmegaPrime*H_OmegaPrime

with (hbar = 1)

    H_J          = -(eL^+ eR + eR^+ eL + gL^+ gR + gR^+ gL)
    H_U          = (n_eL + n_gL)^2 + (n_eR + n_gR)^2
    H_Delta      = n_eL + n_eR
    H_Omega      = eL^+ gL + gL^+ eL
    H_OmegaPrime = eR^+ gR + gR^+ eR
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .fock import Basis, Mode

TERMS = ("J", "U", "Delta", "Omega", "OmegaPrime")

# (src, dst, sign) for each hopping/coupling term; every pair appears in both
# directions so the assembled term is symmetric by construction
_OFF_DIAGONAL = {
    "J": [
        (Mode.eR, Mode.eL, -1.0), (Mode.eL, Mode.eR, -1.0),
        (Mode.gR, Mode.gL, -1.0), (Mode.gL, Mode.gR, -1.0),
    ],
    "Omega": [(Mode.gL, Mode.eL, 1.0), (Mode.eL, Mode.gL, 1.0)],
    "OmegaPrime": [(Mode.gR, Mode.eR, 1.0), (Mode.eR, Mode.gR, 1.0)],
}


@dataclass(frozen=True)
class ModelParams:
    """Model parameters, energies in units where J is the tunnelling rate."""

    N: int
    J: float = 1.0
    U: float = 0.0
    Delta: float = 0.0
    Omega: float = 0.0
    OmegaPrime: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 0:
            raise ValueError(f"N must be a non-negative integer, got {self.N}")
        if not self.J > 0:
            raise ValueError(f"J must be positive, got {self.J}")
        if self.U < 0:
            raise ValueError(f"U must be non-negative, got {self.U}")
        if self.Omega < 0 or self.OmegaPrime < 0:
            raise ValueError("coupling strengths must be non-negative")

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def coefficients(self) -> dict:
        return {
            "J": self.J, "U": self.U, "Delta": self.Delta,
            "Omega": self.Omega, "OmegaPrime": self.OmegaPrime,
        }


class SparseHermitian:
    """Coefficient-separable Hamiltonian on a fixed basis.

    Each term is kept as a data array aligned with a common CSR pattern
    (``indptr``, ``indices``); ``term(name)`` returns it as a matrix.
    """

    def __init__(self, basis: Basis, indptr, indices, data: dict):
        self.basis = basis
        self.dim = basis.dim
        self.indptr = indptr
        self.indices = indices
        self._data = data
        self._diag_pos = None

    @property
    def N(self) -> int:
        return self.basis.N

    def term(self, name: str) -> sp.csr_matrix:
        return self._csr(self._data[name].copy())

    def _csr(self, data) -> sp.csr_matrix:
        return sp.csr_matrix(
            (data, self.indices, self.indptr), shape=(self.dim, self.dim)
        )

    def combine(self, coeffs: dict, dtype=float) -> sp.csr_matrix:
        data = np.zeros(self.indices.shape[0], dtype=dtype)
        for name, c in coeffs.items():
            if c != 0:
                data += c * self._data[name]
        return self._csr(data)

    def evaluate(self, p: ModelParams, dtype=float) -> sp.csr_matrix:
        if p.N != self.N:
            raise ValueError(
                f"parameters are for N={p.N} but the Hamiltonian was "
                f"assembled on a basis with N={self.N}"
            )
        return self.combine(p.coefficients(), dtype=dtype)


def _offdiag_coo(basis: Basis, moves):
    rows, cols, vals = [], [], []
    occ = basis.states
    for src, dst, sign in moves:
        j = np.nonzero(occ[:, src] > 0)[0]
        new = occ[j].copy()
        amp = np.sqrt(new[:, src] * (new[:, dst] + 1.0))
        new[:, src] -= 1
        new[:, dst] += 1
        rows.append(basis.rank_many(new))
        cols.append(j)
        vals.append(sign * amp)
    if not rows:
        return np.empty(0, int), np.empty(0, int), np.empty(0)
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def assemble(basis: Basis) -> SparseHermitian:
    """Build all Hamiltonian terms on ``basis``."""
    dim = basis.dim
    occ = basis.states.astype(float)
    n_left = occ[:, Mode.eL] + occ[:, Mode.gL]
    n_right = occ[:, Mode.eR] + occ[:, Mode.gR]
    diag = np.arange(dim)
    raw = {
        "U": (diag, diag, n_left**2 + n_right**2),
        "Delta": (diag, diag, occ[:, Mode.eL] + occ[:, Mode.eR]),
    }
    for name, moves in _OFF_DIAGONAL.items():
        raw[name] = _offdiag_coo(basis, moves)

    # union pattern including the full diagonal
    all_r = np.concatenate([raw[n][0] for n in TERMS] + [diag])
    all_c = np.concatenate([raw[n][1] for n in TERMS] + [diag])
    pattern = sp.csr_matrix(
        (np.ones(all_r.shape[0]), (all_r, all_c)), shape=(dim, dim)
    )
    pattern.sum_duplicates()
    pattern.sort_indices()
    indptr, indices = pattern.indptr, pattern.indices

    data = {}
    for name in TERMS:
        r, c, v = raw[name]
        m = sp.csr_matrix((v, (r, c)), shape=(dim, dim))
        # align to the shared pattern: look up each pattern entry in ``m``
        aligned = np.asarray(m[_pattern_rows(indptr), indices]).ravel()
        if name in ("U", "Delta"):
            if (m - sp.diags(m.diagonal())).nnz:
                raise AssertionError(f"term {name} is not diagonal")
        if (abs(m - m.T) > 0).nnz:
            raise AssertionError(f"term {name} is not symmetric")
        data[name] = aligned
    for arr in data.values():
        arr.setflags(write=False)
    return SparseHermitian(basis, indptr, indices, data)


def _pattern_rows(indptr):
    return np.repeat(np.arange(indptr.shape[0] - 1), np.diff(indptr))


def evaluate(H: SparseHermitian, p: ModelParams, dtype=float) -> sp.csr_matrix:
    return H.evaluate(p, dtype=dtype)


@dataclass(frozen=True)
class ValidityCheck:
    ratio: float
    valid: bool
    threshold: float

    def __bool__(self) -> bool:
        return self.valid


def two_mode_validity(omega0: float, U: float, N: int, threshold: float = 0.1):
    """Check that the trap frequency dominates the interaction energy.

    ``U`` and ``omega0`` must be given in the same units.
    """
    if not omega0 > 0:
        raise ValueError(f"trap frequency must be positive, got {omega0}")
    ratio = U * N / omega0
    return ValidityCheck(ratio=ratio, valid=ratio < threshold, threshold=threshold)


def well_swap_permutation(basis: Basis) -> np.ndarray:
    """Index map of the left/right mirror ``(a, b, c, d) -> (c, d, a, b)``."""
    swapped = basis.states[:, [2, 3, 0, 1]]
    return basis.rank_many(swapped)

