"""Number-conserving Fock basis for two internal states in two wells.

A basis state is the occupation 4-tuple ``(n_eL, n_gL, n_eR, n_gR)``.
States are ordered in descending lexicographic order on the first three
occupations, so that for ``N = 1`` the order is ``eL, gL, eR, gR``. Ranks
are computed combinatorially (stars and bars), no hashing involved.
"""

from __future__ import annotations

import enum
from math import comb, sqrt
from typing import NamedTuple

import numpy as np

MAX_ATOMS = 40


class Mode(enum.IntEnum):
    eL = 0
    gL = 1
    eR = 2
    gR = 3


class FockState(NamedTuple):
    n_eL: int
    n_gL: int
    n_eR: int
    n_gR: int

    @property
    def total(self) -> int:
        return self.n_eL + self.n_gL + self.n_eR + self.n_gR


class BasisError(ValueError):
    """Raised for states that do not belong to a basis."""


def basis_dimension(N: int) -> int:
    return comb(N + 3, 3)


def _rank_counts(N, occ):
    # Number of states that precede ``occ`` in descending lexicographic order.
    # Works elementwise on integer arrays as well as on plain ints.
    a, b, c = occ[..., 0], occ[..., 1], occ[..., 2]
    m = N - a
    k = m - b
    # comb(x + 2, 3) etc. written out so numpy arrays work too
    r3 = (m + 2) * (m + 1) * m // 6
    r2 = (k + 1) * k // 2
    r1 = k - c
    return r3 + r2 + r1


class Basis:
    """Ordered Fock basis at fixed total atom number ``N``.

    Attributes
    ----------
    N : int
        Total number of atoms.
    states : ndarray of shape (dim, 4)
        Occupations, one row per basis state, in rank order. Read-only.
    """

    def __init__(self, N: int, max_atoms: int = MAX_ATOMS):
        N = int(N)
        if N < 0:
            raise BasisError(f"atom number must be non-negative, got {N}")
        if N > max_atoms:
            raise BasisError(
                f"N={N} exceeds the configured cap of {max_atoms} atoms "
                f"(dim would be {basis_dimension(N)})"
            )
        self.N = N
        rows = [
            (a, b, c, N - a - b - c)
            for a in range(N, -1, -1)
            for b in range(N - a, -1, -1)
            for c in range(N - a - b, -1, -1)
        ]
        states = np.array(rows, dtype=np.int64).reshape(-1, 4)
        states.setflags(write=False)
        self.states = states

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    def __len__(self) -> int:
        return self.dim

    def __iter__(self):
        for row in self.states:
            yield FockState(*(int(x) for x in row))

    def __repr__(self) -> str:
        return f"Basis(N={self.N}, dim={self.dim})"

    def rank(self, state) -> int:
        s = tuple(int(x) for x in state)
        if len(s) != 4 or min(s) < 0:
            raise BasisError(f"not a valid occupation tuple: {state!r}")
        if sum(s) != self.N:
            raise BasisError(
                f"occupation sum {sum(s)} of {s} is inconsistent with N={self.N}"
            )
        return int(_rank_counts(self.N, np.asarray(s)))

    def rank_many(self, occ: np.ndarray) -> np.ndarray:
        """Vectorised ``rank`` for an ``(m, 4)`` array of valid occupations."""
        occ = np.asarray(occ, dtype=np.int64)
        if np.any(occ.sum(axis=1) != self.N) or np.any(occ < 0):
            raise BasisError(f"occupations inconsistent with N={self.N}")
        return _rank_counts(self.N, occ)

    def unrank(self, index: int) -> FockState:
        if not 0 <= index < self.dim:
            raise IndexError(f"index {index} out of range for dim {self.dim}")
        return FockState(*(int(x) for x in self.states[index]))

    def number(self, mode: Mode) -> np.ndarray:
        """Diagonal of the number operator for ``mode`` (float array)."""
        return self.states[:, int(mode)].astype(float)


def enumerate_basis(N: int, max_atoms: int = MAX_ATOMS) -> Basis:
    return Basis(N, max_atoms=max_atoms)


def rank(basis: Basis, state) -> int:
    return basis.rank(state)


def unrank(basis: Basis, index: int) -> FockState:
    return basis.unrank(index)


def hop_element(state, src: Mode, dst: Mode):
    """Matrix element of ``a_dst^dagger a_src`` on a Fock state.

    Returns ``(new_state, amplitude)`` or ``None`` when ``a_src`` annihilates
    the state.
    """
    src, dst = Mode(src), Mode(dst)
    if src == dst:
        raise ValueError("source and destination modes must differ")
    occ = list(state)
    n_src, n_dst = occ[src], occ[dst]
    if n_src == 0:
        return None
    occ[src] -= 1
    occ[dst] += 1
    return FockState(*occ), sqrt(n_src * (n_dst + 1))
