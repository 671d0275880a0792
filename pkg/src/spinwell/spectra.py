"""Ground states, coupling sweeps and step detection."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import observables as obs
from .fock import Basis, Mode
from .lanczos import ConvergenceError, lowest_eigenpair
from .model import ModelParams, SparseHermitian, assemble

log = logging.getLogger(__name__)

DENSE_THRESHOLD = 2000
DEGENERACY_RTOL = 1e-9
RESIDUAL_RTOL = 1e-9


class SolverError(RuntimeError):
    def __init__(self, message, residual=None, omega=None):
        super().__init__(message)
        self.residual = residual
        self.omega = omega


@dataclass
class GroundSolution:
    energy: float
    vector: np.ndarray
    gap: float
    degenerate: bool
    residual: float = 0.0
    method: str = "dense"


def fix_phase(v: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude amplitude real and positive."""
    i = int(np.argmax(np.abs(v)))
    a = v[i]
    return v * (abs(a) / a) if a != 0 else v


def _spectral_scale(H) -> float:
    if sp.issparse(H):
        return float(abs(H).sum(axis=1).max())
    return float(np.abs(H).sum(axis=1).max())


def ground_state(H, method: str = "auto", dense_threshold: int = DENSE_THRESHOLD,
                 tol: float = 1e-12) -> GroundSolution:
    """Lowest eigenpair and first gap of a real symmetric Hamiltonian.

    ``method`` is ``"dense"``, ``"lanczos"`` or ``"auto"`` (dense up to
    ``dense_threshold`` basis states).
    """
    dim = H.shape[0]
    if method == "auto":
        method = "dense" if dim <= dense_threshold else "lanczos"
    diag = H.diagonal()
    diag_scale = float(np.max(np.abs(diag))) if dim else 0.0
    scale = max(_spectral_scale(H), 1e-300)

    if method == "dense":
        Hd = H.toarray() if sp.issparse(H) else np.asarray(H)
        w, V = np.linalg.eigh(Hd)
        e0, v = float(w[0]), V[:, 0]
        gap = float(w[1] - w[0]) if dim > 1 else np.inf
    elif method == "lanczos":
        try:
            e0, v = lowest_eigenpair(H, tol=tol)
            if dim > 1:
                e1, _ = lowest_eigenpair(H, deflate=v[:, None], tol=tol)
                gap = max(e1 - e0, 0.0)
            else:
                gap = np.inf
        except ConvergenceError as exc:
            raise SolverError(str(exc), residual=exc.residual) from exc
    else:
        raise ValueError(f"unknown method {method!r}")

    v = fix_phase(v / np.linalg.norm(v))
    residual = float(np.linalg.norm(H @ v - e0 * v))
    if residual > RESIDUAL_RTOL * scale:
        raise SolverError(
            f"ground state residual {residual:.3e} exceeds bound", residual=residual
        )
    degenerate = gap < DEGENERACY_RTOL * max(diag_scale, 1.0)
    return GroundSolution(e0, v, gap, degenerate, residual, method)


@dataclass
class SweepTable:
    """Ground-state observables along an increasing coupling grid."""

    omega: np.ndarray
    diff_e: np.ndarray
    diff_g: np.ndarray
    diff_total: np.ndarray
    energy: np.ndarray
    gap: np.ndarray
    xi2: np.ndarray
    params: ModelParams | None = None
    columns: tuple = field(
        default=("omega", "diff_e", "diff_g", "diff_total", "energy", "gap", "xi2"),
        repr=False,
    )

    def __len__(self) -> int:
        return self.omega.shape[0]

    def as_array(self) -> np.ndarray:
        return np.column_stack([getattr(self, c) for c in self.columns])


def _validate_grid(omegas) -> np.ndarray:
    omegas = np.asarray(omegas, dtype=float).ravel()
    if omegas.size == 0:
        raise ValueError("coupling grid is empty")
    if np.any(np.diff(omegas) <= 0):
        raise ValueError("coupling grid must be strictly increasing")
    if omegas[0] < 0:
        raise ValueError("coupling strengths must be non-negative")
    return omegas


def omega_grid(omega_min: float, omega_max: float, step: float) -> np.ndarray:
    """Inclusive uniform grid; endpoints are reproduced exactly."""
    if step <= 0:
        raise ValueError("grid step must be positive")
    n = int(np.floor((omega_max - omega_min) / step + 1e-9))
    if n < 0:
        return np.empty(0)
    return omega_min + step * np.arange(n + 1)


def sweep_ground(params: ModelParams, omegas, H: SparseHermitian | None = None,
                 method: str = "auto", dense_threshold: int = DENSE_THRESHOLD,
                 threads: int = 1, omega_prime_ratio: float | None = None,
                 ) -> SweepTable:
    """Ground-state observables at each coupling ``Omega`` of ``omegas``.

    ``Omega'`` is taken from ``params`` unless ``omega_prime_ratio`` is
    given, in which case it follows ``Omega' = ratio * Omega``.
    """
    omegas = _validate_grid(omegas)
    if H is None:
        H = assemble(Basis(params.N, max_atoms=max(params.N, 40)))
    basis = H.basis

    def solve(om):
        op = params.OmegaPrime if omega_prime_ratio is None else omega_prime_ratio * om
        p = params.with_(Omega=float(om), OmegaPrime=float(op))
        try:
            g = ground_state(H.evaluate(p), method=method,
                             dense_threshold=dense_threshold)
        except SolverError as exc:
            exc.omega = float(om)
            raise SolverError(f"solver failed at Omega={om:g}: {exc}",
                              residual=exc.residual, omega=float(om)) from exc
        pops = obs.populations(g.vector, basis)
        spin = obs.collective_spin(g.vector, basis)
        if g.degenerate:
            log.warning("degenerate ground state at Omega=%g (gap %.3e)", om, g.gap)
        return (pops.diff_e, pops.diff_g, pops.diff_total, g.energy, g.gap,
                spin.xi2_zx)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(solve, omegas))
    else:
        rows = [solve(om) for om in omegas]
    cols = np.array(rows, dtype=float).reshape(len(omegas), 6)
    return SweepTable(omegas, *cols.T, params=params)


def detect_steps(table, levels=None):
    """Couplings where the total population difference crosses odd integers.

    Each crossing of ``1, 3, ..., N - 1`` is located by linear interpolation
    between the bracketing rows (first upward crossing). Levels that the
    table never reaches are left out, so the list can be partial.
    """
    omega = np.asarray(table.omega, dtype=float)
    y = np.asarray(table.diff_total, dtype=float)
    if levels is None:
        N = table.params.N if table.params is not None else int(round(np.nanmax(y)))
        levels = range(1, N, 2)
    found = []
    for level in levels:
        above = np.nonzero(y >= level)[0]
        if above.size == 0 or above[0] == 0:
            continue
        i = above[0]
        x0, x1, y0, y1 = omega[i - 1], omega[i], y[i - 1], y[i]
        found.append(float(x0 + (level - y0) * (x1 - x0) / (y1 - y0)))
    return found


def find_plateaus(x, y, tol: float, min_width: float):
    """Maximal runs where ``max(y) - min(y) < tol`` spanning at least ``min_width``.

    Returns a list of ``(x_start, x_end, mean_y)``. Runs are grown greedily
    from the left and do not overlap.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = []
    i, n = 0, len(x)
    while i < n:
        lo = hi = y[i]
        j = i
        while j + 1 < n:
            lo2, hi2 = min(lo, y[j + 1]), max(hi, y[j + 1])
            if hi2 - lo2 >= tol:
                break
            lo, hi = lo2, hi2
            j += 1
        if x[j] - x[i] >= min_width:
            out.append((float(x[i]), float(x[j]), float(np.mean(y[i:j + 1]))))
            i = j + 1
        else:
            i += 1
    return out


def sector_restricted_ground_energy(H: SparseHermitian, p: ModelParams, n: int) -> float:
    """Lowest energy with exactly ``N/2 + n`` atoms in the left well.

    Tunnelling couples different sectors only, so restricting the matrix to
    one sector drops it entirely.
    """
    basis = H.basis
    occ = basis.states
    n_left = occ[:, Mode.eL] + occ[:, Mode.gL]
    idx = np.nonzero(n_left == basis.N // 2 + n)[0]
    if idx.size == 0:
        raise ValueError(f"empty sector n={n} for N={basis.N}")
    M = H.evaluate(p)[idx][:, idx].toarray()
    return float(np.linalg.eigvalsh(M)[0])


def count_dwell_steps(y, levels, halfwidth: float = 0.25, contrast: float = 2.0):
    """Number of ``levels`` at which a uniformly sampled trace lingers.

    A stepped transfer spends longer near each integer plateau value
    ``L`` than near the half-way values ``L - 1`` and ``L + 1`` between
    plateaus. Level ``L`` counts as a step when the fraction of samples with
    ``|y - L| < halfwidth`` is at least ``contrast`` times the mean fraction
    found at its two neighbours. A smooth, linear-like trace has equal
    dwell everywhere and scores zero.
    """
    y = np.asarray(y, dtype=float)
    y = y[np.isfinite(y)]
    if y.size == 0:
        return 0

    def dwell(level):
        return np.count_nonzero(np.abs(y - level) < halfwidth) / y.size

    count = 0
    for level in levels:
        neighbours = 0.5 * (dwell(level - 1) + dwell(level + 1))
        here = dwell(level)
        if here > 0 and here >= contrast * neighbours:
            count += 1
    return count
