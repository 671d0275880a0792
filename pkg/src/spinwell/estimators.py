"""scikit-learn style wrappers around the sweep and ramp drivers.

The physics has no training data, so ``fit`` only prepares the operator
(``GroundStateSweep``) or integrates the trajectory (``RampEvolution``).
The wrappers exist so parameter scans compose with ``get_params`` /
``set_params`` / ``clone`` and so inputs go through the usual validation.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .dynamics import RampProtocol, default_t_final, ground_fidelity, initial_state, propagate
from .fock import Basis
from .model import ModelParams, assemble
from .spectra import DENSE_THRESHOLD, sweep_ground


class GroundStateSweep(TransformerMixin, BaseEstimator):
    """Ground-state observables as a function of the coupling ``Omega``.

    Parameters
    ----------
    N : int
        Total atom number.
    J, U, Delta, OmegaPrime : float
        Tunnelling, interaction, detuning and right-well coupling.
    method : {"auto", "dense", "lanczos"}
        Eigensolver selection.
    dense_threshold : int
        Largest basis for which ``"auto"`` uses dense diagonalisation.

    Attributes
    ----------
    hamiltonian_ : SparseHermitian
        Operator terms on the fixed-``N`` basis, built by ``fit``.
    n_features_in_ : int
        Always 1: the single column of ``X`` is ``Omega``.

    Examples
    --------
    >>> est = GroundStateSweep(N=4, U=10.0, Delta=20.0).fit()
    >>> est.transform([[0.0], [40.0]]).shape
    (2, 6)
    """

    columns = ("diff_e", "diff_g", "diff_total", "energy", "gap", "xi2")

    def __init__(self, N=8, J=1.0, U=0.0, Delta=0.0, OmegaPrime=0.0, method="auto",
                 dense_threshold=DENSE_THRESHOLD):
        self.N = N
        self.J = J
        self.U = U
        self.Delta = Delta
        self.OmegaPrime = OmegaPrime
        self.method = method
        self.dense_threshold = dense_threshold

    def _params(self) -> ModelParams:
        return ModelParams(N=self.N, J=self.J, U=self.U, Delta=self.Delta,
                           OmegaPrime=self.OmegaPrime)

    def fit(self, X=None, y=None):
        if self.method not in ("auto", "dense", "lanczos"):
            raise ValueError(f"unknown method {self.method!r}")
        self.params_ = self._params()
        self.hamiltonian_ = assemble(Basis(self.N, max_atoms=max(self.N, 40)))
        self.n_features_in_ = 1
        return self

    def _omegas(self, X):
        X = check_array(X, ensure_2d=True, dtype=float)
        if X.shape[1] != 1:
            raise ValueError(f"X must have a single Omega column, got {X.shape[1]}")
        return X[:, 0]

    def transform(self, X):
        """Rows of ``(diff_e, diff_g, diff_total, energy, gap, xi2)``.

        ``X`` need not be sorted; rows come back in input order.
        """
        check_is_fitted(self, "hamiltonian_")
        omegas = self._omegas(X)
        order = np.argsort(omegas, kind="stable")
        uniq, inverse = np.unique(omegas[order], return_inverse=True)
        table = sweep_ground(self.params_, uniq, H=self.hamiltonian_, method=self.method,
                             dense_threshold=self.dense_threshold)
        out = np.empty((omegas.size, len(self.columns)))
        out[order] = table.as_array()[inverse, 1:]
        return out

    def predict(self, X):
        """Total left-right population difference of the ground state."""
        return self.transform(X)[:, 2]


class RampEvolution(BaseEstimator):
    """Evolution from the ``Omega = 0`` ground state under ``Omega = v t``.

    ``fit`` integrates the full ramp; ``predict`` linearly interpolates the
    recorded total population difference at the requested times.

    Parameters
    ----------
    N, J, U, Delta : model parameters
    v, v_prime : float
        Ramp rates of the left- and right-well couplings.
    t_final : float or None
        Ramp duration; ``None`` runs 10% beyond the last threshold.
    dt : float
        Integration step.
    fidelity : bool
        Also record the overlap with the instantaneous ground state.
    """

    def __init__(self, N=8, J=1.0, U=10.0, Delta=20.0, v=2.5, v_prime=0.0,
                 t_final=None, dt=0.01, fidelity=False):
        self.N = N
        self.J = J
        self.U = U
        self.Delta = Delta
        self.v = v
        self.v_prime = v_prime
        self.t_final = t_final
        self.dt = dt
        self.fidelity = fidelity

    def fit(self, X=None, y=None):
        p = ModelParams(N=self.N, J=self.J, U=self.U, Delta=self.Delta)
        t_final = self.t_final
        if t_final is None:
            t_final = default_t_final(self.N, self.U, self.Delta, self.v)
        proto = RampProtocol(self.v, t_final, self.dt, self.v_prime)
        H = assemble(Basis(self.N, max_atoms=max(self.N, 40)))
        psi0 = initial_state(H, p)
        traj = propagate(H, p, proto, psi0, keep_states=self.fidelity)
        if self.fidelity:
            traj.fidelity = ground_fidelity(traj, H, p, proto)
            traj.states = None
        self.protocol_ = proto
        self.trajectory_ = traj
        return self

    def predict(self, X):
        check_is_fitted(self, "trajectory_")
        t = check_array(X, ensure_2d=False, dtype=float).ravel()
        times = self.trajectory_.times
        if np.any((t < times[0]) | (t > times[-1])):
            raise ValueError(f"times must lie in [0, {times[-1]:g}]")
        return np.interp(t, times, self.trajectory_.diff_total)
