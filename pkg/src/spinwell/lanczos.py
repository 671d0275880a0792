"""Lanczos routines for real symmetric sparse operators.

Two uses: the lowest eigenpair (with optional deflation, so the first gap is
available even for degenerate spectra), and the action of ``exp(-i tau H)``
on a complex vector for time stepping. Both keep the full Krylov basis and
re-orthogonalise against it at every iteration.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import eigh_tridiagonal


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


def _orthogonalize(w, Q, k, deflate):
    # two passes of classical Gram-Schmidt keep the basis orthonormal to ~eps
    for _ in range(2):
        w -= Q[:, :k] @ (Q[:, :k].conj().T @ w)
        if deflate is not None:
            w -= deflate @ (deflate.conj().T @ w)
    return w


def lowest_eigenpair(
    A,
    v0=None,
    deflate=None,
    tol=1e-12,
    krylov_dim=60,
    max_restarts=200,
):
    """Lowest eigenpair of a real symmetric operator by restarted Lanczos.

    Parameters
    ----------
    A : sparse matrix or ndarray
        Real symmetric operator of shape ``(n, n)``.
    v0 : ndarray, optional
        Starting vector; defaults to the uniform vector.
    deflate : ndarray of shape (n, k), optional
        Orthonormal columns to project out (to reach the next eigenvalue).
    tol : float
        Convergence when ``||A x - theta x|| <= tol * scale`` where ``scale``
        is a cheap bound on ``||A||``.

    Returns
    -------
    theta : float
    x : ndarray
        Normalised eigenvector (real).
    """
    n = A.shape[0]
    if deflate is not None:
        deflate = np.asarray(deflate, dtype=float).reshape(n, -1)
    if v0 is None:
        v0 = np.ones(n)
    v = np.array(v0, dtype=float)
    if deflate is not None:
        v -= deflate @ (deflate.T @ v)
    nv = np.linalg.norm(v)
    if nv < 1e-300:
        raise ValueError("starting vector vanishes after deflation")
    v /= nv

    n_free = n - (0 if deflate is None else deflate.shape[1])
    if n_free <= 0:
        raise ValueError("nothing left after deflation")
    m = min(krylov_dim, n_free)
    scale = max(_norm_bound(A), 1e-300)

    residual = np.inf
    for _ in range(max_restarts):
        Q = np.zeros((n, m))
        alpha = np.zeros(m)
        beta = np.zeros(m)
        Q[:, 0] = v
        k_used = m
        for j in range(m):
            w = A @ Q[:, j]
            alpha[j] = Q[:, j] @ w
            w = _orthogonalize(w, Q, j + 1, deflate)
            b = np.linalg.norm(w)
            beta[j] = b
            if j + 1 == m:
                break
            if b < 1e-14 * scale:
                # invariant subspace reached: Ritz values are exact
                k_used = j + 1
                break
            Q[:, j + 1] = w / b
        if k_used == 1:
            theta, s = alpha[:1], np.ones((1, 1))
        else:
            theta, s = eigh_tridiagonal(
                alpha[:k_used], beta[: k_used - 1], select="i", select_range=(0, 0)
            )
        x = Q[:, :k_used] @ s[:, 0]
        x /= np.linalg.norm(x)
        r = A @ x - theta[0] * x
        if deflate is not None:
            r -= deflate @ (deflate.T @ r)
        residual = np.linalg.norm(r)
        if residual <= tol * scale:
            return float(theta[0]), x
        v = x
    raise ConvergenceError(
        f"Lanczos did not converge after {max_restarts} restarts "
        f"(residual {residual:.3e})",
        residual=residual,
    )


def _norm_bound(A):
    # max absolute row sum bounds the spectral norm of a symmetric matrix
    if hasattr(A, "tocsr"):
        return float(abs(A).sum(axis=1).max())
    return float(np.abs(A).sum(axis=1).max())


def expm_multiply_hermitian(A, psi, tau, tol=1e-13, max_dim=200):
    """Return ``exp(-1j * tau * A) @ psi`` for Hermitian ``A``.

    The Krylov space is grown until the a-posteriori error estimate
    ``beta_m * |[exp(-i tau T_m) e_1]_m| * ||psi||`` drops below ``tol``. The
    result is an isometric image of ``psi`` up to rounding, so the norm is
    preserved to machine precision. Passing ``A`` with complex data avoids a
    dtype conversion on every product.
    """
    psi = np.asarray(psi, dtype=complex)
    norm = np.linalg.norm(psi)
    if norm == 0.0 or tau == 0.0:
        return psi.copy()
    n = psi.shape[0]
    m_max = min(max_dim, n)
    V = np.empty((m_max, n), dtype=complex)
    alpha = np.zeros(m_max)
    beta = np.zeros(m_max)
    V[0] = psi / norm
    for j in range(m_max):
        w = A @ V[j]
        a = np.vdot(V[j], w).real
        alpha[j] = a
        w -= a * V[j]
        if j:
            w -= beta[j - 1] * V[j - 1]
        # one full re-orthogonalisation pass against the whole basis
        Vk = V[: j + 1]
        w -= (Vk.conj() @ w) @ Vk
        b = np.linalg.norm(w)
        beta[j] = b
        k = j + 1
        invariant = b < 1e-14 * max(abs(a), 1.0)
        if invariant or k == m_max or (k >= 6 and k % 2 == 0):
            c = _small_expm(alpha[:k], beta[: k - 1], tau)
            if invariant or b * abs(c[-1]) * norm < tol:
                return norm * (c @ Vk)
            if k == m_max:
                break
        V[j + 1] = w / b
    raise ConvergenceError(
        f"Krylov exponential did not converge within {m_max} vectors; "
        "reduce the time step"
    )


def _small_expm(alpha, beta, tau):
    """``exp(-i tau T) e_1`` for the tridiagonal ``T(alpha, beta)``."""
    if alpha.shape[0] == 1:
        return np.array([np.exp(-1j * tau * alpha[0])])
    T = np.diag(alpha) + np.diag(beta, 1) + np.diag(beta, -1)
    w, V = np.linalg.eigh(T)
    return V @ (np.exp(-1j * tau * w) * V[0, :])
