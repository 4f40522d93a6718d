"""Dense linear-algebra kernels used by every other module.

Everything here works on small dense matrices (desk scale, n up to a few
tens), so the implementations favour transparency over asymptotics: the
Lyapunov equation is solved by Kronecker vectorization and pole placement
uses Ackermann's formula on the dual pair. Complex arithmetic stays inside
this module; returned gains and solutions are real.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ConditioningWarning, NumericError

__all__ = [
    "EigenPairs",
    "eig",
    "solve_lyapunov",
    "place_poles_dual",
    "spectral_norm",
    "lambda_min_sym",
    "spectral_abscissa",
    "is_hurwitz",
    "spectrum_distance",
]

#: relative residual allowed on eigenpairs and Lyapunov solutions
TOL_RESIDUAL = 1e-8

#: observability/controllability condition number beyond which placement warns
COND_WARN = 1e12


@dataclass(frozen=True)
class EigenPairs:
    """Eigenvalues with column-paired unit eigenvectors.

    ``values[i]`` goes with ``vectors[:, i]``. Complex eigenvalues of real
    matrices appear with the two members of each conjugate pair adjacent,
    positive imaginary part first.
    """

    values: np.ndarray
    vectors: np.ndarray

    def __len__(self):
        return self.values.shape[0]

    def __iter__(self):
        for i in range(len(self)):
            yield self.values[i], self.vectors[:, i]


def eig(M):
    """Eigendecomposition of a real square matrix.

    Parameters
    ----------
    M : (m, m) array_like
        Real matrix with finite entries.

    Returns
    -------
    EigenPairs
        Unit eigenvectors, residual-checked: ``||M v - lam v|| <= 1e-8 ||M||``.

    Raises
    ------
    NumericError
        If the QR iteration fails to converge or a residual exceeds tolerance.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("eig expects a square matrix, got shape %s" % (M.shape,))
    if not np.all(np.isfinite(M)):
        raise ValueError("eig expects finite entries")
    try:
        values, vectors = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        # numpy does not expose the LAPACK iteration count; forward its report
        raise NumericError("eigendecomposition failed to converge: %s" % exc) from exc

    # sort so conjugate pairs sit together, +imag before -imag
    order = np.lexsort((-values.imag, np.abs(values.imag), values.real))
    values = values[order]
    vectors = vectors[:, order]
    vectors = vectors / np.linalg.norm(vectors, axis=0, keepdims=True)

    scale = spectral_norm(M)
    resid = np.linalg.norm(M @ vectors - vectors * values, axis=0)
    if np.any(resid > TOL_RESIDUAL * max(scale, 1e-300)):
        raise NumericError(
            "eigenpair residual %.3e exceeds %.1e * ||M|| (cond(V)=%.3e)"
            % (resid.max(), TOL_RESIDUAL, np.linalg.cond(vectors))
        )
    return EigenPairs(values=values, vectors=vectors)


def solve_lyapunov(A, Y):
    """Solve the continuous Lyapunov equation A'S + SA = -Y.

    Parameters
    ----------
    A : (n, n) array_like
        Hurwitz matrix (caller-verified; a non-Hurwitz A surfaces here as a
        singular system or an indefinite solution).
    Y : (n, n) array_like
        Symmetric positive definite right-hand side.

    Returns
    -------
    S : (n, n) ndarray
        Symmetric positive definite solution with
        ``||A'S + SA + Y|| <= 1e-8 ||Y||``.

    Notes
    -----
    Solved by Kronecker vectorization, (I kron A' + A' kron I) vec(S) =
    -vec(Y), then symmetrized. O(n^6) but transparent, fine at desk scale.
    """
    A = np.asarray(A, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or Y.shape != (n, n):
        raise ValueError(
            "shape mismatch: A %s vs Y %s" % (A.shape, Y.shape)
        )
    I = np.eye(n)
    K = np.kron(I, A.T) + np.kron(A.T, I)
    try:
        vecS = np.linalg.solve(K, -Y.reshape(n * n, order="F"))
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            "Lyapunov system is singular (A has eigenvalue pairs summing to "
            "zero, e.g. A not Hurwitz): %s" % exc
        ) from exc
    S = vecS.reshape((n, n), order="F")
    S = 0.5 * (S + S.T)

    resid = spectral_norm(A.T @ S + S @ A + Y)
    if resid > TOL_RESIDUAL * spectral_norm(Y):
        raise NumericError(
            "Lyapunov residual %.3e exceeds %.1e * ||Y||" % (resid, TOL_RESIDUAL)
        )
    if np.any(np.linalg.eigvalsh(S) <= 0):
        raise NumericError(
            "Lyapunov solution is not positive definite "
            "(lambda_min = %.3e); is A Hurwitz?" % np.linalg.eigvalsh(S).min()
        )
    return S


def place_poles_dual(F, Hrow, desired):
    """Output-injection gain placing sigma(F + Lcol @ Hrow) at ``desired``.

    Ackermann's formula applied to the dual single-input pair (F', Hrow').
    Exact for the single-output case; the returned gain is real, which the
    conjugate-closure precondition on ``desired`` makes well-posed.

    Parameters
    ----------
    F : (n, n) array_like
    Hrow : (1, n) array_like
        Row output map; (F, Hrow) must be observable (caller-verified).
    desired : length-n complex sequence, closed under conjugation

    Returns
    -------
    Lcol : (n, 1) ndarray

    Warns
    -----
    ConditioningWarning
        When the observability matrix condition number exceeds 1e12.

    Raises
    ------
    NumericError
        If the pair is unobservable (singular observability matrix).
    ValueError
        If ``desired`` is not closed under conjugation.
    """
    F = np.asarray(F, dtype=float)
    Hrow = np.atleast_2d(np.asarray(Hrow, dtype=float))
    n = F.shape[0]
    desired = np.asarray(desired, dtype=complex)
    if desired.shape != (n,):
        raise ValueError("need exactly n=%d target eigenvalues" % n)

    coeffs = np.poly(desired)
    if np.max(np.abs(coeffs.imag)) > 1e-9 * max(1.0, np.max(np.abs(coeffs))):
        raise ValueError("desired spectrum is not closed under conjugation")
    coeffs = coeffs.real

    # dual controllable pair
    At, bt = F.T, Hrow.T
    C = np.hstack([np.linalg.matrix_power(At, i) @ bt for i in range(n)])
    sv = np.linalg.svd(C, compute_uv=False)
    if sv[-1] <= n * np.finfo(float).eps * sv[0] or sv[0] == 0.0:
        raise NumericError(
            "(F, Hrow) is unobservable: observability matrix is singular "
            "(singular values %s)" % np.array2string(sv, precision=3)
        )
    cond = sv[0] / sv[-1]
    if cond > COND_WARN:
        warnings.warn(
            "observability matrix condition %.3e exceeds %.1e; placed poles "
            "may be inaccurate" % (cond, COND_WARN),
            ConditioningWarning,
            stacklevel=2,
        )

    # p(At) by Horner
    pA = np.zeros_like(At)
    for c in coeffs:
        pA = pA @ At + c * np.eye(n)
    last_row = np.zeros((1, n))
    last_row[0, -1] = 1.0
    k = last_row @ np.linalg.solve(C, pA)  # sigma(At - bt k) = desired
    return -k.T


def spectral_norm(M):
    """Largest singular value (induced 2-norm)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def lambda_min_sym(M, tol=1e-12):
    """Smallest eigenvalue of a symmetric matrix.

    Raises ValueError if the input is asymmetric beyond ``tol`` relative,
    since the real-spectrum reading would silently be wrong there.
    """
    M = np.asarray(M, dtype=float)
    scale = max(np.abs(M).max(), 1.0)
    if not np.allclose(M, M.T, atol=tol * scale, rtol=0.0):
        raise ValueError(
            "lambda_min_sym requires a symmetric matrix; asymmetry %.3e"
            % np.abs(M - M.T).max()
        )
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])


def spectral_abscissa(M):
    """max Re lambda over the spectrum of M."""
    return float(np.max(np.linalg.eigvals(np.asarray(M, dtype=float)).real))


def is_hurwitz(M, tol=1e-9):
    """True when every eigenvalue satisfies Re lambda < -tol."""
    return spectral_abscissa(M) < -tol


def spectrum_distance(got, target):
    """Worst-case eigenvalue mismatch between two equal-size multisets.

    Matches the two spectra by minimum-cost assignment and returns the
    largest paired distance, so the result is pairing-order independent.
    """
    got = np.asarray(got, dtype=complex)
    target = np.asarray(target, dtype=complex)
    if got.shape != target.shape:
        raise ValueError("spectra differ in size: %d vs %d" % (got.size, target.size))
    cost = np.abs(got[:, None] - target[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())
