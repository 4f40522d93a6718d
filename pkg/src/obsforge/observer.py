"""Adversary-side state observer on the attack-induced pair.

The gain is designed so that sigma(Fbar + (B+L) Hbar) sits at the desired
poles: that matrix is the lower-right block of the block-triangularized
augmented Jacobian and governs how fast the estimate catches the state.
Placement happens on (Fbar, Hbar) with the combined gain Ltilde = B + L,
then L = Ltilde - B is recovered.

Also provides the coupled right-hand sides (plant under attack, observer,
estimation error) and the augmented Jacobian pair used for the spectrum
split sigma(J_phi) = sigma(A) u sigma(Fbar + (B+L) Hbar).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SynthesisError, ValidationError
from .numerics import (
    eig,
    place_poles_dual,
    spectral_abscissa,
    spectrum_distance,
)

__all__ = [
    "ObserverDesign",
    "AugmentedJacobian",
    "default_poles",
    "design_gain",
    "gain_from_vector",
    "plant_rhs",
    "observer_rhs",
    "error_rhs",
    "augmented_jacobian",
]

PLACEMENT_TOL = 1e-6


@dataclass(frozen=True)
class ObserverDesign:
    L: np.ndarray  # n x 1 innovation gain
    desired_poles: np.ndarray
    placed_poles: np.ndarray
    placement_error: float


def default_poles(A, n):
    """Real, unit-spaced targets from -(a0+n-1) to -a0, a0 = 1.5 |abscissa of A|.

    Keeps the observer strictly faster than the slowest loop mode.
    """
    a0 = 1.5 * abs(spectral_abscissa(A))
    return np.array([-(a0 + n - 1 - i) for i in range(n)], dtype=complex)


def design_gain(design, B, desired_poles=None) -> ObserverDesign:
    """Place sigma(Fbar + (B+L) Hbar) at ``desired_poles`` and recover L.

    Parameters
    ----------
    design : AttackDesign
        Supplies the observable pair (Fbar, Hbar).
    B : (n, 1) array_like
        Closed-loop input column.
    desired_poles : optional length-n conjugate-closed sequence, Re < 0
        Defaults to :func:`default_poles` on Fbar's ambient loop.

    Raises
    ------
    SynthesisError
        If the recomputed spectrum misses the target multiset by more than
        1e-6; the message carries the observability conditioning.
    """
    B = np.asarray(B, dtype=float).reshape(-1, 1)
    n = design.Fbar.shape[0]
    if desired_poles is None:
        desired_poles = default_poles(design.Fbar - B @ design.Hbar, n)
    desired_poles = np.asarray(desired_poles, dtype=complex).reshape(-1)
    if desired_poles.shape != (n,):
        raise ValidationError("expected %d poles" % n, field="desired_poles")
    if np.max(desired_poles.real) >= 0:
        raise ValidationError(
            "all desired poles need strictly negative real parts",
            field="desired_poles",
        )

    Ltilde = place_poles_dual(design.Fbar, design.Hbar, desired_poles)
    L = Ltilde - B
    placed = eig(design.Fbar + (B + L) @ design.Hbar).values
    err = spectrum_distance(placed, desired_poles)
    if err > PLACEMENT_TOL:
        obs_rows = [design.Hbar]
        for _ in range(n - 1):
            obs_rows.append(obs_rows[-1] @ design.Fbar)
        cond = np.linalg.cond(np.vstack(obs_rows))
        raise SynthesisError(
            "placed spectrum misses target by %.3e (> %.1e); observability "
            "matrix condition %.3e" % (err, PLACEMENT_TOL, cond)
        )
    L.setflags(write=False)
    return ObserverDesign(
        L=L,
        desired_poles=desired_poles,
        placed_poles=placed,
        placement_error=float(err),
    )


def gain_from_vector(design, B, L, desired_poles=None) -> ObserverDesign:
    """Rebuild an ObserverDesign from a stored gain vector, verbatim.

    Recomputes the placed spectrum and the placement error against
    ``desired_poles`` (taken to be the placed spectrum itself when omitted),
    so a reloaded gain reports the same diagnostics as a fresh design.
    """
    B = np.asarray(B, dtype=float).reshape(-1, 1)
    L = np.array(L, dtype=float).reshape(-1, 1)
    placed = eig(design.Fbar + (B + L) @ design.Hbar).values
    if desired_poles is None:
        desired_poles = placed.copy()
    desired_poles = np.asarray(desired_poles, dtype=complex).reshape(-1)
    err = spectrum_distance(placed, desired_poles)
    L.setflags(write=False)
    return ObserverDesign(
        L=L,
        desired_poles=desired_poles,
        placed_poles=placed,
        placement_error=float(err),
    )


def plant_rhs(closed_loop, design, z, zhat):
    """Attacked loop: dz/dt = A z + B (z'Qz + a(zhat))."""
    z = np.asarray(z, dtype=float)
    zhat = np.asarray(zhat, dtype=float)
    a = float(design.Hbar[0] @ zhat)
    return closed_loop.A @ z + closed_loop.B[:, 0] * (z @ closed_loop.Q @ z + a)


def observer_rhs(closed_loop, design, obs, zhat, ytilde):
    """Observer: dzhat/dt = A zhat + B m(zhat) + L (m(zhat) - ytilde).

    m(zhat) = zhat'Q zhat + 2 Hbar zhat is the output model the adversary
    fits to the corrupted measurement; the factor 2 comes from the injected
    attack showing up both in the measurement and in the model gradient.
    """
    zhat = np.asarray(zhat, dtype=float)
    m = zhat @ closed_loop.Q @ zhat + 2.0 * float(design.Hbar[0] @ zhat)
    return (
        closed_loop.A @ zhat
        + closed_loop.B[:, 0] * m
        + obs.L[:, 0] * (m - float(ytilde))
    )


def error_rhs(closed_loop, design, obs, z, e):
    """Estimation error: de/dt = (Fbar+L Hbar) e + (B+L) Hbar z + (B+L)(2z'Qe + e'Qe).

    Algebraically identical to observer_rhs - plant_rhs under zhat = z + e
    and a consistent corrupted measurement; the subtraction-free form keeps
    the linear error matrix Fbar + L Hbar explicit.
    """
    z = np.asarray(z, dtype=float)
    e = np.asarray(e, dtype=float)
    BL = closed_loop.B[:, 0] + obs.L[:, 0]
    lin = (design.Fbar + obs.L @ design.Hbar) @ e
    return (
        lin
        + BL * float(design.Hbar[0] @ z)
        + BL * (2.0 * (z @ closed_loop.Q @ e) + e @ closed_loop.Q @ e)
    )


@dataclass(frozen=True)
class AugmentedJacobian:
    """Origin Jacobian of the coupled (z, e) system and its triangular twin."""

    J_phi: np.ndarray
    J_tilde: np.ndarray
    T: np.ndarray


def augmented_jacobian(closed_loop, design, obs) -> AugmentedJacobian:
    """Assemble J_phi (coupled (z,e) coordinates) and J_tilde ((z, zhat)).

    The integer change of coordinates T = [[I,0],[I,I]] maps one to the
    other, making J_tilde block upper-triangular with diagonal blocks A and
    Fbar + (B+L) Hbar; hence the augmented spectrum is exactly the union of
    the loop spectrum and the placed observer spectrum.
    """
    n = closed_loop.n
    A, B = closed_loop.A, closed_loop.B
    Fbar, Hbar = design.Fbar, design.Hbar
    L = obs.L
    BH = B @ Hbar
    LH = L @ Hbar
    BLH = (B + L) @ Hbar

    J_phi = np.zeros((2 * n, 2 * n))
    J_phi[:n, :n] = Fbar
    J_phi[:n, n:] = BH
    J_phi[n:, :n] = BLH
    J_phi[n:, n:] = Fbar + LH

    J_tilde = np.zeros((2 * n, 2 * n))
    J_tilde[:n, :n] = A
    J_tilde[:n, n:] = BH
    J_tilde[n:, n:] = Fbar + BLH

    T = np.block([[np.eye(n), np.zeros((n, n))], [np.eye(n), np.eye(n)]])
    for M in (J_phi, J_tilde, T):
        M.setflags(write=False)
    return AugmentedJacobian(J_phi=J_phi, J_tilde=J_tilde, T=T)
