"""Fixed-step integration of the attacked loop coupled with its observer.

A single combined 2n-state vector field is integrated with classic RK4:

    zdot    = A z + B (z'Qz + Hbar zhat)
    zhatdot = A zhat + B m(zhat) + L (m(zhat) - ytilde)

with m(zhat) = zhat'Q zhat + 2 Hbar zhat and the corrupted measurement
ytilde = z'Qz + Hbar zhat rebuilt from the stage-consistent (z, zhat), not
held between steps. Fixed step keeps runs deterministic bit-for-bit, which
the golden tests rely on.

Batch integration (used by the Monte Carlo checks) runs the same arithmetic
over a stack of initial conditions; per-sample blow-ups are recorded, not
fatal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, ValidationError

__all__ = [
    "Trajectory",
    "DecayFit",
    "integrate",
    "integrate_batch",
    "fit_decay",
    "trajectory_to_csv",
    "write_gnuplot_stub",
]

DEFAULT_DT = 1e-3
DEFAULT_T = 5.0
FIT_SLACK = 0.05
NORM_LIMIT = 1e9


@dataclass(frozen=True)
class Trajectory:
    """Recorded run of the coupled system.

    ``e`` is stored as the exact float difference z_hat - z and ``y_tilde``
    as the exact sum y + a, so the bookkeeping identities hold bitwise.
    """

    times: np.ndarray
    z: np.ndarray
    z_hat: np.ndarray
    e: np.ndarray
    y: np.ndarray
    y_tilde: np.ndarray
    a: np.ndarray

    def __len__(self):
        return self.times.shape[0]

    @property
    def e_norm(self):
        return np.linalg.norm(self.e, axis=1)

    @property
    def z_norm(self):
        return np.linalg.norm(self.z, axis=1)


class _Field:
    """Vectorized combined vector field over rows of [z, zhat]."""

    def __init__(self, closed_loop, design, obs):
        self.n = closed_loop.n
        self.A = closed_loop.A
        self.Q = closed_loop.Q
        self.b = closed_loop.B[:, 0]
        self.h = design.Hbar[0]
        self.l = obs.L[:, 0]

    def __call__(self, S):
        n = self.n
        Z, Zh = S[:, :n], S[:, n:]
        hz = np.einsum("ij,ij->i", Z @ self.Q, Z)
        a = Zh @ self.h
        m = np.einsum("ij,ij->i", Zh @ self.Q, Zh) + 2.0 * a
        innov = m - (hz + a)
        dZ = Z @ self.A.T + np.outer(hz + a, self.b)
        dZh = Zh @ self.A.T + np.outer(m, self.b) + np.outer(innov, self.l)
        return np.concatenate([dZ, dZh], axis=1)


def _rk4_batch(field, S0, dt, n_steps, stride, norm_limit):
    """Shared RK4 core.

    Returns (times, states, blowup_times) where states has shape
    (n_records, n_samples, 2n); entries after a sample's divergence are NaN
    and blowup_times holds the first instant its norm exceeded the limit
    (NaN for samples that stayed finite).
    """
    m = S0.shape[0]
    rec_idx = list(range(0, n_steps + 1, stride))
    if rec_idx[-1] != n_steps:
        rec_idx.append(n_steps)
    rec_pos = {k: i for i, k in enumerate(rec_idx)}
    out = np.full((len(rec_idx), m, S0.shape[1]), np.nan)
    blowup = np.full(m, np.nan)
    alive = np.ones(m, dtype=bool)

    S = S0.astype(float).copy()
    out[0] = S
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, n_steps + 1):
            k1 = field(S)
            k2 = field(S + 0.5 * dt * k1)
            k3 = field(S + 0.5 * dt * k2)
            k4 = field(S + dt * k3)
            S = S + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

            norms = np.linalg.norm(S, axis=1)
            bad = alive & ~(norms <= norm_limit)  # catches inf and NaN too
            if np.any(bad):
                blowup[bad] = k * dt
                alive &= ~bad
                S[bad] = 0.0  # keep the arithmetic finite for the survivors
            if k in rec_pos:
                row = out[rec_pos[k]]
                row[alive] = S[alive]
    times = np.asarray(rec_idx, dtype=float) * dt
    return times, out, blowup


def _check_steps(dt, T):
    if not dt > 0:
        raise ValidationError("must be positive", field="dt")
    if T < dt:
        raise ValidationError("horizon must be at least one step", field="T")
    n_steps = int(round(T / dt))
    return n_steps


def integrate(closed_loop, design, obs, z0, zhat0, dt=DEFAULT_DT, T=DEFAULT_T, stride=1):
    """Integrate one run and record every ``stride``-th step (plus the last).

    Raises DivergenceError carrying the blow-up time if the combined state
    norm exceeds 1e9.
    """
    n = closed_loop.n
    z0 = np.asarray(z0, dtype=float).reshape(-1)
    zhat0 = np.asarray(zhat0, dtype=float).reshape(-1)
    if z0.shape != (n,) or zhat0.shape != (n,):
        raise ValidationError(
            "initial states must have length %d" % n, field="z0/zhat0"
        )
    n_steps = _check_steps(dt, T)
    field = _Field(closed_loop, design, obs)
    S0 = np.concatenate([z0, zhat0])[None, :]
    times, states, blowup = _rk4_batch(field, S0, dt, n_steps, stride, NORM_LIMIT)
    if np.isfinite(blowup[0]):
        raise DivergenceError(
            "state norm exceeded %.1e at t = %.6g s" % (NORM_LIMIT, blowup[0]),
            time=float(blowup[0]),
        )
    Z = states[:, 0, :n]
    Zh = states[:, 0, n:]
    y = np.einsum("ij,ij->i", Z @ closed_loop.Q, Z)
    a = Zh @ design.Hbar[0]
    traj = Trajectory(
        times=times,
        z=Z,
        z_hat=Zh,
        e=Zh - Z,
        y=y,
        y_tilde=y + a,
        a=a,
    )
    return traj


def integrate_batch(
    closed_loop,
    design,
    obs,
    z0_batch,
    zhat0_batch,
    dt=DEFAULT_DT,
    T=DEFAULT_T,
    stride=1,
    norm_limit=NORM_LIMIT,
):
    """Integrate a stack of initial conditions with shared arithmetic.

    Returns (times, z, z_hat, blowup_times): z and z_hat have shape
    (n_records, n_samples, n); rows after a sample's divergence are NaN.
    Identical numerics to :func:`integrate`, just broadcast across rows.
    """
    n = closed_loop.n
    Z0 = np.atleast_2d(np.asarray(z0_batch, dtype=float))
    Zh0 = np.atleast_2d(np.asarray(zhat0_batch, dtype=float))
    if Z0.shape != Zh0.shape or Z0.shape[1] != n:
        raise ValidationError(
            "batch shapes must match and have width %d" % n, field="z0_batch"
        )
    n_steps = _check_steps(dt, T)
    field = _Field(closed_loop, design, obs)
    S0 = np.concatenate([Z0, Zh0], axis=1)
    times, states, blowup = _rk4_batch(field, S0, dt, n_steps, stride, norm_limit)
    return times, states[:, :, :n], states[:, :, n:], blowup


def fit_decay(traj, window=None, fit_slack=FIT_SLACK, series="e"):
    """Exponential envelope fit of a trajectory norm.

    Least squares on the log of the chosen norm series over the window
    gives the rate alpha (minus the slope). The intercept is then raised by
    the smallest amount that makes the line an envelope within
    ``fit_slack``; for a clean exponential that adjustment is zero and
    kappa comes out at 1.

    Parameters
    ----------
    traj : Trajectory
    window : (t_start, t_end), default the full recorded span
    fit_slack : relative envelope slack, default 5%
    series : "e" for the estimation error norm, "z" for the state norm

    Returns
    -------
    DecayFit

    Raises
    ------
    ValidationError
        If the norm vanishes at the window start or fewer than two usable
        points remain (degenerate fit).
    """
    if series == "e":
        norms = traj.e_norm
    elif series == "z":
        norms = traj.z_norm
    else:
        raise ValidationError("must be 'e' or 'z', got %r" % (series,), field="series")
    t = traj.times
    if window is None:
        window = (float(t[0]), float(t[-1]))
    t0, t1 = float(window[0]), float(window[1])
    sel = np.nonzero((t >= t0) & (t <= t1))[0]
    if sel.size == 0:
        raise ValidationError("window contains no samples", field="window")
    if norms[sel[0]] == 0.0:
        raise ValidationError("norm vanishes at the window start", field="window")

    zeros = np.nonzero(norms[sel] == 0.0)[0]
    if zeros.size:
        sel = sel[: zeros[0]]  # fit the prefix before the first exact zero
    if sel.size < 2:
        raise ValidationError(
            "degenerate fit: only %d usable sample(s) in window" % sel.size,
            field="window",
        )

    tw = t[sel]
    logn = np.log(norms[sel])
    slope, intercept = np.polyfit(tw, logn, 1)
    predicted = slope * tw + intercept
    ss_res = float(np.sum((logn - predicted) ** 2))
    ss_tot = float(np.sum((logn - logn.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)

    # raise the line just enough to dominate the window within the slack
    excess = float(np.max(logn - predicted)) - np.log1p(fit_slack)
    if excess > 0.0:
        intercept += excess

    e0 = norms[0]
    alpha = -float(slope)
    kappa = float(np.exp(intercept) / e0) if e0 > 0 else float(np.exp(intercept))
    return DecayFit(
        kappa=kappa,
        alpha=alpha,
        r_squared=r_squared,
        window=(float(tw[0]), float(tw[-1])),
        n_points=int(sel.size),
        fit_slack=float(fit_slack),
    )


@dataclass(frozen=True)
class DecayFit:
    """Envelope norm(t) <= kappa exp(-alpha t) norm(0) (1 + fit_slack)."""

    kappa: float
    alpha: float
    r_squared: float
    window: tuple
    n_points: int
    fit_slack: float

    def as_dict(self):
        return {
            "kappa": self.kappa,
            "alpha": self.alpha,
            "r_squared": self.r_squared,
            "window": list(self.window),
            "n_points": self.n_points,
            "fit_slack": self.fit_slack,
        }


def trajectory_to_csv(traj, path):
    """Write `t,z1..zn,zhat1..zhatn,e1..en,y,ytilde,a` rows at 17 significant digits."""
    n = traj.z.shape[1]
    header = ",".join(
        ["t"]
        + ["z%d" % (i + 1) for i in range(n)]
        + ["zhat%d" % (i + 1) for i in range(n)]
        + ["e%d" % (i + 1) for i in range(n)]
        + ["y", "ytilde", "a"]
    )
    table = np.column_stack(
        [traj.times, traj.z, traj.z_hat, traj.e, traj.y, traj.y_tilde, traj.a]
    )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in table:
            fh.write(",".join("%.17g" % v for v in row) + "\n")


def write_gnuplot_stub(csv_path, script_path, n):
    """Companion gnuplot script: states vs estimates, then the two norms."""
    import os

    csv_name = os.path.basename(str(csv_path))
    norm_z = " + ".join("$%d**2" % (2 + i) for i in range(n))
    norm_e = " + ".join("$%d**2" % (2 + 2 * n + i) for i in range(n))
    lines = [
        "# gnuplot script stub; run: gnuplot -persist %s" % os.path.basename(str(script_path)),
        "set datafile separator ','",
        "csv = '%s'" % csv_name,
        "set key outside",
        "set xlabel 't [s]'",
        "",
        "# states against their estimates",
        "plot \\",
    ]
    parts = []
    for i in range(n):
        parts.append("  csv using 1:%d with lines title 'z%d'" % (2 + i, i + 1))
        parts.append(
            "  csv using 1:%d with lines dashtype 2 title 'zhat%d'" % (2 + n + i, i + 1)
        )
    lines.append(", \\\n".join(parts))
    lines += [
        "",
        "pause -1 'press return for the norm plot'",
        "set logscale y",
        "set ylabel 'norm'",
        "plot \\",
        "  csv using 1:(sqrt(%s)) with lines title '||z||', \\" % norm_z,
        "  csv using 1:(sqrt(%s)) with lines title '||e||'" % norm_e,
    ]
    with open(script_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
