"""Classical cyclotron/drift dynamics for the degenerate-field Hamiltonian.

The flow of H(x, xi) = (g^{jk} p_j p_k - V)/2 with kinetic momentum
p = xi - mu*A(x) superposes fast cyclotron rotation at angular speeds close
to mu*f1 and mu*f2 on a slow guiding-center drift.  This module integrates
the flow (adaptive embedded Runge-Kutta, plus a fixed-step symplectic mode),
extracts the near-invariants |Z_alpha|^2 built from the eigenframes of the
field, measures angular drift rates with the cyclotron oscillation removed by
window averaging, locates the dimensionless drift-null constant of the 2D
cusp Hamiltonian, and runs confinement ensembles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import bisect

from . import geometry
from .errors import (
    BlowUp,
    NearDegenerateFrames,
    NoRoot,
    RAtZero,
    StepUnderflow,
    TooShort,
)
from .geometry import FieldModel, Point4, ZoneConstants, ZoneLabel, classify_zone

__all__ = [
    "PhasePoint",
    "ReducedState",
    "Trajectory",
    "hamiltonian",
    "reduced_hamiltonian",
    "integrate_flow",
    "integrate_ensemble",
    "invariant_series",
    "drift_rate",
    "compute_k_star",
    "confinement_report",
    "sample_initial_conditions",
    "ConfinementReport",
]

_STATE_CAP = 1e3
_STEP_FLOOR = 1e-14

ZONE_CODES = {label: i for i, label in enumerate(ZoneLabel)}


@dataclass(frozen=True)
class PhasePoint:
    """Phase-space point: position q and canonical momentum xi."""

    q: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float).reshape(4))
        object.__setattr__(self, "xi", np.asarray(self.xi, dtype=float).reshape(4))
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.xi))):
            raise ValueError("phase point entries must be finite")

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.xi])

    @classmethod
    def from_vector(cls, y) -> "PhasePoint":
        y = np.asarray(y, dtype=float)
        return cls(y[:4], y[4:])


@dataclass(frozen=True)
class ReducedState:
    """State of the polar-reduced Hamiltonian; xi2 and xitheta are parameters."""

    x1: float
    r: float
    xi1: float
    xir: float
    xi2: float
    xitheta: float


def hamiltonian(s: PhasePoint, m: FieldModel) -> float:
    """H = (sum g^{jk} p_j p_k - V)/2 with p = xi - mu * A(x)."""
    p = s.xi - m.mu * np.asarray(m.potential(s.q), dtype=float)
    G = np.asarray(m.metric(s.q), dtype=float)
    return 0.5 * (p @ G @ p - m.scalar(s.q))


def reduced_hamiltonian(s: ReducedState, mu: float) -> float:
    """Polar-reduced Hamiltonian (xi1^2 + xir^2 + W)/2 with

        W = (xi2 - mu*(x1 - r^2/2))^2 + r^-2 (xitheta - mu*(x1 - r^2/2)*r^2)^2.

    Raises RAtZero when r <= 0.  This is the printed reduced form; the gauge
    whose full Hamiltonian matches it exactly is `geometry.circular_gauge_model`.
    """
    if s.r <= 0:
        raise RAtZero(f"reduced Hamiltonian needs r > 0, got r={s.r}")
    y = s.x1 - 0.5 * s.r * s.r
    W = (s.xi2 - mu * y) ** 2 + (s.xitheta - mu * y * s.r * s.r) ** 2 / (s.r * s.r)
    return 0.5 * (s.xi1 * s.xi1 + s.xir * s.xir + W)


# ---------------------------------------------------------------------------
# flow integration
# ---------------------------------------------------------------------------


def _martinet_potential_batch(Q: np.ndarray) -> np.ndarray:
    x1, x3, x4 = Q[:, 0], Q[:, 2], Q[:, 3]
    r2 = x3 * x3 + x4 * x4
    c = x1 - 0.25 * r2
    A = np.empty_like(Q)
    A[:, 0] = 0.0
    A[:, 1] = x1 - 0.5 * r2
    A[:, 2] = -c * x4
    A[:, 3] = c * x3
    return A


def _martinet_jac_batch(Q: np.ndarray) -> np.ndarray:
    """J[n, j, k] = d V_k / d x_j at each point."""
    n = Q.shape[0]
    x1, x3, x4 = Q[:, 0], Q[:, 2], Q[:, 3]
    c = x1 - 0.25 * (x3 * x3 + x4 * x4)
    J = np.zeros((n, 4, 4))
    J[:, 0, 1] = 1.0
    J[:, 2, 1] = -x3
    J[:, 3, 1] = -x4
    J[:, 0, 2] = -x4
    J[:, 2, 2] = 0.5 * x3 * x4
    J[:, 3, 2] = -c + 0.5 * x4 * x4
    J[:, 0, 3] = x3
    J[:, 2, 3] = c - 0.5 * x3 * x3
    J[:, 3, 3] = -0.5 * x3 * x4
    return J


def _gauge_half_potential_batch(Q: np.ndarray) -> np.ndarray:
    x1, x3, x4 = Q[:, 0], Q[:, 2], Q[:, 3]
    c = x1 - 0.5 * (x3 * x3 + x4 * x4)
    A = np.empty_like(Q)
    A[:, 0] = 0.0
    A[:, 1] = c
    A[:, 2] = -c * x4
    A[:, 3] = c * x3
    return A


def _gauge_half_jac_batch(Q: np.ndarray) -> np.ndarray:
    n = Q.shape[0]
    x1, x3, x4 = Q[:, 0], Q[:, 2], Q[:, 3]
    c = x1 - 0.5 * (x3 * x3 + x4 * x4)
    J = np.zeros((n, 4, 4))
    J[:, 0, 1] = 1.0
    J[:, 2, 1] = -x3
    J[:, 3, 1] = -x4
    J[:, 0, 2] = -x4
    J[:, 2, 2] = x3 * x4
    J[:, 3, 2] = -c + x4 * x4
    J[:, 0, 3] = x3
    J[:, 2, 3] = c - x3 * x3
    J[:, 3, 3] = -x3 * x4
    return J


def _batch_kernels(model: FieldModel):
    """(potential, jacobian, scalar_grad_or_None) batch evaluators."""
    name = getattr(model.potential, "__name__", "")
    if model.potential is geometry.vector_potential:
        pot, jac = _martinet_potential_batch, _martinet_jac_batch
    elif name == "_gauge_potential_half":
        pot, jac = _gauge_half_potential_batch, _gauge_half_jac_batch
    else:
        pot = lambda Q: np.array([model.potential(q) for q in Q])
        jac = lambda Q: np.array([model._potential_jac(q) for q in Q])
    if model.scalar_grad is not None and not np.any(model.scalar_grad(np.zeros(4))):
        sgrad = None  # constant scalar potential
    else:
        sgrad = lambda Q: np.array([model._scalar_grad(q) for q in Q])
    return pot, jac, sgrad


def _rhs_batch(Y: np.ndarray, model: FieldModel, pot, jac, sgrad) -> np.ndarray:
    """Hamiltonian vector field for a batch of states Y of shape (n, 8).

    Euclidean metric assumed by the batch path; the magnetic force is
    mu * J^T p and the scalar potential enters as +grad(V)/2.
    """
    Q, XI = Y[:, :4], Y[:, 4:]
    P = XI - model.mu * pot(Q)
    dXI = model.mu * np.einsum("nk,njk->nj", P, jac(Q))
    if sgrad is not None:
        dXI += 0.5 * sgrad(Q)
    return np.concatenate([P, dXI], axis=1)


def _rhs_single(t, y, model: FieldModel):
    q = y[:4]
    xi = y[4:]
    p = xi - model.mu * np.asarray(model.potential(q), dtype=float)
    G = np.asarray(model.metric(q), dtype=float)
    v = G @ p
    J = model._potential_jac(q)
    dxi = model.mu * (J @ v) + 0.5 * model._scalar_grad(q)
    if not model.euclidean:
        step = 1e-6
        corr = np.zeros(4)
        for j in range(4):
            e = np.zeros(4)
            e[j] = step
            dG = (np.asarray(model.metric(q + e)) - np.asarray(model.metric(q - e))) / (2 * step)
            corr[j] = 0.5 * p @ dG @ p
        dxi -= corr
    return np.concatenate([v, dxi])


def fast_period(model: FieldModel, at=None) -> float:
    """Fast cyclotron period 2*pi / (mu * f2) at a reference point."""
    pt = np.zeros(4) if at is None else np.asarray(at, dtype=float)
    _, f2 = geometry.intensities(pt[None, :], model)
    return 2.0 * math.pi / (model.mu * max(float(f2[0]), 1e-6))


@dataclass
class Trajectory:
    """Sampled phase-space path with conserved-quantity diagnostics."""

    times: np.ndarray
    positions: np.ndarray
    momenta: np.ndarray
    energy: np.ndarray
    tol: float
    mu: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def duration(self) -> float:
        return abs(float(self.times[-1] - self.times[0]))

    @property
    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy - self.energy[0])))

    def phase_points(self):
        return [PhasePoint(q, xi) for q, xi in zip(self.positions, self.momenta)]

    def final_state(self) -> PhasePoint:
        return PhasePoint(self.positions[-1], self.momenta[-1])

    def to_rows(self):
        """Rows (t, x1..x4, xi1..xi4, energy, |Z1|^2, |Z2|^2) for CSV export."""
        b1 = self.diagnostics.get("|Z1|^2", np.full_like(self.times, np.nan))
        b2 = self.diagnostics.get("|Z2|^2", np.full_like(self.times, np.nan))
        rows = []
        for i, t in enumerate(self.times):
            rows.append(
                (t, *self.positions[i], *self.momenta[i], self.energy[i], b1[i], b2[i])
            )
        return rows


def _energies(Y: np.ndarray, model: FieldModel, pot) -> np.ndarray:
    Q, XI = Y[:, :4], Y[:, 4:]
    P = XI - model.mu * pot(Q)
    V = np.array([model.scalar(q) for q in Q])
    if model.euclidean:
        kin = np.einsum("nj,nj->n", P, P)
    else:
        kin = np.array([p @ np.asarray(model.metric(q)) @ p for q, p in zip(Q, P)])
    return 0.5 * (kin - V)


def integrate_flow(
    s0: PhasePoint,
    m: FieldModel,
    T: float,
    tol: float,
    method: str = "adaptive",
    n_samples: Optional[int] = None,
    dt: Optional[float] = None,
) -> Trajectory:
    """Integrate the Hamiltonian flow from s0 for time T.

    `method="adaptive"` uses an embedded high-order Runge-Kutta pair with PI
    step-size control and a step ceiling resolving the fast cyclotron period;
    `method="symplectic"` uses fixed-step implicit-midpoint (dt required or
    derived from the fast period) for long-time invariant studies.
    Raises StepUnderflow / BlowUp per the trusted-domain contract.
    """
    if not 1e-12 <= tol <= 1e-4:
        raise ValueError(f"tol must lie in [1e-12, 1e-4], got {tol}")
    y0 = s0.as_vector()
    period = fast_period(m, s0.q)
    if n_samples is None:
        n_samples = int(min(60000, max(1000, 16 * abs(T) / period)))
    t_eval = np.linspace(0.0, T, n_samples + 1)
    pot, _, _ = _batch_kernels(m)

    if method == "symplectic":
        if dt is None:
            dt = period / 64.0
        times, Y = _implicit_midpoint(y0, m, T, dt, t_eval)
    elif method == "adaptive":
        max_step = max(period / 8.0, abs(T) * 1e-9)

        def blow_up(t, y, *_):
            return float(np.max(np.abs(y))) - _STATE_CAP

        blow_up.terminal = True
        sol = solve_ivp(
            _rhs_single,
            (0.0, T),
            y0,
            args=(m,),
            method="DOP853",
            rtol=tol,
            atol=tol,
            max_step=max_step,
            t_eval=t_eval,
            events=blow_up,
            dense_output=False,
        )
        if sol.status == -1:
            if "step size" in sol.message.lower():
                raise StepUnderflow(sol.message)
            raise RuntimeError(sol.message)
        if sol.status == 1:
            raise BlowUp(f"state norm exceeded {_STATE_CAP:g} at t={sol.t_events[0][0]:.4g}")
        times, Y = sol.t, sol.y.T
    else:
        raise ValueError(f"unknown method {method!r}")

    energy = _energies(Y, m, pot)
    return Trajectory(
        times=times,
        positions=Y[:, :4].copy(),
        momenta=Y[:, 4:].copy(),
        energy=energy,
        tol=tol,
        mu=m.mu,
    )


def _implicit_midpoint(y0, model, T, dt, t_eval):
    pot, jac, sgrad = _batch_kernels(model)
    n_steps = max(1, int(math.ceil(abs(T) / dt)))
    dt = T / n_steps
    out = np.empty((len(t_eval), 8))
    out[0] = y0
    y = y0.copy()
    next_idx = 1
    t = 0.0
    for k in range(n_steps):
        z = y.copy()
        for _ in range(50):
            mid = 0.5 * (y + z)
            z_new = y + dt * _rhs_batch(mid[None, :], model, pot, jac, sgrad)[0]
            if float(np.max(np.abs(z_new - z))) < 1e-14 * max(1.0, float(np.max(np.abs(z)))):
                z = z_new
                break
            z = z_new
        y = z
        t = (k + 1) * dt
        if float(np.max(np.abs(y))) > _STATE_CAP:
            raise BlowUp(f"state norm exceeded {_STATE_CAP:g} at t={t:.4g}")
        while next_idx < len(t_eval) and (t_eval[next_idx] - t) * np.sign(dt) <= 1e-12:
            out[next_idx] = y
            next_idx += 1
    while next_idx < len(t_eval):
        out[next_idx] = y
        next_idx += 1
    return t_eval, out


def integrate_ensemble(
    states0,
    m: FieldModel,
    T: float,
    dt: Optional[float] = None,
    store_every: Optional[int] = None,
):
    """Fixed-step RK4 integration of many trajectories at once.

    `states0` is a list of PhasePoint or an array (n, 8).  Returns
    (times (k+1,), states (k+1, n, 8)).  Intended for ensemble statistics;
    per-trajectory adaptive control is `integrate_flow`.
    """
    if isinstance(states0, np.ndarray):
        Y = states0.astype(float).copy()
    else:
        Y = np.array([s.as_vector() for s in states0])
    period = fast_period(m, Y[0, :4])
    if dt is None:
        dt = period / 64.0
    n_steps = max(1, int(math.ceil(abs(T) / dt)))
    dt = T / n_steps
    if store_every is None:
        store_every = max(1, n_steps // 4096)
    pot, jac, sgrad = _batch_kernels(m)
    f = lambda Y: _rhs_batch(Y, m, pot, jac, sgrad)
    stored = [Y.copy()]
    times = [0.0]
    for k in range(n_steps):
        k1 = f(Y)
        k2 = f(Y + 0.5 * dt * k1)
        k3 = f(Y + 0.5 * dt * k2)
        k4 = f(Y + dt * k3)
        Y = Y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if (k + 1) % store_every == 0 or k == n_steps - 1:
            if float(np.max(np.abs(Y))) > _STATE_CAP:
                raise BlowUp(f"ensemble state norm exceeded {_STATE_CAP:g}")
            stored.append(Y.copy())
            times.append((k + 1) * dt)
    return np.array(times), np.array(stored)


# ---------------------------------------------------------------------------
# invariant diagnostics
# ---------------------------------------------------------------------------


def _frames_batch(Q: np.ndarray, model: FieldModel, frame_floor: float = 1e-12):
    """Eigen-intensities and normalized +i*f eigenframes at each point.

    Returns (f1, f2, k1, k2) with k* of shape (n, 4) complex.  Raises
    NearDegenerateFrames if min(f2 - f1) < frame_floor.
    """
    if model.euclidean and model.field_matrix is geometry.two_form:
        x1, x3, x4 = Q[:, 0], Q[:, 2], Q[:, 3]
        w = 2.0 * (x1 - 0.5 * (x3 * x3 + x4 * x4))
        F = np.zeros((Q.shape[0], 4, 4))
        F[:, 0, 1], F[:, 0, 2], F[:, 0, 3] = 1.0, -x4, x3
        F[:, 1, 2], F[:, 1, 3] = x3, x4
        F[:, 2, 3] = w
        F -= np.transpose(F, (0, 2, 1))
        M = F
    else:
        M = np.array([np.asarray(model.metric(q)) @ model.field(q) for q in Q])
    w, V = np.linalg.eig(M)
    order = np.argsort(w.imag, axis=1)
    idx1 = order[:, 2]
    idx2 = order[:, 3]
    rows = np.arange(Q.shape[0])
    f1 = np.maximum(w.imag[rows, idx1], 0.0)
    f2 = np.maximum(w.imag[rows, idx2], 0.0)
    swap = f2 < f1
    if np.any(swap):
        f1[swap], f2[swap] = f2[swap], f1[swap]
        idx1[swap], idx2[swap] = idx2[swap], idx1[swap]
    gap = float(np.min(f2 - f1))
    if gap < frame_floor:
        raise NearDegenerateFrames(float(f1[np.argmin(f2 - f1)]), float(f2[np.argmin(f2 - f1)]))
    if model.euclidean:
        k1 = V[rows, :, idx1]
        k2 = V[rows, :, idx2]
        k1 *= np.sqrt(2.0 / np.sum(np.abs(k1) ** 2, axis=1))[:, None]
        k2 *= np.sqrt(2.0 / np.sum(np.abs(k2) ** 2, axis=1))[:, None]
    else:
        k1 = np.empty((Q.shape[0], 4), dtype=complex)
        k2 = np.empty((Q.shape[0], 4), dtype=complex)
        for i, q in enumerate(Q):
            g_low = np.linalg.inv(np.asarray(model.metric(q), dtype=float))
            for store, idx in ((k1, idx1[i]), (k2, idx2[i])):
                v = V[i, :, idx]
                store[i] = v * math.sqrt(2.0 / float(np.real(np.conj(v) @ g_low @ v)))
    return f1, f2, k1, k2


def invariant_series(traj: Trajectory, m: FieldModel,
                     constants: ZoneConstants = ZoneConstants()) -> dict:
    """Per-sample diagnostics |Z1|^2, |Z2|^2, f2^-1 |Z2|^2, x1^2, gamma, r, zone.

    Z_alpha contracts the frame for +i*f_alpha with the kinetic momentum.
    The result is also stored on traj.diagnostics.
    """
    Q = traj.positions
    pot, _, _ = _batch_kernels(m)
    P = traj.momenta - m.mu * pot(Q)
    f1, f2, k1, k2 = _frames_batch(Q, m)
    Z1 = np.einsum("nj,nj->n", k1, P.astype(complex))
    Z2 = np.einsum("nj,nj->n", k2, P.astype(complex))
    b1 = np.abs(Z1) ** 2
    b2 = np.abs(Z2) ** 2
    gamma = np.abs(Q[:, 0])
    r = np.hypot(Q[:, 2], Q[:, 3])
    rho = np.abs(Z1)
    zone = np.array(
        [
            ZONE_CODES[classify_zone(q, float(s), m, constants)]
            for q, s in zip(Q, rho)
        ],
        dtype=float,
    )
    diag = {
        "|Z1|^2": b1,
        "|Z2|^2": b2,
        "f2inv|Z2|^2": b2 / f2,
        "x1^2": Q[:, 0] ** 2,
        "gamma": gamma,
        "r": r,
        "f1": f1,
        "f2": f2,
        "zone": zone,
    }
    traj.diagnostics.update(diag)
    return diag


def window_means(times: np.ndarray, values: np.ndarray, window: float):
    """Means of `values` over consecutive windows of the given duration."""
    t0 = times[0]
    n_w = int(math.floor((times[-1] - t0) / window))
    centers = np.empty(n_w)
    means = np.empty(n_w)
    for i in range(n_w):
        sel = (times >= t0 + i * window) & (times < t0 + (i + 1) * window)
        centers[i] = t0 + (i + 0.5) * window
        means[i] = float(np.mean(values[sel]))
    return centers, means


def sliding_window_range(times: np.ndarray, values: np.ndarray, window: float,
                         stride: Optional[float] = None) -> float:
    """Range (max - min) of sliding-window means of an equally sampled series.

    The windowed mean removes the fast cyclotron oscillation; its range over
    the trajectory measures the residual drift of a near-invariant.  Raises
    TooShort when fewer than two windows fit.
    """
    dt = float(times[1] - times[0])
    n_in_w = max(1, int(round(window / dt)))
    if n_in_w >= len(values):
        raise TooShort("window does not fit inside the sampled series")
    step = max(1, int(round((stride if stride is not None else window / 10.0) / dt)))
    csum = np.concatenate([[0.0], np.cumsum(values)])
    starts = np.arange(0, len(values) - n_in_w, step)
    means = (csum[starts + n_in_w] - csum[starts]) / n_in_w
    return float(means.max() - means.min())


def adiabatic_drift(mu: float, gamma: float = 0.1, r: float = 0.4, T: float = 1.0,
                    n_traj: int = 48, seed: int = 11, periods: int = 10,
                    dt_frac: int = 128, scalar: float = 1.0) -> float:
    """Ensemble-mean windowed drift of |Z2|^2 for the standard field.

    Integrates an ensemble started on |x1| = gamma at radius r on the zero
    level set and returns the mean over trajectories of the sliding-window
    range of |Z2|^2 (window of `periods` fast periods, stride one period).
    Scales like 1/mu when the near-invariant picture holds.
    """
    model = geometry.martinet_model(mu, min(0.9 / mu, 0.01), scalar=scalar)
    states = sample_initial_conditions("i", gamma, r, mu, n_traj, seed=seed,
                                       scalar=scalar)
    period = fast_period(model, states[0].q)
    times, Y = integrate_ensemble(states, model, T, dt=period / dt_frac)
    window = periods * period
    out = []
    for j in range(len(states)):
        traj = Trajectory(times=times, positions=Y[:, j, :4], momenta=Y[:, j, 4:],
                          energy=np.zeros_like(times), tol=0.0, mu=mu)
        diag = invariant_series(traj, model)
        out.append(sliding_window_range(times, diag["|Z2|^2"], window,
                                        stride=period))
    return float(np.mean(out))


def drift_rate(traj: Trajectory, min_periods: int = 10) -> float:
    """Least-squares angular drift rate of the guiding center.

    theta = atan2(x4, x3) is unwrapped by continuity and averaged over windows
    of `min_periods` fast cyclotron periods before the slope fit, removing the
    cyclotron oscillation.  Raises TooShort when the trajectory spans fewer
    than 2*min_periods fast periods.
    """
    theta = np.unwrap(np.arctan2(traj.positions[:, 3], traj.positions[:, 2]))
    steps = np.abs(np.diff(theta))
    if steps.size and float(np.max(steps)) > 0.5 * math.pi:
        raise ValueError("theta sampling too sparse to unwrap reliably")
    f2 = traj.diagnostics.get("f2")
    f2_ref = float(np.mean(f2)) if f2 is not None else 1.0
    period = 2.0 * math.pi / (traj.mu * f2_ref)
    if traj.duration < 2 * min_periods * period:
        raise TooShort(
            f"need at least {2 * min_periods} fast periods, trajectory spans "
            f"{traj.duration / period:.1f}"
        )
    centers, means = window_means(traj.times, theta, min_periods * period)
    slope = np.polyfit(centers, means, 1)[0]
    return float(slope)


# ---------------------------------------------------------------------------
# drift-null constant of the 2D cusp Hamiltonian
# ---------------------------------------------------------------------------


def _cusp_period_averages(xi2: float, rho: float):
    """(T, D): period and period-integral of the drift 2*(xi2 - x^2/2).

    Energy surface xi1^2 + (xi2 - x^2/2)^2 = rho^2.  For xi2 < rho the orbit
    librates through x = 0; for xi2 > rho it circulates in one of two wells.
    Substitutions x = a + b*sin(theta) remove the turning-point square-root
    singularities because dU/dx does not vanish there.
    """
    if xi2 < rho:
        x_out = math.sqrt(2.0 * (xi2 + rho))
        a, b = 0.0, x_out
        lo, hi = 0.0, 0.5 * math.pi
        sym = 2.0
    else:
        x_in = math.sqrt(2.0 * (xi2 - rho))
        x_out = math.sqrt(2.0 * (xi2 + rho))
        a, b = 0.5 * (x_in + x_out), 0.5 * (x_out - x_in)
        lo, hi = -0.5 * math.pi, 0.5 * math.pi
        sym = 1.0

    def weight(th):
        x = a + b * np.sin(th)
        Qv = xi2 - 0.5 * x * x
        s = rho * rho - Qv * Qv
        return b * np.cos(th) / np.sqrt(np.maximum(s, 1e-300)), Qv

    def f_T(th):
        w, _ = weight(th)
        return w

    def f_D(th):
        w, Qv = weight(th)
        return 2.0 * Qv * w

    T, _ = quad(f_T, lo, hi, limit=200)
    D, _ = quad(f_D, lo, hi, limit=200)
    return sym * T, sym * D


def cusp_average_drift(xi2: float, rho: float) -> float:
    """Period average of d(a)/d(xi2) = 2*(xi2 - x^2/2) on the energy shell rho^2."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    T, D = _cusp_period_averages(xi2, rho)
    return D / T


def compute_k_star(rho: float, bracket=(0.0, 1.2), xtol: float = 1e-10,
                   scan_points: int = 25) -> float:
    """Drift-null constant of the cusp Hamiltonian, normalized by rho.

    Scans xi2/rho over `bracket`, locates a sign change of the period-averaged
    drift, and refines it by bisection.  Raises NoRoot when the averaged drift
    does not change sign in the bracket.  The result is invariant under
    rho-scaling by homogeneity of the cusp Hamiltonian.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    lo, hi = bracket
    # avoid the separatrix xi2 = rho where the orbit topology changes
    grid = [u for u in np.linspace(lo, hi, scan_points) if abs(u - 1.0) > 1e-3]
    vals = [cusp_average_drift(u * rho, rho) for u in grid]
    for (u0, v0), (u1, v1) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        if v0 == 0.0:
            return u0
        if v0 * v1 < 0.0:
            root = bisect(lambda u: cusp_average_drift(u * rho, rho), u0, u1, xtol=xtol)
            return float(root)
    raise NoRoot(f"averaged drift has no sign change for xi2/rho in {bracket}")


# ---------------------------------------------------------------------------
# confinement ensembles
# ---------------------------------------------------------------------------

SCENARIOS = ("i", "ii", "iii", "iv", "v")


def scenario_time(scenario: str, gamma: float, r: float, mu: float, eps: float = 0.25) -> float:
    """Confinement horizon per scenario: (i) eps*mu*gamma*r,
    (ii) eps*mu*gamma^2/r, (iii)-(v) eps."""
    if scenario == "i":
        return eps * mu * gamma * r
    if scenario == "ii":
        return eps * mu * gamma * gamma / r
    if scenario in ("iii", "iv", "v"):
        return eps
    raise ValueError(f"unknown scenario {scenario!r}")


def sample_initial_conditions(scenario: str, gamma: float, r: float, mu: float,
                              n: int, seed: int = 0, scalar: float = 1.0):
    """Phase points starting in the scenario's start region on the 0 level set.

    Positions sit at |x1| = gamma (or below, for the inner scenarios) and polar
    radius r; the kinetic momentum has |p| = sqrt(V) so H = 0.
    """
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(n):
        th = rng.uniform(0, 2 * math.pi)
        if scenario in ("iv", "v"):
            x1 = rng.uniform(-gamma, gamma)
        else:
            x1 = gamma * rng.choice([-1.0, 1.0])
        q = np.array([x1, 0.0, r * math.cos(th), r * math.sin(th)])
        p = rng.normal(size=4)
        p *= math.sqrt(scalar) / np.linalg.norm(p)
        xi = p + mu * geometry.vector_potential(q)
        pts.append(PhasePoint(q, xi))
    return pts


@dataclass
class ConfinementReport:
    scenario: str
    T: float
    n: int
    pass_fraction: float
    factor: float
    bounds: dict
    passed: list


def confinement_report(
    ensemble,
    m: FieldModel,
    gamma: float,
    r: float,
    mu: float,
    scenario: str,
    factor: float = 4.0,
    eps: float = 0.25,
    T: Optional[float] = None,
    dt: Optional[float] = None,
) -> ConfinementReport:
    """Fraction of trajectories respecting the scenario's confinement bounds.

    Scenario bounds for all sampled t <= T:
      i, ii : |x1| and r within `factor` of their initial magnitudes
      iii   : |x1| within factor; r <= factor * max(r, 1/(mu*gamma))
      iv    : r within factor; |x1| <= factor * gamma
      v     : r <= factor * mu^(-1/3); |x1| <= factor * gamma
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}")
    if T is None:
        T = scenario_time(scenario, gamma, r, mu, eps)
    if T == 0 or not ensemble:
        return ConfinementReport(scenario, T, len(ensemble), 1.0, factor, {}, [True] * len(ensemble))
    times, states = integrate_ensemble(ensemble, m, T, dt=dt)
    X1 = np.abs(states[:, :, 0])
    R = np.hypot(states[:, :, 2], states[:, :, 3])
    passed = []
    if scenario in ("i", "ii"):
        bounds = {"x1": (gamma / factor, gamma * factor), "r": (r / factor, r * factor)}
        ok = (
            (X1 >= gamma / factor) & (X1 <= gamma * factor)
            & (R >= r / factor) & (R <= r * factor)
        )
    elif scenario == "iii":
        r_cap = factor * max(r, 1.0 / (mu * gamma))
        bounds = {"x1": (gamma / factor, gamma * factor), "r": (0.0, r_cap)}
        ok = (X1 >= gamma / factor) & (X1 <= gamma * factor) & (R <= r_cap)
    elif scenario == "iv":
        bounds = {"x1": (0.0, factor * gamma), "r": (r / factor, r * factor)}
        ok = (X1 <= factor * gamma) & (R >= r / factor) & (R <= r * factor)
    else:  # v
        r_cap = factor * mu ** (-1.0 / 3.0)
        bounds = {"x1": (0.0, factor * gamma), "r": (0.0, r_cap)}
        ok = (X1 <= factor * gamma) & (R <= r_cap)
    per_traj = np.all(ok, axis=0)
    passed = [bool(b) for b in per_traj]
    return ConfinementReport(
        scenario=scenario,
        T=T,
        n=len(passed),
        pass_fraction=float(np.mean(per_traj)) if passed else 1.0,
        factor=factor,
        bounds=bounds,
        passed=passed,
    )
