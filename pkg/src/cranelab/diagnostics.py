"""Scalar functionals of the crane system and decay-rate estimation.

The functions here evaluate the continuum functionals (field energy,
conserved quantity, equilibrium constant) by plain trapezoid quadrature
on a state's own grids.  The evolution layer tracks slightly different
discrete versions, the ones the assembled matrices conserve exactly; the
two families agree up to one delay cell's worth of boundary terms, and
each has its role: trapezoid values are what a user compares against hand
calculations, matched values are what stay constant to rounding over a
hundred thousand steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretize import CraneState, DiscreteOperator
from .evolve import Trajectory
from .model import CraneModel

__all__ = [
    "DiagnosticsError",
    "EnergyReport",
    "DecayFit",
    "energy_e0",
    "rho",
    "energy_e1",
    "equilibrium_omega",
    "energy_report",
    "decay_inequality_residual",
    "fit_decay",
]


class DiagnosticsError(RuntimeError):
    pass


def _trapezoid_weights(npts: int, spacing: float) -> np.ndarray:
    w = np.full(npts, spacing)
    w[0] = w[-1] = spacing / 2.0
    return w


def energy_e0(state: CraneState, model: CraneModel) -> float:
    """Field energy: strain, kinetic, boundary masses, and delay line.

    0.5*[int(z^2 + a*y_x^2) + m*xi^2 + M*eta^2 + K*tau*int(u^2)], with
    trapezoid quadrature on the nodal fields and midpoint sampling of the
    stiffness coefficient on the strain term.
    """
    grid = state.grid
    gains, phys = model.gains, model.phys
    a_mid = np.asarray(model.coeff(grid.x_mid), dtype=float)
    dy = np.diff(state.y) / grid.h
    strain = float(np.sum(a_mid * dy * dy) * grid.h)
    wz = _trapezoid_weights(grid.N + 1, grid.h)
    wu = _trapezoid_weights(grid.Nd + 1, grid.hd)
    kinetic = float(wz @ (state.z * state.z))
    delay = gains.K * gains.tau * float(wu @ (state.u * state.u))
    point = phys.m * state.xi ** 2 + phys.M * state.eta ** 2
    return 0.5 * (strain + kinetic + delay + point)


def rho(state: CraneState, model: CraneModel) -> float:
    """The conserved functional, evaluated by trapezoid quadrature.

    int(z) + m*xi + M*eta + tau*alpha*int(u) + (beta-alpha)*y(0).
    """
    grid = state.grid
    gains, phys = model.gains, model.phys
    wz = _trapezoid_weights(grid.N + 1, grid.h)
    wu = _trapezoid_weights(grid.Nd + 1, grid.hd)
    return float(wz @ state.z + phys.m * state.xi + phys.M * state.eta
                 + gains.tau * gains.alpha * (wu @ state.u)
                 + gains.mu * state.y[0])


def energy_e1(state: CraneState, model: CraneModel) -> float:
    """Half the squared conserved functional."""
    r = rho(state, model)
    return 0.5 * r * r


def equilibrium_omega(initial: CraneState, model: CraneModel) -> float:
    """Predicted terminal displacement constant, from the initial state alone.

    The velocity field of a sampled initial state holds the initial
    velocity profile and the delay line holds the control history, so the
    conserved functional divided by beta-alpha is exactly the equilibrium
    formula [int(y1) + alpha*tau*int(history) + (beta-alpha)*y0(0)
    + m*xi0 + M*eta0] / (beta-alpha).
    """
    return rho(initial, model) / model.gains.mu


@dataclass(frozen=True)
class EnergyReport:
    """Energy bookkeeping at the end of a run plus the decay-bound margin.

    ``decay_residual`` is the worst (smallest) value over the run of
    [dissipation bound minus observed energy slope]; nonnegative up to
    rounding means the decay inequality held at every step.
    """

    E0: float
    E1: float
    Etot: float
    rho: float
    decay_residual: float

    def __post_init__(self):
        if abs(self.Etot - (self.E0 + self.E1)) > 1e-12 * (1.0 + abs(self.Etot)):
            raise ValueError("Etot must equal E0 + E1")


def decay_inequality_residual(traj: Trajectory, model: CraneModel) -> np.ndarray:
    """Per-step margin violation of the energy dissipation inequality.

    Returns, for each step, observed dE/dt minus the bound
    0.5*[(-2*beta+|alpha|+K)*xi^2 + (|alpha|-K)*u(1)^2] evaluated at the
    step midpoint (the average of the two endpoint traces, which is the
    exact point the implicit-midpoint energy identity refers to).  Values
    are expected nonpositive up to rounding.
    """
    gains = model.gains
    abs_a = abs(gains.alpha)
    dt = np.diff(traj.times)
    if dt.size == 0:
        return np.zeros(0)
    de = np.diff(traj.Etot) / dt
    xi_mid = 0.5 * (traj.xi[:-1] + traj.xi[1:])
    u1_mid = 0.5 * (traj.u_at_1[:-1] + traj.u_at_1[1:])
    bound = 0.5 * ((-2.0 * gains.beta + abs_a + gains.K) * xi_mid ** 2
                   + (abs_a - gains.K) * u1_mid ** 2)
    return de - bound


def energy_report(traj: Trajectory, model: CraneModel) -> EnergyReport:
    """Terminal energies and the worst decay-inequality margin of a run."""
    residual = decay_inequality_residual(traj, model)
    worst = float(-np.max(residual)) if residual.size else 0.0
    return EnergyReport(E0=float(traj.E0[-1]), E1=float(traj.E1[-1]),
                        Etot=float(traj.Etot[-1]), rho=float(traj.rho[-1]),
                        decay_residual=worst)


@dataclass(frozen=True)
class DecayFit:
    """Power-law fit of the deviation norm over a late-time window.

    slope: least-squares slope of log(dev) against log(t).
    C_hat: sup over the window of sqrt(t)*dev(t), normalized by the graph
    norm of the initial deviation.
    exponential_test: local exponential rates (slope of log(dev) vs t) on
    the early and late halves of the window; a genuine exponential shows
    equal rates, a power law shows the late rate closer to zero.
    """

    window: tuple[float, float]
    slope: float
    C_hat: float
    exponential_test: tuple[float, float]
    n_samples: int

    @property
    def rate_is_decreasing(self) -> bool:
        early, late = self.exponential_test
        return abs(late) < abs(early)


_NOISE_FLOOR = 1e2 * np.finfo(float).eps


def fit_decay(traj: Trajectory, op: DiscreteOperator, omega: float,
              t_lo: float | None = None, t_hi: float | None = None,
              n_fit: int = 64) -> DecayFit:
    """Fit the decay of the deviation from the constant profile at omega.

    The window defaults to [T/4, T].  Samples are taken uniformly in
    log(t) by interpolation of the recorded series, so late times are not
    drowned out by the dense early records.  The fit is refused when the
    deviation inside the window sits at the rounding noise floor.
    """
    times = traj.times
    if times.size < 2:
        raise DiagnosticsError("trajectory too short for a decay fit")
    T = float(times[-1])
    if t_hi is None:
        t_hi = T
    if t_lo is None:
        t_lo = t_hi / 4.0
    if not 0.0 < t_lo < t_hi <= T:
        raise DiagnosticsError(f"bad fit window [{t_lo}, {t_hi}] for T={T}")

    if abs(omega - traj.omega) <= 1e-12 * (1.0 + abs(omega)):
        sample_t = times
        sample_dev = traj.dev_norm
    else:
        # The recorded deviation series used the trajectory's own omega;
        # recompute against the requested one from stored snapshots.
        one = op.grid.one_y()
        sample_t = np.asarray(traj.snapshot_times)
        sample_dev = np.array([op.norm(s.to_vector() - omega * one)
                               for s in traj.snapshots])

    in_window = (sample_t >= t_lo) & (sample_t <= t_hi)
    if int(in_window.sum()) < 20:
        raise DiagnosticsError("fewer than 20 recorded samples in the fit window")

    psi0 = traj.snapshots[0].to_vector() - omega * op.grid.one_y()
    graph0 = op.norm(psi0) + op.norm(op.A @ psi0)

    floor = _NOISE_FLOOR * max(1.0, float(sample_dev[0]))
    if float(np.min(sample_dev[in_window])) <= floor:
        raise DiagnosticsError(
            "fit refused: deviation inside the window is at the rounding "
            "noise floor, a slope there would measure arithmetic, not decay")

    ts_log = np.geomspace(t_lo, t_hi, n_fit)
    dev_log = np.interp(ts_log, sample_t, sample_dev)
    slope = float(np.polyfit(np.log(ts_log), np.log(dev_log), 1)[0])

    c_hat = float(np.max(np.sqrt(ts_log) * dev_log)) / graph0

    ts_lin = np.linspace(t_lo, t_hi, n_fit)
    dev_lin = np.interp(ts_lin, sample_t, sample_dev)
    half = n_fit // 2
    rate_early = float(np.polyfit(ts_lin[:half], np.log(dev_lin[:half]), 1)[0])
    rate_late = float(np.polyfit(ts_lin[half:], np.log(dev_lin[half:]), 1)[0])

    return DecayFit(window=(float(t_lo), float(t_hi)), slope=slope,
                    C_hat=c_hat, exponential_test=(rate_early, rate_late),
                    n_samples=int(in_window.sum()))
