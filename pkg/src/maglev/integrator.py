"""Fixed-step RK4 integration of the coupled and legacy models.

The step is tied to the forcing period (``dt = 2*pi / (Omega * N)``) so that
stroboscopic samples fall exactly on grid points. The inner loops are
compiled with numba; ``rk4_step`` is the plain-Python reference used by the
tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import DivergenceError, ParameterError
from .model import DimlessParams, PhysicalParams, State6, rhs_new, solve_static_offset

__all__ = [
    "IntegrationConfig",
    "Trajectory",
    "DIVERGENCE_LIMIT",
    "rk4_step",
    "integrate",
    "integrate_legacy",
    "energy_audit",
]

DIVERGENCE_LIMIT = 1e6

STATE_NAMES = ("Y", "dY", "Q1", "dQ1", "Q2", "dQ2")
LEGACY_NAMES = ("x", "dx", "q1", "dq1")


@dataclass(frozen=True)
class IntegrationConfig:
    steps_per_period: int = 200
    transient_periods: int = 400
    record_periods: int = 100
    initial_state: tuple = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    tau0: float = 0.0

    def __post_init__(self):
        if self.steps_per_period < 32:
            raise ParameterError("steps_per_period must be >= 32")
        if self.transient_periods < 0:
            raise ParameterError("transient_periods must be >= 0")
        if self.record_periods < 1:
            raise ParameterError("record_periods must be >= 1")
        state = tuple(float(v) for v in self.initial_state)
        if not all(math.isfinite(v) for v in state):
            raise ParameterError("initial_state must be finite")
        object.__setattr__(self, "initial_state", state)


@dataclass(frozen=True)
class Trajectory:
    """Equally spaced samples of a recorded window.

    ``states[k]`` is the state at ``tau[k] = tau_start + k*dt``.
    """

    tau: np.ndarray
    states: np.ndarray
    dt: float
    steps_per_period: int
    omega: float
    names: tuple = field(default=STATE_NAMES)

    def __post_init__(self):
        self.tau.setflags(write=False)
        self.states.setflags(write=False)

    def __len__(self):
        return len(self.tau)

    def __getitem__(self, k):
        if self.names != STATE_NAMES:
            return (self.tau[k], *self.states[k])
        return State6(float(self.tau[k]), *map(float, self.states[k]))

    def column(self, name) -> np.ndarray:
        try:
            return self.states[:, self.names.index(name)]
        except ValueError:
            raise KeyError(f"unknown variable {name!r}; have {self.names}") from None

    @property
    def final_state(self) -> tuple:
        return tuple(float(v) for v in self.states[-1])

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega


def rk4_step(tau, y, d: DimlessParams, dt):
    """One classical RK4 step of the coupled model (reference implementation)."""
    if not dt > 0:
        raise ParameterError("dt must be > 0")
    y = np.asarray(y, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = rhs_new(tau, y, d)
        k2 = rhs_new(tau + dt / 2, y + dt / 2 * k1, d)
        k3 = rhs_new(tau + dt / 2, y + dt / 2 * k2, d)
        k4 = rhs_new(tau + dt, y + dt * k3, d)
        out = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise DivergenceError(tau + dt)
    return out


@njit(cache=True)
def _rhs6(tau, y, p, out):
    W2, W3, W4 = p[0], p[1], p[2]
    a1, a2, a3, a4, a5 = p[3], p[4], p[5], p[6], p[7]
    b1, b2, b3, E, Om = p[8], p[9], p[10], p[11], p[12]
    Y = y[0]
    dY = y[1]
    dQ1 = y[3]
    dQ2 = y[5]
    out[0] = dY
    out[1] = -Y + W2 * Y * Y - W3 * Y * Y * Y - a1 * dQ1 - a2 * dQ2 - a3 * dY
    out[2] = dQ1
    out[3] = E * math.cos(Om * tau) + a4 * dY - W4 * y[2] - a5 * dQ1
    out[4] = dQ2
    out[5] = b2 * dY - b1 * dQ2 - b3 * y[4]


@njit(cache=True)
def _rhs4(t, y, p, out):
    # p = m, g, k1, k3, S1, Cme, Ls, Rs, Cs, e, Omega_hat
    m, g, k1, k3, S1, Cme = p[0], p[1], p[2], p[3], p[4], p[5]
    Ls, Rs, Cs, e, Om = p[6], p[7], p[8], p[9], p[10]
    x = y[0]
    out[0] = y[1]
    out[1] = -(m * g + k1 * x + k3 * x * x * x + S1 * y[3] + Cme * y[1]) / m
    out[2] = y[3]
    out[3] = (e * math.cos(Om * t) + S1 * y[1] - y[2] / Cs - Rs * y[3]) / Ls


@njit(cache=True)
def _run(model, y0, tau0, dt, n_skip, n_rec, p, limit, out):
    """Integrate n_skip + n_rec steps, storing the last n_rec + 1 states.

    Returns the step index at which the state left [-limit, limit], or -1.
    """
    n = y0.shape[0]
    y = y0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    total = n_skip + n_rec
    if n_skip == 0:
        out[0, :] = y
    for step in range(total):
        tau = tau0 + step * dt
        if model == 0:
            _rhs6(tau, y, p, k1)
        else:
            _rhs4(tau, y, p, k1)
        for i in range(n):
            tmp[i] = y[i] + 0.5 * dt * k1[i]
        if model == 0:
            _rhs6(tau + 0.5 * dt, tmp, p, k2)
        else:
            _rhs4(tau + 0.5 * dt, tmp, p, k2)
        for i in range(n):
            tmp[i] = y[i] + 0.5 * dt * k2[i]
        if model == 0:
            _rhs6(tau + 0.5 * dt, tmp, p, k3)
        else:
            _rhs4(tau + 0.5 * dt, tmp, p, k3)
        for i in range(n):
            tmp[i] = y[i] + dt * k3[i]
        if model == 0:
            _rhs6(tau + dt, tmp, p, k4)
        else:
            _rhs4(tau + dt, tmp, p, k4)
        bad = False
        for i in range(n):
            y[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not (abs(y[i]) <= limit):
                bad = True
        if bad:
            return step + 1
        row = step + 1 - n_skip
        if row >= 0:
            out[row, :] = y
    return -1


def _drive(model, y0, tau0, dt, steps_per_period, cfg, p, omega, names):
    n_skip = cfg.transient_periods * steps_per_period
    n_rec = cfg.record_periods * steps_per_period
    out = np.empty((n_rec + 1, len(y0)))
    fail = _run(model, np.asarray(y0, dtype=np.float64), float(tau0), dt,
                n_skip, n_rec, p, DIVERGENCE_LIMIT, out)
    if fail >= 0:
        raise DivergenceError(tau0 + fail * dt)
    tau = tau0 + (n_skip + np.arange(n_rec + 1)) * dt
    return Trajectory(tau=tau, states=out, dt=dt, steps_per_period=steps_per_period,
                      omega=omega, names=names)


def integrate(d: DimlessParams, cfg: IntegrationConfig = IntegrationConfig()) -> Trajectory:
    """Integrate the coupled model and return the post-transient window.

    The window holds ``record_periods * steps_per_period + 1`` samples.
    """
    if not d.Omega > 0:
        raise ParameterError("Omega must be > 0 to define the step size")
    if len(cfg.initial_state) != 6:
        raise ParameterError("initial_state must have 6 components")
    dt = 2 * math.pi / (d.Omega * cfg.steps_per_period)
    return _drive(0, cfg.initial_state, cfg.tau0, dt, cfg.steps_per_period, cfg,
                  d.as_array(), d.Omega, STATE_NAMES)


def integrate_legacy(p: PhysicalParams, cfg: IntegrationConfig = None,
                     initial_state=None) -> Trajectory:
    """Integrate the dimensional legacy model; time is in seconds.

    The default initial state is the magnet at rest at its static offset.
    """
    cfg = cfg or IntegrationConfig()
    if initial_state is None:
        initial_state = (-solve_static_offset(p.m, p.g, p.k1, p.k3), 0.0, 0.0, 0.0)
    if len(initial_state) != 4:
        raise ParameterError("legacy initial_state must have 4 components")
    if not p.Omega_hat > 0:
        raise ParameterError("Omega_hat must be > 0 to define the step size")
    dt = 2 * math.pi / (p.Omega_hat * cfg.steps_per_period)
    vec = np.array([p.m, p.g, p.k1, p.k3, p.S1, p.Cme, p.Ls, p.Rs, p.Cs, p.e, p.Omega_hat])
    return _drive(1, initial_state, cfg.tau0, dt, cfg.steps_per_period, cfg, vec,
                  p.Omega_hat, LEGACY_NAMES)


def _coupling_weight(forward, backward, label):
    # Weight that turns a circuit's own energy into the shared balance.
    if backward != 0:
        return forward / backward
    if forward == 0:
        return 1.0
    raise ParameterError(f"energy audit undefined: {label} coupling is one-way")


def energy_audit(tr: Trajectory, d: DimlessParams, stencil: int = 4) -> float:
    """Largest relative mismatch of the discrete energy balance.

    The storage function is the magnet's kinetic plus potential energy plus
    the weighted circuit energies; along exact solutions its rate equals the
    damping losses plus the source input. The rate is estimated with a
    centered difference (``stencil`` 2 or 4 selects second or fourth order)
    and the mismatch is scaled by the largest gross energy-exchange rate in
    the window.
    """
    if stencil not in (2, 4):
        raise ParameterError("stencil must be 2 or 4")
    if len(tr) < stencil + 1:
        raise ParameterError(f"energy audit needs at least {stencil + 1} samples")
    w1 = _coupling_weight(d.alpha1, d.alpha4, "excitation")
    w2 = _coupling_weight(d.alpha2, d.beta2, "harvesting")
    Y, dY, Q1, dQ1, Q2, dQ2 = tr.states.T
    H = (0.5 * dY ** 2 + 0.5 * Y ** 2 - d.W2 / 3 * Y ** 3 + d.W3 / 4 * Y ** 4
         + w1 * (0.5 * dQ1 ** 2 + 0.5 * d.W4 * Q1 ** 2)
         + w2 * (0.5 * dQ2 ** 2 + 0.5 * d.beta3 * Q2 ** 2))
    source = w1 * d.E * np.cos(d.Omega * tr.tau) * dQ1
    losses = d.alpha3 * dY ** 2 + w1 * d.alpha5 * dQ1 ** 2 + w2 * d.beta1 * dQ2 ** 2
    rate = source - losses
    if stencil == 2:
        dH = (H[2:] - H[:-2]) / (2 * tr.dt)
        rate = rate[1:-1]
    else:
        dH = (-H[4:] + 8 * H[3:-1] - 8 * H[1:-3] + H[:-4]) / (12 * tr.dt)
        rate = rate[2:-2]
    gross = (np.abs(dY * (Y - d.W2 * Y ** 2 + d.W3 * Y ** 3))
             + w1 * np.abs(d.W4 * Q1 * dQ1) + w2 * np.abs(d.beta3 * Q2 * dQ2)
             + np.abs(source) + losses)
    scale = gross.max()
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(dH - rate)) / scale)
