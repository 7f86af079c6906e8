"""Internal-resonance reduction (sqrt(W4) ~ sqrt(beta3) ~ 1).

Polar slow flow on ``(p1, gamma1, p2, gamma2, p3, gamma3)`` where p1, p2, p3
are the amplitudes of Y, Q1, Q2 and the gammas are the phase combinations

    gamma1 = q2 + sigma2*T - q1
    gamma2 = sigma1*T - q2
    gamma3 = sigma3*T + q3 - q1

Equilibria come from a one-dimensional root search in p1: p3 and p2 follow
in closed form and E**2 is an explicit function of p1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ChartError, ParameterError
from .model import DimlessParams
from .slowflow import (CHART_FLOOR, FreqRespCurve, FreqRespPoint, check_chart, is_stable,
                       ordered, sigma_grid, wrap_phase)

__all__ = [
    "InternalDetuning",
    "SlowStateInternal",
    "EquilibriumInternal",
    "slow_rhs_internal",
    "slow_rhs_internal_cartesian",
    "to_cartesian_internal",
    "p3_of_p1",
    "p2_of",
    "E2_of_p1",
    "solve_equilibria_internal",
    "jacobian_internal",
    "freq_response_internal",
]


class InternalDetuning(NamedTuple):
    sigma1: float
    sigma2: float
    sigma3: float

    @classmethod
    def from_params(cls, d: DimlessParams, sigma1=None):
        """Detunings with epsilon = 1; ``sigma1`` overrides Omega - sqrt(W4)."""
        s1 = d.Omega - math.sqrt(d.W4) if sigma1 is None else sigma1
        return cls(float(s1), math.sqrt(d.W4) - 1.0, math.sqrt(d.beta3) - 1.0)

    @property
    def mismatch(self):
        """sigma1 + sigma2 - sigma3: detuning of the harvesting circuit from the drive."""
        return self.sigma1 + self.sigma2 - self.sigma3


class SlowStateInternal(NamedTuple):
    p1: float
    gamma1: float
    p2: float
    gamma2: float
    p3: float
    gamma3: float


@dataclass(frozen=True)
class EquilibriumInternal:
    state: SlowStateInternal
    stable: bool
    eigenvalues: np.ndarray
    detuning: InternalDetuning


def slow_rhs_internal(s, d: DimlessParams, det: InternalDetuning,
                      chart_floor=CHART_FLOOR) -> np.ndarray:
    """Rates of ``(p1, gamma1, p2, gamma2, p3, gamma3)``."""
    p1, g1, p2, g2, p3, g3 = s
    check_chart(chart_floor, p1=p1, p2=p2, p3=p3)
    rw, rb = math.sqrt(d.W4), math.sqrt(d.beta3)
    s1, c1 = math.sin(g1), math.cos(g1)
    s2, c2 = math.sin(g2), math.cos(g2)
    s3, c3 = math.sin(g3), math.cos(g3)
    dp1 = -0.5 * (d.alpha1 * rw * p2 * c1 + d.alpha2 * rb * p3 * c3 + d.alpha3 * p1)
    # p1^2 * conj(p1) of the complex form is p1^3 for a real amplitude
    g12 = (det.sigma1 + det.sigma2
           + (d.alpha1 * rw * p2 * s1 + d.alpha2 * rb * p3 * s3 - 0.75 * d.W3 * p1 ** 3) / (2 * p1))
    dp2 = (d.alpha4 * p1 * c1 - d.alpha5 * rw * p2 + d.E * s2) / (2 * rw)
    dg2 = det.sigma1 + (d.alpha4 * p1 * s1 + d.E * c2) / (2 * rw * p2)
    dp3 = (-d.beta1 * rb * p3 + d.beta2 * p1 * c3) / (2 * rb)
    dg3 = g12 - det.mismatch - d.beta2 * p1 * s3 / (2 * p3 * rb)
    return np.array([dp1, g12 - dg2, dp2, dg2, dp3, dg3])


def to_cartesian_internal(s) -> np.ndarray:
    """Complex amplitudes ``(Z1, Z2, Z3)`` of a polar state, in the drive frame."""
    p1, g1, p2, g2, p3, g3 = s
    return np.array([p1 * np.exp(-1j * (g1 + g2)),
                     p2 * np.exp(-1j * g2),
                     p3 * np.exp(1j * (g3 - g1 - g2))])


def slow_rhs_internal_cartesian(z, d: DimlessParams, det: InternalDetuning) -> np.ndarray:
    """Complex-amplitude slow flow; regular at zero amplitude.

    ``Zk = pk * exp(i*phase_k)`` with the phases measured in a frame that
    rotates with the drive, so equilibria are fixed points.
    """
    Z1, Z2, Z3 = z
    rw, rb = math.sqrt(d.W4), math.sqrt(d.beta3)
    dZ1 = (-1j * (det.sigma1 + det.sigma2) * Z1
           - 0.5 * (d.alpha1 * rw * Z2 + d.alpha2 * rb * Z3 + d.alpha3 * Z1)
           + 0.375j * d.W3 * abs(Z1) ** 2 * Z1)
    dZ2 = (0.5 * d.alpha4 * Z1 / rw - 1j * det.sigma1 * Z2 - 0.5 * d.alpha5 * Z2
           - 0.5j * d.E / rw)
    dZ3 = -1j * det.mismatch * Z3 - 0.5 * d.beta1 * Z3 + 0.5 * d.beta2 * Z1 / rb
    return np.array([dZ1, dZ2, dZ3])


def p3_of_p1(p1, d: DimlessParams, det: InternalDetuning):
    """Harvesting-charge amplitude slaved to the magnet amplitude."""
    s = det.mismatch
    den = d.beta1 ** 2 * d.beta3 + 4 * d.beta3 * s ** 2
    if den <= 0:
        raise ParameterError("p3 undefined: beta1 = 0 with zero harvesting detuning")
    return d.beta2 * np.asarray(p1, dtype=float) / math.sqrt(den)


def _p2_parts(p1, p3, d, det):
    # alpha1*sqrt(W4)*p2*(cos gamma1, sin gamma1) times beta2*p1
    cos_part = -(d.alpha2 * d.beta1 * d.beta3 * p3 ** 2 + d.alpha3 * p1 ** 2 * d.beta2)
    sin_part = 2 * (d.alpha2 * p3 ** 2 * d.beta3 * det.mismatch
                    - d.beta2 * p1 ** 2 * (det.sigma1 + det.sigma2 - 0.375 * d.W3 * p1 ** 2))
    return cos_part, sin_part


def p2_of(p1, p3, d: DimlessParams, det: InternalDetuning):
    """Excitation-charge amplitude from p1 and p3."""
    p1 = np.asarray(p1, dtype=float)
    if np.any(p1 <= 0):
        raise ChartError("p2 undefined at p1 = 0")
    den = d.beta2 * p1 * d.alpha1 * math.sqrt(d.W4)
    if np.any(den == 0):
        raise ChartError("p2 undefined when alpha1 or beta2 vanishes")
    cos_part, sin_part = _p2_parts(p1, np.asarray(p3, dtype=float), d, det)
    return np.hypot(cos_part, sin_part) / np.abs(den)


def E2_of_p1(p1, d: DimlessParams, det: InternalDetuning):
    """Squared drive amplitude that sustains an equilibrium with magnet amplitude p1."""
    p1 = np.asarray(p1, dtype=float)
    p3 = p3_of_p1(p1, d, det)
    p2 = p2_of(p1, p3, d, det)
    s1 = det.sigma1
    bracket = (d.alpha5 * d.alpha2 * d.beta1 * d.beta3 * p3 ** 2
               + d.alpha5 * d.alpha3 * d.beta2 * p1 ** 2
               + 4 * s1 * d.alpha2 * p3 ** 2 * d.beta3 * det.mismatch
               - 4 * s1 * d.beta2 * p1 ** 2 * (s1 + det.sigma2 - 0.375 * d.W3 * p1 ** 2))
    return (d.alpha5 ** 2 * p2 ** 2 * d.W4 + d.alpha4 ** 2 * p1 ** 2
            + 4 * s1 ** 2 * d.W4 * p2 ** 2
            + 2 * d.alpha4 / (d.alpha1 * d.beta2) * bracket)


def _bisect(f, lo, hi, flo):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _equilibrium_from_p1(p1, E, d, det):
    p3 = float(p3_of_p1(p1, d, det))
    p2 = float(p2_of(p1, p3, d, det))
    rb, rw = math.sqrt(d.beta3), math.sqrt(d.W4)
    sb = math.copysign(1.0, d.beta2)
    g3 = math.atan2(-2 * sb * det.mismatch, sb * d.beta1)
    cos_part, sin_part = _p2_parts(p1, p3, d, det)
    sgn = math.copysign(1.0, d.alpha1 * d.beta2)
    g1 = math.atan2(sgn * sin_part, sgn * cos_part)
    g2 = math.atan2(d.alpha5 * rw * p2 - d.alpha4 * p1 * math.cos(g1),
                    -d.alpha4 * p1 * math.sin(g1) - 2 * rw * p2 * det.sigma1)
    return SlowStateInternal(float(p1), wrap_phase(g1), p2, wrap_phase(g2), p3, wrap_phase(g3))


def solve_equilibria_internal(E, d: DimlessParams, det: InternalDetuning = None,
                              p1_max=3.0, n_scan=2000, chart_floor=CHART_FLOOR):
    """All slow-flow equilibria with p1 in (0, p1_max] for drive amplitude ``E``.

    Sign changes of ``E2_of_p1 - E**2`` are bracketed on a uniform scan and
    refined by bisection to machine precision. The drive amplitude in ``d``
    is ignored in favour of ``E``.
    """
    if not E > 0:
        raise ParameterError("E must be > 0")
    det = det or InternalDetuning.from_params(d)
    d = d.replace(E=E)
    grid = np.linspace(p1_max / n_scan, p1_max, n_scan)
    f = E2_of_p1(grid, d, det) - E * E

    def g(x):
        return float(E2_of_p1(x, d, det)) - E * E

    roots = []
    for i in np.nonzero(np.sign(f[:-1]) != np.sign(f[1:]))[0]:
        roots.append(_bisect(g, grid[i], grid[i + 1], f[i]))
    # lowest amplitude root can sit below the first scan point
    if f[0] > 0 and g(chart_floor) < 0:
        roots.insert(0, _bisect(g, chart_floor, grid[0], g(chart_floor)))
    out = []
    for p1 in roots:
        state = _equilibrium_from_p1(p1, E, d, det)
        if min(state.p1, state.p2, state.p3) <= chart_floor:
            continue
        eig = np.linalg.eigvals(jacobian_internal(state, d, det))
        out.append(EquilibriumInternal(state, is_stable(eig), eig, det))
    return out


def jacobian_internal(s, d: DimlessParams, det: InternalDetuning,
                      chart_floor=CHART_FLOOR) -> np.ndarray:
    """Analytic Jacobian of :func:`slow_rhs_internal` (rows and columns in state order)."""
    p1, g1, p2, g2, p3, g3 = s
    check_chart(chart_floor, p1=p1, p2=p2, p3=p3)
    a1, a2, a3, a4, a5 = d.alpha1, d.alpha2, d.alpha3, d.alpha4, d.alpha5
    b1, b2 = d.beta1, d.beta2
    rw, rb, E = math.sqrt(d.W4), math.sqrt(d.beta3), d.E
    s1, c1 = math.sin(g1), math.cos(g1)
    s2, c2 = math.sin(g2), math.cos(g2)
    s3, c3 = math.sin(g3), math.cos(g3)

    J = np.zeros((6, 6))
    J[0] = [-a3 / 2, 0.5 * a1 * rw * p2 * s1, -0.5 * a1 * rw * c1, 0.0,
            -0.5 * a2 * rb * c3, 0.5 * a2 * rb * p3 * s3]

    N = a1 * rw * p2 * s1 + a2 * rb * p3 * s3 - 0.75 * d.W3 * p1 ** 3
    g12 = np.array([-N / (2 * p1 ** 2) - 1.125 * d.W3 * p1,
                    a1 * rw * p2 * c1 / (2 * p1),
                    a1 * rw * s1 / (2 * p1),
                    0.0,
                    a2 * rb * s3 / (2 * p1),
                    a2 * rb * p3 * c3 / (2 * p1)])

    J[2] = [a4 * c1 / (2 * rw), -a4 * p1 * s1 / (2 * rw), -a5 / 2, E * c2 / (2 * rw), 0.0, 0.0]
    J[3] = [a4 * s1 / (2 * rw * p2), a4 * p1 * c1 / (2 * rw * p2),
            -(a4 * p1 * s1 + E * c2) / (2 * rw * p2 ** 2), -E * s2 / (2 * rw * p2), 0.0, 0.0]
    J[1] = g12 - J[3]
    J[4] = [b2 * c3 / (2 * rb), 0.0, 0.0, 0.0, -b1 / 2, -b2 * p1 * s3 / (2 * rb)]
    J[5] = g12 + np.array([-b2 * s3 / (2 * p3 * rb), 0.0, 0.0, 0.0,
                           b2 * p1 * s3 / (2 * p3 ** 2 * rb), -b2 * p1 * c3 / (2 * p3 * rb)])
    return J


def freq_response_internal(E, d: DimlessParams, sigma1_range=(-0.4, 0.4), n_points=81,
                           p1_max=3.0, n_scan=2000) -> FreqRespCurve:
    """Equilibria and stability over a sigma1 grid; sigma2, sigma3 come from ``d``."""
    grid = sigma_grid(sigma1_range, n_points)
    points, empty = [], []
    for s1 in grid:
        det = InternalDetuning.from_params(d, sigma1=float(s1))
        eqs = solve_equilibria_internal(E, d, det, p1_max=p1_max, n_scan=n_scan)
        if not eqs:
            empty.append(float(s1))
        for eq in eqs:
            st = eq.state
            points.append(FreqRespPoint(float(s1), st.p1, st.p2, st.p3, eq.stable))
    return FreqRespCurve(E=float(E), regime="internal", grid=tuple(map(float, grid)),
                         points=ordered(points), empty=tuple(empty))
