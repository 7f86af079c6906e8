"""Primary-resonance reduction (Omega ~ sqrt(W4) ~ sqrt(beta3), both away from 1).

Second-order expansion. The magnet amplitude p1 decays on its own
(``p1' = -alpha3*p1/2``), so steady states have p1 = 0 and the magnet
moves only through the first-order correction driven by the two circuits.
The reduced state is ``(p2, gamma2, p3, gamma1)`` with

    gamma1 = sigma4*T + q2 - q3
    gamma2 = sigma1*T - q2

At equilibrium p3 is proportional to p2 and both are proportional to E.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ChartError, ParameterError, ResonantDenominatorError
from .model import DimlessParams
from .slowflow import (CHART_FLOOR, FreqRespCurve, FreqRespPoint, check_chart, is_stable,
                       ordered, sigma_grid, wrap_phase)

__all__ = [
    "PrimaryDetuning",
    "SlowStatePrimary",
    "EquilibriumPrimary",
    "Corrections",
    "slow_rhs_primary",
    "slow_rhs_primary_cartesian",
    "to_cartesian_primary",
    "p3_of_p2",
    "solve_equilibrium_primary",
    "jacobian_primary",
    "first_order_corrections",
    "reconstruct_primary",
    "freq_response_primary",
]


class PrimaryDetuning(NamedTuple):
    sigma1: float
    sigma4: float

    @classmethod
    def from_params(cls, d: DimlessParams, sigma1=None):
        s1 = d.Omega - math.sqrt(d.W4) if sigma1 is None else sigma1
        return cls(float(s1), math.sqrt(d.W4) - math.sqrt(d.beta3))


class SlowStatePrimary(NamedTuple):
    p1: float
    p2: float
    gamma2: float
    p3: float
    gamma1: float


@dataclass(frozen=True)
class EquilibriumPrimary:
    p2: float
    p3: float
    gamma1: float
    gamma2: float
    stable: bool
    eigenvalues: np.ndarray
    detuning: PrimaryDetuning
    p1: float = 0.0

    @property
    def state(self) -> SlowStatePrimary:
        return SlowStatePrimary(0.0, self.p2, self.gamma2, self.p3, self.gamma1)


class _Coeffs(NamedTuple):
    rw: float
    rb: float
    K1: float  # alpha1*alpha4*W4/(W4-1): self-shift of the excitation circuit
    K2: float  # alpha2*alpha4*beta3/(beta3-1): harvesting -> excitation
    K3: float  # alpha1*beta2*W4/(W4-1): excitation -> harvesting
    K4: float  # alpha2*beta2*beta3/(beta3-1): self-shift of the harvesting circuit


def _coeffs(d: DimlessParams) -> _Coeffs:
    if d.W4 == 1.0 or d.beta3 == 1.0:
        raise ResonantDenominatorError(
            f"W4={d.W4}, beta3={d.beta3}: the primary-resonance expansion is singular "
            "at unit frequency ratio; use the internal-resonance analysis")
    w, b = d.W4 - 1.0, d.beta3 - 1.0
    return _Coeffs(math.sqrt(d.W4), math.sqrt(d.beta3),
                   d.alpha1 * d.alpha4 * d.W4 / w, d.alpha2 * d.alpha4 * d.beta3 / b,
                   d.alpha1 * d.beta2 * d.W4 / w, d.alpha2 * d.beta2 * d.beta3 / b)


def slow_rhs_primary(s, d: DimlessParams, det: PrimaryDetuning,
                     chart_floor=CHART_FLOOR) -> np.ndarray:
    """Rates of ``(p1, p2, gamma2, p3, gamma1)``."""
    p1, p2, g2, p3, g1 = s
    check_chart(chart_floor, p2=p2, p3=p3)
    k = _coeffs(d)
    s1, c1 = math.sin(g1), math.cos(g1)
    s2, c2 = math.sin(g2), math.cos(g2)
    dp1 = -0.5 * d.alpha3 * p1
    dp2 = (k.K2 * p3 * s1 - d.alpha5 * k.rw * p2 + d.E * s2) / (2 * k.rw)
    dg2 = det.sigma1 - k.K1 / (2 * k.rw) + (-k.K2 * p3 * c1 + d.E * c2) / (2 * k.rw * p2)
    dp3 = (-d.beta1 * k.rb * p3 - k.K3 * p2 * s1) / (2 * k.rb)
    dg12 = det.sigma1 + det.sigma4 - k.K4 / (2 * k.rb) - k.K3 * p2 * c1 / (2 * k.rb * p3)
    return np.array([dp1, dp2, dg2, dp3, dg12 - dg2])


def to_cartesian_primary(s) -> np.ndarray:
    """Complex amplitudes ``(Z2, Z3)`` of ``(p1, p2, gamma2, p3, gamma1)`` in the drive frame."""
    _, p2, g2, p3, g1 = s
    return np.array([p2 * np.exp(-1j * g2), p3 * np.exp(-1j * (g1 + g2))])


def slow_rhs_primary_cartesian(z, d: DimlessParams, det: PrimaryDetuning) -> np.ndarray:
    """Complex-amplitude slow flow of the two circuits (the decaying magnet mode is left out)."""
    Z2, Z3 = z
    k = _coeffs(d)
    dZ2 = (-1j * det.sigma1 * Z2 + 0.5j * (k.K1 * Z2 + k.K2 * Z3) / k.rw
           - 0.5 * d.alpha5 * Z2 - 0.5j * d.E / k.rw)
    dZ3 = (-1j * (det.sigma1 + det.sigma4) * Z3 - 0.5 * d.beta1 * Z3
           + 0.5j * (k.K3 * Z2 + k.K4 * Z3) / k.rb)
    return np.array([dZ2, dZ3])


def _ratio(d, det, k):
    # p3 / p2 at equilibrium
    return abs(k.K3) / math.sqrt(d.beta1 ** 2 * d.beta3
                                 + (2 * k.rb * (det.sigma1 + det.sigma4) - k.K4) ** 2)


def p3_of_p2(p2, d: DimlessParams, det: PrimaryDetuning):
    """Harvesting-charge amplitude at equilibrium for excitation amplitude p2."""
    k = _coeffs(d)
    return _ratio(d, det, k) * np.asarray(p2, dtype=float)


def solve_equilibrium_primary(E, d: DimlessParams, det: PrimaryDetuning = None,
                              chart_floor=CHART_FLOOR) -> EquilibriumPrimary:
    """The unique equilibrium with p1 = 0 (closed form, linear in E)."""
    if not E > 0:
        raise ParameterError("E must be > 0")
    det = det or PrimaryDetuning.from_params(d)
    d = d.replace(E=E)
    k = _coeffs(d)
    if k.K3 == 0:
        raise ChartError("harvesting amplitude vanishes (alpha1*beta2 = 0)")
    c = _ratio(d, det, k)
    detune = 2 * k.rb * (det.sigma1 + det.sigma4) - k.K4
    # E*sin(gamma2) = a*p2, E*cos(gamma2) = b*p2
    a = d.alpha5 * k.rw + k.K2 * d.beta1 * k.rb * c * c / k.K3
    b = k.K1 - 2 * k.rw * det.sigma1 + k.K2 * detune * c * c / k.K3
    p2 = E / math.hypot(a, b)
    p3 = c * p2
    sk = math.copysign(1.0, k.K3)
    g1 = math.atan2(-sk * d.beta1 * k.rb, sk * detune)
    g2 = math.atan2(a, b)
    check_chart(chart_floor, p2=p2, p3=p3)
    state = SlowStatePrimary(0.0, p2, wrap_phase(g2), p3, wrap_phase(g1))
    eig = np.linalg.eigvals(jacobian_primary(state, d, det))
    return EquilibriumPrimary(p2=p2, p3=p3, gamma1=state.gamma1, gamma2=state.gamma2,
                              stable=is_stable(eig), eigenvalues=eig, detuning=det)


def jacobian_primary(s, d: DimlessParams, det: PrimaryDetuning,
                     chart_floor=CHART_FLOOR) -> np.ndarray:
    """Analytic Jacobian of the ``(p2, gamma2, p3, gamma1)`` rows of :func:`slow_rhs_primary`.

    ``s`` is either a full ``SlowStatePrimary`` or the reduced 4-vector.
    """
    if len(s) == 5:
        _, p2, g2, p3, g1 = s
    else:
        p2, g2, p3, g1 = s
    check_chart(chart_floor, p2=p2, p3=p3)
    k = _coeffs(d)
    E, rw, rb = d.E, k.rw, k.rb
    s1, c1 = math.sin(g1), math.cos(g1)
    s2, c2 = math.sin(g2), math.cos(g2)
    J = np.zeros((4, 4))
    J[0] = [-d.alpha5 / 2, E * c2 / (2 * rw), k.K2 * s1 / (2 * rw), k.K2 * p3 * c1 / (2 * rw)]
    J[1] = [-(-k.K2 * p3 * c1 + E * c2) / (2 * rw * p2 ** 2), -E * s2 / (2 * rw * p2),
            -k.K2 * c1 / (2 * rw * p2), k.K2 * p3 * s1 / (2 * rw * p2)]
    J[2] = [-k.K3 * s1 / (2 * rb), 0.0, -d.beta1 / 2, -k.K3 * p2 * c1 / (2 * rb)]
    g12 = np.array([-k.K3 * c1 / (2 * rb * p3), 0.0,
                    k.K3 * p2 * c1 / (2 * rb * p3 ** 2), k.K3 * p2 * s1 / (2 * rb * p3)])
    J[3] = g12 - J[1]
    return J


class Corrections(NamedTuple):
    """Complex coefficients of the first-order correction fields.

    Y picks up ``v0_w4 * exp(i*sqrt(W4)*t) + v0_b3 * exp(i*sqrt(beta3)*t) + c.c.``;
    Q1 and Q2 pick up ``v1 * exp(i*t) + c.c.`` and ``v2 * exp(i*t) + c.c.``.
    """

    v0_w4: complex
    v0_b3: complex
    v1: complex
    v2: complex


def first_order_corrections(A1, A2, A3, d: DimlessParams) -> Corrections:
    _coeffs(d)
    w, b = d.W4 - 1.0, d.beta3 - 1.0
    return Corrections(
        v0_w4=1j * d.alpha1 * math.sqrt(d.W4) * A2 / w,
        v0_b3=1j * d.alpha2 * math.sqrt(d.beta3) * A3 / b,
        v1=1j * d.alpha4 * A1 / w,
        v2=1j * d.beta2 * A1 / b,
    )


def reconstruct_primary(eq: EquilibriumPrimary, d: DimlessParams, tau) -> np.ndarray:
    """Time histories ``(Y, Q1, Q2)`` of a steady state, epsilon set to 1.

    Returns an array of shape ``(3, len(tau))``.
    """
    tau = np.asarray(tau, dtype=float)
    det = eq.detuning
    rw, rb = math.sqrt(d.W4), math.sqrt(d.beta3)
    q2 = det.sigma1 * tau - eq.gamma2
    q3 = det.sigma4 * tau + q2 - eq.gamma1
    A2 = 0.5 * eq.p2 * np.exp(1j * q2)
    A3 = 0.5 * eq.p3 * np.exp(1j * q3)
    corr = first_order_corrections(0.0, A2, A3, d)
    e_w, e_b = np.exp(1j * rw * tau), np.exp(1j * rb * tau)
    Y = 2 * np.real(corr.v0_w4 * e_w + corr.v0_b3 * e_b)
    Q1 = 2 * np.real(A2 * e_w + corr.v1 * np.exp(1j * tau))
    Q2 = 2 * np.real(A3 * e_b + corr.v2 * np.exp(1j * tau))
    return np.vstack([Y, Q1, Q2])


def freq_response_primary(E, d: DimlessParams, sigma1_range=(-0.6, 0.6),
                          n_points=121) -> FreqRespCurve:
    """Equilibrium per sigma1 on the grid; sigma4 comes from ``d``."""
    grid = sigma_grid(sigma1_range, n_points)
    points = []
    for s1 in grid:
        eq = solve_equilibrium_primary(E, d, PrimaryDetuning.from_params(d, sigma1=float(s1)))
        points.append(FreqRespPoint(float(s1), 0.0, eq.p2, eq.p3, eq.stable))
    return FreqRespCurve(E=float(E), regime="primary", grid=tuple(map(float, grid)),
                         points=ordered(points))
