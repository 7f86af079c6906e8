"""Equations of motion for the levitated-magnet harvester.

Two models live here:

* the legacy model: magnet plus excitation circuit, dimensional, gravity
  included, power read from the magnet velocity;
* the coupled model: magnet plus excitation circuit plus an RLC harvesting
  circuit, written in normalized form about the static offset.

``normalize`` maps physical constants to the normalized coefficient set and
``fit_physical`` goes the other way (one of many possible inversions).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from typing import NamedTuple

import numpy as np

from .errors import ParameterError

__all__ = [
    "PhysicalParams",
    "DimlessParams",
    "State6",
    "StateLegacy",
    "solve_static_offset",
    "natural_frequency",
    "normalize",
    "fit_physical",
    "rhs_new",
    "rhs_legacy",
    "power_new",
    "power_legacy",
    "BASELINE",
    "REF17",
]


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional constants (SI units)."""

    m: float
    g: float
    k1: float
    k3: float
    S1: float
    S2: float
    Cme: float
    Ls: float
    Rs: float
    Cs: float
    Lt: float
    Rt: float
    Ct: float
    e: float
    Omega_hat: float
    x0: float
    q0: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise ParameterError(f"{f.name} must be finite, got {v!r}")
        for name in ("m", "Ls", "Lt", "Cs", "Ct", "x0", "q0", "k1", "k3"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be > 0, got {getattr(self, name)!r}")

    def replace(self, **changes) -> "PhysicalParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DimlessParams:
    """Normalized coefficients of the coupled model."""

    W2: float
    W3: float
    W4: float
    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float
    alpha5: float
    beta1: float
    beta2: float
    beta3: float
    E: float
    Omega: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ParameterError(f"{f.name} must be a finite number, got {v!r}")
            object.__setattr__(self, f.name, float(v))
        if self.W4 <= 0:
            raise ParameterError(f"W4 must be > 0, got {self.W4}")
        if self.beta3 <= 0:
            raise ParameterError(f"beta3 must be > 0, got {self.beta3}")
        for name in ("alpha3", "alpha5", "beta1"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)}")

    def replace(self, **changes) -> "DimlessParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)

    def as_array(self) -> np.ndarray:
        """Coefficients in field order, for the compiled kernels."""
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


class State6(NamedTuple):
    tau: float
    Y: float
    dY: float
    Q1: float
    dQ1: float
    Q2: float
    dQ2: float

    def vector(self) -> np.ndarray:
        return np.array(self[1:], dtype=np.float64)


class StateLegacy(NamedTuple):
    t: float
    x: float
    dx: float
    q1: float
    dq1: float

    def vector(self) -> np.ndarray:
        return np.array(self[1:], dtype=np.float64)


# Normalized coefficient sets used throughout the studies.
BASELINE = DimlessParams(
    W2=1.5, W3=1.0, W4=2.2783,
    alpha1=0.3247, alpha2=0.3247, alpha3=0.3125, alpha4=0.3248, alpha5=0.84,
    beta1=0.8333, beta2=0.3248, beta3=2.2783,
    E=0.7812, Omega=3.5,
)

# Chaos-study set; alpha2/beta2 are varied by the caller.
REF17 = DimlessParams(
    W2=2.0, W3=4.0, W4=9.108,
    alpha1=0.64944, alpha2=0.0, alpha3=0.61996, alpha4=0.3248, alpha5=0.1499,
    beta1=0.1, beta2=0.0, beta3=9.108,
    E=3.07, Omega=3.1215,
)


def solve_static_offset(m, g, k1, k3):
    """Rest displacement ``Y0`` solving ``k1*Y0 + k3*Y0**3 = m*g``.

    The left side is strictly increasing for k1, k3 > 0, so the root is
    unique. Bracketed bisection, then three Newton steps.
    """
    if not (k1 > 0 and k3 > 0):
        raise ParameterError(f"k1 and k3 must be > 0 (got k1={k1}, k3={k3})")
    if m < 0 or g <= 0:
        raise ParameterError(f"need m >= 0 and g > 0 (got m={m}, g={g})")
    load = m * g
    if load == 0:
        return 0.0

    def f(y):
        return k1 * y + k3 * y ** 3 - load

    lo, hi = 0.0, load / k1 + (load / k3) ** (1.0 / 3.0)
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    y = 0.5 * (lo + hi)
    for _ in range(3):
        y -= f(y) / (k1 + 3 * k3 * y * y)
    return y


def natural_frequency(p: PhysicalParams) -> float:
    """Linearized angular frequency of the magnet about its rest position."""
    y0 = solve_static_offset(p.m, p.g, p.k1, p.k3)
    return math.sqrt((3 * p.k3 * y0 ** 2 + p.k1) / p.m)


def normalize(p: PhysicalParams) -> DimlessParams:
    y0 = solve_static_offset(p.m, p.g, p.k1, p.k3)
    w0sq = (3 * p.k3 * y0 ** 2 + p.k1) / p.m
    w0 = math.sqrt(w0sq)
    m, x0, q0 = p.m, p.x0, p.q0
    return DimlessParams(
        W2=3 * p.k3 * y0 * x0 / (m * w0sq),
        W3=p.k3 * x0 ** 2 / (m * w0sq),
        W4=1 / (w0sq * p.Ls * p.Cs),
        alpha1=p.S1 * q0 / (m * w0 * x0),
        alpha2=p.S2 * q0 / (m * w0 * x0),
        alpha3=p.Cme / (m * w0),
        alpha4=p.S1 * x0 / (p.Ls * w0 * q0),
        alpha5=p.Rs / (p.Ls * w0),
        beta1=p.Rt / (p.Lt * w0),
        beta2=p.S2 * x0 / (p.Lt * w0 * q0),
        beta3=1 / (w0sq * p.Lt * p.Ct),
        E=p.e / (p.Ls * w0sq * q0),
        Omega=p.Omega_hat / w0,
    )


def fit_physical(d: DimlessParams, m=0.1, g=9.81, y0=0.02, q0=None) -> PhysicalParams:
    """Build a physical parameter set whose normalization is ``d``.

    The normalized set does not pin the physical one down; mass, gravity,
    rest offset and the charge scale are free and chosen by the caller.
    The stiffness ratio W2/W3 fixes the displacement scale at
    ``x0 = 3*y0*W3/W2``.
    """
    if d.W2 <= 0 or d.W3 <= 0:
        raise ParameterError("fit needs W2 > 0 and W3 > 0")
    if d.alpha4 == 0 or d.beta2 == 0:
        raise ParameterError("fit needs nonzero alpha4 and beta2")
    x0 = 3 * y0 * d.W3 / d.W2
    # W3 = k3 x0^2 / (3 k3 y0^2 + k1) -> k1 = k3 (x0^2/W3 - 3 y0^2)
    ratio = x0 ** 2 / d.W3 - 3 * y0 ** 2
    if ratio <= 0:
        raise ParameterError("W2, W3 combination has no positive linear stiffness")
    k3 = m * g / (ratio * y0 + y0 ** 3)
    k1 = k3 * ratio
    w0 = math.sqrt((3 * k3 * y0 ** 2 + k1) / m)
    q0 = x0 if q0 is None else q0
    S1 = d.alpha1 * m * w0 * x0 / q0
    S2 = d.alpha2 * m * w0 * x0 / q0
    Ls = S1 * x0 / (d.alpha4 * w0 * q0)
    Lt = S2 * x0 / (d.beta2 * w0 * q0)
    return PhysicalParams(
        m=m, g=g, k1=k1, k3=k3, S1=S1, S2=S2,
        Cme=d.alpha3 * m * w0,
        Ls=Ls, Rs=d.alpha5 * Ls * w0, Cs=1 / (d.W4 * w0 ** 2 * Ls),
        Lt=Lt, Rt=d.beta1 * Lt * w0, Ct=1 / (d.beta3 * w0 ** 2 * Lt),
        e=d.E * Ls * w0 ** 2 * q0, Omega_hat=d.Omega * w0,
        x0=x0, q0=q0,
    )


def rhs_new(tau, y, d: DimlessParams) -> np.ndarray:
    """Time derivative of ``(Y, dY, Q1, dQ1, Q2, dQ2)`` at normalized time ``tau``."""
    Y, dY, Q1, dQ1, Q2, dQ2 = y
    return np.array([
        dY,
        -Y + d.W2 * Y * Y - d.W3 * Y ** 3 - d.alpha1 * dQ1 - d.alpha2 * dQ2 - d.alpha3 * dY,
        dQ1,
        d.E * math.cos(d.Omega * tau) + d.alpha4 * dY - d.W4 * Q1 - d.alpha5 * dQ1,
        dQ2,
        d.beta2 * dY - d.beta1 * dQ2 - d.beta3 * Q2,
    ])


def rhs_legacy(t, y, p: PhysicalParams) -> np.ndarray:
    """Time derivative of ``(x, dx, q1, dq1)`` for the dimensional legacy model."""
    x, dx, q1, dq1 = y
    return np.array([
        dx,
        -(p.m * p.g + p.k1 * x + p.k3 * x ** 3 + p.S1 * dq1 + p.Cme * dx) / p.m,
        dq1,
        (p.e * math.cos(p.Omega_hat * t) + p.S1 * dx - q1 / p.Cs - p.Rs * dq1) / p.Ls,
    ])


def power_new(dQ2, Rload=1.0):
    """Instantaneous harvested power ``Rload * dQ2**2`` (arrays accepted)."""
    if not Rload > 0:
        raise ParameterError(f"Rload must be > 0, got {Rload}")
    return Rload * np.square(dQ2)


def power_legacy(dx, ce, alpha_em, Rload=1.0):
    """Legacy harvested power ``((ce/alpha_em) * dx)**2 * Rload``."""
    if alpha_em == 0:
        raise ParameterError("alpha_em must be nonzero")
    if not Rload > 0:
        raise ParameterError(f"Rload must be > 0, got {Rload}")
    return np.square(ce / alpha_em * np.asarray(dx)) * Rload
