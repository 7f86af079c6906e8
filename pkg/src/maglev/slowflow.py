"""Shared pieces of the two multiple-scales reductions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .errors import ChartError

CHART_FLOOR = 1e-9


class FreqRespPoint(NamedTuple):
    sigma1: float
    p1: float
    p2: float
    p3: float
    stable: bool


@dataclass(frozen=True)
class FreqRespCurve:
    """Equilibrium branches over a detuning grid.

    ``points`` is sorted by sigma1, then p1 (then p2); grid values without
    an equilibrium are listed in ``empty``.
    """

    E: float
    regime: str
    grid: tuple
    points: tuple
    empty: tuple = ()

    def __iter__(self) -> Iterator[FreqRespPoint]:
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def column(self, name) -> np.ndarray:
        return np.array([getattr(pt, name) for pt in self.points], dtype=float)

    def peak(self, name="p3", stable_only=False) -> FreqRespPoint | None:
        pts = [pt for pt in self.points if pt.stable or not stable_only]
        if not pts:
            return None
        return max(pts, key=lambda pt: getattr(pt, name))


def wrap_phase(x):
    """Map an angle to (-pi, pi]."""
    y = math.remainder(x, 2 * math.pi)
    return math.pi if y == -math.pi else y


def check_chart(floor, **amps):
    for name, value in amps.items():
        if not value > floor:
            raise ChartError(f"polar chart singular: {name}={value!r} <= {floor}")


def is_stable(eigenvalues) -> bool:
    return bool(np.all(np.real(eigenvalues) < 0))


def sigma_grid(sigma1_range, n_points):
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    lo, hi = sigma1_range
    return np.linspace(lo, hi, n_points)


def ordered(points):
    return tuple(sorted(points, key=lambda pt: (pt.sigma1, pt.p1, pt.p2)))
