"""Stroboscopic sections, response classification, bifurcation sweeps and power."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import DivergenceError, GridMismatchError, ParameterError
from .integrator import IntegrationConfig, Trajectory, integrate
from .model import DimlessParams, power_legacy, power_new

__all__ = [
    "PoincareSection",
    "ResponseClass",
    "BifurcationDiagram",
    "poincare",
    "classify",
    "count_clusters",
    "bifurcation_sweep",
    "amplitude",
    "average_power",
    "average_power_legacy",
    "worker_count",
]

DEFAULT_TOL = 1e-2
MAX_PERIOD = 8

_PAIRS = {"Y": ("Y", "dY"), "Q1": ("Q1", "dQ1"), "Q2": ("Q2", "dQ2"),
          "x": ("x", "dx"), "q1": ("q1", "dq1")}


@dataclass(frozen=True)
class PoincareSection:
    points: np.ndarray  # shape (n, 2)
    variable: str
    tau: np.ndarray

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class ResponseClass:
    label: str
    distinct_points: int

    @property
    def periodic(self) -> bool:
        return self.label != "aperiodic"


@dataclass(frozen=True)
class BifurcationDiagram:
    param_name: tuple
    param_values: np.ndarray
    samples: tuple  # per grid value: Poincare values of the variable (empty if diverged)
    distinct: np.ndarray  # cluster counts, -1 where the run diverged
    variable: str
    tol: float

    @property
    def diverged(self) -> np.ndarray:
        return self.distinct < 0

    def first_split(self):
        """First grid value whose section has more than one cluster, or None."""
        for value, n in zip(self.param_values, self.distinct):
            if n > 1:
                return value
        return None


def worker_count(requested=None) -> int:
    if requested is not None:
        return max(1, int(requested))
    return max(1, int(os.environ.get("MAGLEV_THREADS", "1")))


def poincare(tr: Trajectory, d: DimlessParams, variable="Y") -> PoincareSection:
    """Sample ``(v, dv)`` once per forcing period, starting at the window start."""
    try:
        names = _PAIRS[variable]
    except KeyError:
        raise ParameterError(f"unknown section variable {variable!r}") from None
    period = 2 * math.pi / d.Omega
    n = tr.steps_per_period
    if not math.isclose(tr.dt * n, period, rel_tol=1e-12):
        raise GridMismatchError(
            f"forcing period {period!r} is not {n} steps of dt={tr.dt!r}")
    idx = np.arange(0, len(tr) - 1, n)
    pts = np.column_stack([tr.column(names[0])[idx], tr.column(names[1])[idx]])
    return PoincareSection(points=pts, variable=variable, tau=tr.tau[idx])


def count_clusters(points, tol=DEFAULT_TOL) -> int:
    """Number of connected groups when points closer than ``tol`` are joined.

    Order-independent (single linkage). Non-finite points each count alone.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = len(pts)
    if n == 0:
        return 0
    dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    adj = dist <= tol
    seen = np.zeros(n, dtype=bool)
    groups = 0
    for start in range(n):
        if seen[start]:
            continue
        groups += 1
        frontier = [start]
        seen[start] = True
        while frontier:
            nxt = np.nonzero(adj[frontier].any(axis=0) & ~seen)[0]
            seen[nxt] = True
            frontier = list(nxt)
    return groups


def classify(sec, tol=DEFAULT_TOL) -> ResponseClass:
    if not tol > 0:
        raise ParameterError("tol must be > 0")
    points = sec.points if isinstance(sec, PoincareSection) else sec
    k = count_clusters(points, tol)
    label = f"period-{k}" if 1 <= k <= MAX_PERIOD else "aperiodic"
    return ResponseClass(label, k)


def _set_params(d0, names, value):
    values = value if isinstance(value, tuple) else (value,)
    if len(values) != len(names):
        raise ParameterError(f"grid value {value!r} does not match parameters {names}")
    return d0.replace(**{n: float(v) for n, v in zip(names, values)})


def _one_point(args):
    d, cfg, variable, tol = args
    try:
        tr = integrate(d, cfg)
    except DivergenceError:
        return None, np.empty(0), -1
    sec = poincare(tr, d, variable)
    return tr.final_state, sec.points[:, 0].copy(), count_clusters(sec.points, tol)


def bifurcation_sweep(d0: DimlessParams, param_name, grid, cfg: IntegrationConfig = None,
                      variable="Y", tol=DEFAULT_TOL, reseed=False, workers=None):
    """Poincare values of ``variable`` across a parameter grid.

    ``param_name`` is a field name or a tuple of names swept together, in
    which case grid entries are tuples. By default each run starts from the
    previous run's final state (attractor continuation); ``reseed`` starts
    every run from ``cfg.initial_state`` and allows parallel evaluation.
    A diverged run is recorded with distinct = -1 and the next run is
    reseeded.
    """
    cfg = cfg or IntegrationConfig()
    names = (param_name,) if isinstance(param_name, str) else tuple(param_name)
    for n in names:
        if n not in DimlessParams.field_names():
            raise ParameterError(f"unknown parameter {n!r}")
    grid = list(grid)
    if not grid:
        raise ParameterError("grid must be non-empty")
    keys = [g if len(names) > 1 else (g,) for g in grid]
    firsts = [k[0] for k in keys]
    if any(b <= a for a, b in zip(firsts, firsts[1:])):
        raise ParameterError("grid must be strictly ascending")

    samples, distinct = [], []
    if reseed:
        jobs = [(_set_params(d0, names, tuple(k)), cfg, variable, tol) for k in keys]
        nw = worker_count(workers)
        if nw > 1:
            with ProcessPoolExecutor(max_workers=nw) as pool:
                results = list(pool.map(_one_point, jobs))
        else:
            results = [_one_point(j) for j in jobs]
        for _, vals, k in results:
            samples.append(vals)
            distinct.append(k)
    else:
        state = cfg.initial_state
        for k in keys:
            d = _set_params(d0, names, tuple(k))
            final, vals, n = _one_point((d, replace(cfg, initial_state=state), variable, tol))
            state = final if final is not None else cfg.initial_state
            samples.append(vals)
            distinct.append(n)
    values = np.array(firsts if len(names) == 1 else keys, dtype=float)
    return BifurcationDiagram(param_name=names, param_values=values, samples=tuple(samples),
                              distinct=np.array(distinct), variable=variable, tol=tol)


def amplitude(tr: Trajectory, variable="Y") -> float:
    """Half the peak-to-peak excursion over the recorded window."""
    v = tr.column(variable)
    return float(0.5 * (v.max() - v.min()))


def _time_average(values, tau):
    span = tau[-1] - tau[0]
    if span <= 0:
        raise ParameterError("need a window of positive length")
    return float(np.trapezoid(values, tau) / span)


def average_power(tr: Trajectory, Rload=1.0) -> float:
    """Trapezoidal time average of ``Rload * dQ2**2`` over the window."""
    return _time_average(power_new(tr.column("dQ2"), Rload), tr.tau)


def average_power_legacy(tr: Trajectory, ce, alpha_em, Rload=1.0) -> float:
    return _time_average(power_legacy(tr.column("dx"), ce, alpha_em, Rload), tr.tau)
