"""Parameter studies: capacitance retuning, family sweeps, chaos grid, power comparison."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import NamedTuple

from .diagnostics import (DEFAULT_TOL, ResponseClass, average_power, classify, poincare,
                          worker_count)
from .errors import DivergenceError, ParameterError
from .integrator import IntegrationConfig, integrate
from .internal import freq_response_internal
from .model import DimlessParams, PhysicalParams, normalize
from .primary import freq_response_primary

__all__ = [
    "Retune",
    "retune_capacitance",
    "retune_physical",
    "SweepSpec",
    "SweepRecord",
    "SweepResult",
    "family_sweep",
    "ChaosRecord",
    "chaos_grid",
    "PowerComparison",
    "power_compare",
    "CHAOS_PAIRS",
]

CHAOS_PAIRS = ((0.0, 0.0), (0.2, 0.15), (0.5, 0.375), (0.8, 0.6))
ANALYSES = ("freq_internal", "freq_primary", "simulate", "power")


class Retune(NamedTuple):
    params: DimlessParams
    cs_factor: float  # multiplier applied to Cs
    ct_factor: float  # multiplier applied to Ct


def retune_capacitance(d: DimlessParams, target: str) -> Retune:
    """Rescale both circuit capacitances to reach a resonance regime.

    ``internal`` puts both circuit frequencies at the magnet's (W4 = beta3 = 1);
    ``primary`` puts them at the drive frequency (W4 = beta3 = Omega**2).
    Since W4 ~ 1/Cs and beta3 ~ 1/Ct, the capacitance factors are the old
    over the new coefficients.
    """
    if target == "internal":
        goal = 1.0
    elif target == "primary":
        if not d.Omega > 0:
            raise ParameterError("primary retune needs Omega > 0")
        goal = d.Omega ** 2
    else:
        raise ParameterError(f"unknown retune target {target!r}")
    if not (d.W4 > 0 and d.beta3 > 0):
        raise ParameterError("circuit frequencies must be positive")
    return Retune(d.replace(W4=goal, beta3=goal), d.W4 / goal, d.beta3 / goal)


def retune_physical(p: PhysicalParams, target: str) -> tuple[PhysicalParams, Retune]:
    r = retune_capacitance(normalize(p), target)
    return p.replace(Cs=p.Cs * r.cs_factor, Ct=p.Ct * r.ct_factor), r


@dataclass(frozen=True)
class SweepSpec:
    """One family of runs.

    ``vary`` names a normalized or a physical parameter (or a tuple of
    normalized names swept together, with tuple grid values). Physical
    sweeps need ``physical``; the capacitance retune is computed once on the
    base set and held fixed across the family.
    """

    base: DimlessParams
    vary: str | tuple
    values: tuple
    analysis: str
    physical: PhysicalParams | None = None
    target: str | None = None
    sigma1_range: tuple | None = None
    n_points: int | None = None
    cfg: IntegrationConfig = field(default_factory=IntegrationConfig)
    tol: float = DEFAULT_TOL
    variable: str = "Y"

    def __post_init__(self):
        if not self.values:
            raise ParameterError("sweep grid must be non-empty")
        if self.analysis not in ANALYSES:
            raise ParameterError(f"analysis must be one of {ANALYSES}")
        names = (self.vary,) if isinstance(self.vary, str) else tuple(self.vary)
        dim = DimlessParams.field_names()
        phys = tuple(f.name for f in fields(PhysicalParams))
        for n in names:
            if n not in dim and n not in phys:
                raise ParameterError(f"cannot resolve sweep parameter {n!r}")
            if n not in dim and self.physical is None:
                raise ParameterError(f"physical parameter {n!r} needs a physical base set")
        if len(names) > 1 and any(n not in dim for n in names):
            raise ParameterError("linked sweeps must use normalized parameters")

    @property
    def names(self) -> tuple:
        return (self.vary,) if isinstance(self.vary, str) else tuple(self.vary)


class SweepRecord(NamedTuple):
    value: object
    peak_p1: float = math.nan
    peak_p2: float = math.nan
    peak_p3: float = math.nan
    sigma1_at_peak: float = math.nan
    label: str = ""
    distinct: int = -1
    avg_power: float = math.nan
    error: str = ""


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    records: tuple

    def __len__(self):
        return len(self.records)

    def column(self, name):
        return [getattr(r, name) for r in self.records]


def _params_for(spec: SweepSpec, value) -> DimlessParams:
    names = spec.names
    values = value if isinstance(value, tuple) else (value,)
    if len(values) != len(names):
        raise ParameterError(f"value {value!r} does not match {names}")
    if names[0] in DimlessParams.field_names():
        d = spec.base.replace(**{n: float(v) for n, v in zip(names, values)})
        return retune_capacitance(d, spec.target).params if spec.target else d
    p = spec.physical
    if spec.target:
        p, _ = retune_physical(p, spec.target)
    return normalize(p.replace(**{names[0]: float(values[0])}))


def _run_record(spec: SweepSpec, value) -> SweepRecord:
    try:
        d = _params_for(spec, value)
        if spec.analysis in ("freq_internal", "freq_primary"):
            fn = freq_response_internal if spec.analysis == "freq_internal" else freq_response_primary
            kw = {}
            if spec.sigma1_range is not None:
                kw["sigma1_range"] = spec.sigma1_range
            if spec.n_points is not None:
                kw["n_points"] = spec.n_points
            curve = fn(d.E, d, **kw)
            pk = curve.peak("p3")
            if pk is None:
                return SweepRecord(value, error="no equilibria on grid")
            return SweepRecord(value, peak_p1=pk.p1, peak_p2=pk.p2, peak_p3=pk.p3,
                               sigma1_at_peak=pk.sigma1, label="stable" if pk.stable else "unstable")
        tr = integrate(d, spec.cfg)
        if spec.analysis == "power":
            return SweepRecord(value, avg_power=average_power(tr))
        rc = classify(poincare(tr, d, spec.variable), spec.tol)
        return SweepRecord(value, label=rc.label, distinct=rc.distinct_points,
                           avg_power=average_power(tr))
    except (DivergenceError, ParameterError, ValueError) as exc:
        return SweepRecord(value, error=f"{type(exc).__name__}: {exc}")


def family_sweep(spec: SweepSpec) -> SweepResult:
    """Run the chosen analysis once per grid value; failures are recorded, not raised."""
    return SweepResult(spec, tuple(_run_record(spec, v) for v in spec.values))


class ChaosRecord(NamedTuple):
    alpha2: float
    beta2: float
    response: ResponseClass | None
    spread: int
    error: str = ""


def _chaos_point(args):
    base, a2, b2, cfg, tol, variable = args
    d = base.replace(alpha2=a2, beta2=b2)
    try:
        tr = integrate(d, cfg)
    except DivergenceError as exc:
        return ChaosRecord(a2, b2, None, -1, str(exc))
    rc = classify(poincare(tr, d, variable), tol)
    return ChaosRecord(a2, b2, rc, rc.distinct_points)


def chaos_grid(base17: DimlessParams, pairs=CHAOS_PAIRS, cfg: IntegrationConfig = None,
               tol=DEFAULT_TOL, variable="Y", workers=None) -> list[ChaosRecord]:
    """Classify the steady response for each (alpha2, beta2) coupling pair."""
    pairs = [tuple(map(float, p)) for p in pairs]
    if not pairs:
        raise ParameterError("pairs must be non-empty")
    cfg = cfg or IntegrationConfig()
    jobs = [(base17, a2, b2, cfg, tol, variable) for a2, b2 in pairs]
    nw = worker_count(workers)
    if nw > 1:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            return list(pool.map(_chaos_point, jobs))
    return [_chaos_point(j) for j in jobs]


class PowerComparison(NamedTuple):
    internal_avg: float
    primary_avg: float
    ratio: float  # nan when the internal average is zero
    cs_factor_internal: float
    cs_factor_primary: float

    @property
    def defined(self) -> bool:
        return not math.isnan(self.ratio)


def power_compare(d: DimlessParams, cfg: IntegrationConfig = None, Rload=1.0) -> PowerComparison:
    """Average harvested power after retuning to each regime, and their ratio."""
    cfg = cfg or IntegrationConfig()
    out = {}
    for target in ("internal", "primary"):
        r = retune_capacitance(d, target)
        out[target] = (average_power(integrate(r.params, cfg), Rload), r.cs_factor)
    pi, pp = out["internal"][0], out["primary"][0]
    ratio = pp / pi if pi > 0 else math.nan
    return PowerComparison(pi, pp, ratio, out["internal"][1], out["primary"][1])
