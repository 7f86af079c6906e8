import math
from dataclasses import replace

import numpy as np
import pytest

from maglev.errors import ParameterError
from maglev.integrator import IntegrationConfig
from maglev.model import BASELINE, REF17, fit_physical, normalize
from maglev.sweeps import (CHAOS_PAIRS, SweepSpec, chaos_grid, family_sweep, power_compare,
                           retune_capacitance, retune_physical)

SHORT = IntegrationConfig(transient_periods=100, record_periods=30)


# retuning

def test_internal_retune():
    r = retune_capacitance(BASELINE, "internal")
    assert r.params.W4 == 1.0 and r.params.beta3 == 1.0
    assert r.cs_factor == pytest.approx(2.2783, abs=1e-4)
    assert r.ct_factor == r.cs_factor


def test_primary_retune():
    r = retune_capacitance(BASELINE, "primary")
    assert r.params.W4 == BASELINE.Omega ** 2 == r.params.beta3
    assert r.cs_factor == pytest.approx(0.18598, abs=1e-5)


def test_retune_leaves_other_parameters():
    r = retune_capacitance(BASELINE, "primary")
    for k in BASELINE.field_names():
        if k not in ("W4", "beta3"):
            assert getattr(r.params, k) == getattr(BASELINE, k)


def test_retune_idempotent():
    for target in ("internal", "primary"):
        once = retune_capacitance(BASELINE, target)
        twice = retune_capacitance(once.params, target)
        assert twice.params == once.params
        assert twice.cs_factor == 1.0 and twice.ct_factor == 1.0


def test_retune_rejects_unknown_target():
    with pytest.raises(ParameterError):
        retune_capacitance(BASELINE, "secondary")


def test_physical_retune_scales_capacitors():
    p = fit_physical(BASELINE)
    q, r = retune_physical(p, "internal")
    assert q.Cs == p.Cs * r.cs_factor and q.Ct == p.Ct * r.ct_factor
    d = normalize(q)
    assert d.W4 == pytest.approx(1.0, rel=1e-12)
    assert d.beta3 == pytest.approx(1.0, rel=1e-12)


# family sweeps

def test_family_carries_values_verbatim():
    values = (0.1, 0.25, 0.4)
    res = family_sweep(SweepSpec(BASELINE, "E", values, "freq_primary", target="primary",
                                 n_points=21))
    assert len(res) == 3
    assert tuple(res.column("value")) == values


def test_sweep_spec_validation():
    with pytest.raises(ParameterError):
        SweepSpec(BASELINE, "E", (), "freq_primary")
    with pytest.raises(ParameterError):
        SweepSpec(BASELINE, "E", (1.0,), "bogus")
    with pytest.raises(ParameterError):
        SweepSpec(BASELINE, "nope", (1.0,), "power")
    with pytest.raises(ParameterError):
        SweepSpec(BASELINE, "m", (1.0,), "power")


def test_magnet_damping_has_no_effect_on_primary_peak():
    res = family_sweep(SweepSpec(BASELINE, "alpha3", (0.01, 0.1, 0.5, 1.0), "freq_primary",
                                 target="primary"))
    peaks = res.column("peak_p3")
    assert len(set(peaks)) == 1
    assert peaks[0] == pytest.approx(0.010445470677773253, rel=1e-12)


MASSES = (0.06, 0.08, 0.1, 0.12, 0.14)


def mass_sweep(analysis, target):
    return family_sweep(SweepSpec(BASELINE, "m", MASSES, analysis,
                                  physical=fit_physical(BASELINE), target=target))


def test_heavier_magnet_raises_internal_peak():
    peaks = mass_sweep("freq_internal", "internal").column("peak_p3")
    assert all(not math.isnan(p) for p in peaks)
    assert peaks[-1] > peaks[0]


def test_heavier_magnet_lowers_primary_harvest():
    res = mass_sweep("freq_primary", "primary")
    p3, p2 = res.column("peak_p3"), res.column("peak_p2")
    assert np.all(np.diff(p3) < 0)
    assert max(p2) / min(p2) - 1 < 0.05


def test_failures_are_recorded():
    res = family_sweep(SweepSpec(BASELINE, "E", (0.5, 1e9), "simulate",
                                 cfg=IntegrationConfig(transient_periods=1, record_periods=1)))
    assert res.records[0].error == ""
    assert res.records[1].error.startswith("DivergenceError")


def test_linked_sweep():
    res = family_sweep(SweepSpec(REF17, ("alpha2", "beta2"), ((0.2, 0.15),), "simulate",
                                 cfg=SHORT))
    assert res.records[0].label
    assert res.records[0].value == (0.2, 0.15)


# power comparison

def test_zero_drive_ratio_undefined():
    pc = power_compare(BASELINE.replace(E=0.0), SHORT)
    assert pc.internal_avg == 0.0 and pc.primary_avg == 0.0
    assert math.isnan(pc.ratio) and not pc.defined


def test_ratio_independent_of_load():
    a = power_compare(BASELINE, SHORT, Rload=1.0)
    b = power_compare(BASELINE, SHORT, Rload=7.5)
    assert b.ratio == pytest.approx(a.ratio, rel=1e-12)
    assert b.primary_avg == pytest.approx(7.5 * a.primary_avg, rel=1e-12)


# chaos grid

def test_chaos_grid_records():
    recs = chaos_grid(REF17, cfg=SHORT, workers=1)
    assert [(r.alpha2, r.beta2) for r in recs] == [tuple(p) for p in CHAOS_PAIRS]
    for r in recs:
        assert r.error == ""
        assert r.spread == r.response.distinct_points


def test_chaos_grid_parallel_matches_serial():
    pairs = CHAOS_PAIRS[:2]
    a = chaos_grid(REF17, pairs, SHORT, workers=1)
    b = chaos_grid(REF17, pairs, SHORT, workers=2)
    assert [r.spread for r in a] == [r.spread for r in b]


def test_chaos_grid_records_divergence():
    cfg = replace(SHORT, initial_state=(3.0, 0, 0, 0, 0, 0))
    (rec,) = chaos_grid(REF17.replace(W3=-1.0), [(0.0, 0.0)], cfg, workers=1)
    assert rec.response is None and rec.spread == -1 and rec.error


def test_chaos_grid_rejects_empty():
    with pytest.raises(ParameterError):
        chaos_grid(REF17, [])
