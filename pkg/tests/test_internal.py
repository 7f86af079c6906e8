import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from maglev.errors import ChartError, ParameterError
from maglev.internal import (E2_of_p1, InternalDetuning, SlowStateInternal, freq_response_internal,
                             jacobian_internal, p2_of, p3_of_p1, slow_rhs_internal,
                             slow_rhs_internal_cartesian, solve_equilibria_internal,
                             to_cartesian_internal)
from maglev.model import BASELINE
from maglev.sweeps import retune_capacitance

TUNED = retune_capacitance(BASELINE, "internal").params
# light damping and a stiffer cubic give coexisting branches
BISTABLE = TUNED.replace(alpha3=0.1, alpha5=0.2, beta1=0.2, W3=4.0, E=1.0)


def det_at(d, sigma1=0.0):
    return InternalDetuning.from_params(d, sigma1=sigma1)


def random_states(n, seed):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        p = rng.uniform(0.05, 2.0, 3)
        g = rng.uniform(-math.pi, math.pi, 3)
        yield SlowStateInternal(p[0], g[0], p[1], g[1], p[2], g[2])


def implicit_relations(s, rates, d, det):
    """Residuals of the six implicit slow-flow relations, with p1^2 conj(p1) = p1^3."""
    p1, g1, p2, g2, p3, g3 = s
    dp1, dg1, dp2, dg2, dp3, dg3 = rates
    rw, rb = math.sqrt(d.W4), math.sqrt(d.beta3)
    s1, s2, s3 = det
    return np.array([
        2 * dp1 - (-d.alpha1 * rw * p2 * math.cos(g1) - d.alpha2 * rb * p3 * math.cos(g3)
                   - d.alpha3 * p1),
        2 * p1 * (dg1 + dg2) - (2 * p1 * (s1 + s2) + d.alpha1 * rw * p2 * math.sin(g1)
                               + d.alpha2 * rb * p3 * math.sin(g3) - 0.75 * d.W3 * p1 ** 3),
        2 * rw * dp2 - (d.alpha4 * p1 * math.cos(g1) - d.alpha5 * rw * p2 + d.E * math.sin(g2)),
        2 * p2 * rw * dg2 - (d.alpha4 * p1 * math.sin(g1) + 2 * rw * p2 * s1 + d.E * math.cos(g2)),
        2 * rb * dp3 - (-d.beta1 * rb * p3 + d.beta2 * p1 * math.cos(g3)),
        2 * p3 * rb * (dg3 - dg1 - dg2) - (-2 * p3 * rb * (s1 + s2 - s3)
                                           - d.beta2 * p1 * math.sin(g3)),
    ])


# detuning

def test_detuning_from_params():
    det = InternalDetuning.from_params(BASELINE)
    assert det.sigma1 == BASELINE.Omega - math.sqrt(BASELINE.W4)
    assert det.sigma2 == math.sqrt(BASELINE.W4) - 1
    assert det.sigma3 == math.sqrt(BASELINE.beta3) - 1
    assert InternalDetuning.from_params(TUNED, 0.2) == (0.2, 0.0, 0.0)


# slow flow

def test_pure_decay():
    d = TUNED.replace(alpha1=0.0, alpha2=0.0, alpha4=0.0, beta2=0.0, E=0.0)
    s = SlowStateInternal(0.4, 0.3, 0.5, -1.0, 0.6, 2.0)
    r = slow_rhs_internal(s, d, det_at(d))
    assert r[0] == pytest.approx(-d.alpha3 * 0.4 / 2)
    assert r[2] == pytest.approx(-d.alpha5 * 0.5 / 2)
    assert r[4] == pytest.approx(-d.beta1 * 0.6 / 2)


@pytest.mark.parametrize("d", [TUNED, BASELINE, BISTABLE])
def test_rates_satisfy_implicit_relations(d):
    for i, s in enumerate(random_states(50, 1)):
        det = det_at(d, sigma1=0.1 * (i % 7) - 0.3)
        res = implicit_relations(s, slow_rhs_internal(s, d, det), d, det)
        assert np.max(np.abs(res)) < 1e-12


def test_cartesian_and_polar_agree():
    # polar rates recovered from the complex-amplitude form
    for s in random_states(50, 2):
        det = det_at(BASELINE, 0.05)
        z = to_cartesian_internal(s)
        dz = slow_rhs_internal_cartesian(z, BASELINE, det)
        w = dz / z
        dp = np.real(w) * np.abs(z)
        g12 = -w[0].imag
        g2 = -w[1].imag
        g3 = w[2].imag + g12
        expect = [dp[0], g12 - g2, dp[1], g2, dp[2], g3]
        np.testing.assert_allclose(slow_rhs_internal(s, BASELINE, det), expect,
                                   rtol=1e-11, atol=1e-13)


def test_chart_floor():
    s = SlowStateInternal(0.0, 0.0, 0.1, 0.0, 0.1, 0.0)
    with pytest.raises(ChartError):
        slow_rhs_internal(s, TUNED, det_at(TUNED))
    with pytest.raises(ChartError):
        jacobian_internal(s, TUNED, det_at(TUNED))


# closed-form chain

def test_p3_zero_detuning():
    det = det_at(TUNED, 0.0)
    assert det.mismatch == 0
    assert p3_of_p1(0.3, TUNED, det) == pytest.approx(
        TUNED.beta2 * 0.3 / (TUNED.beta1 * math.sqrt(TUNED.beta3)), rel=1e-15)
    assert p3_of_p1(0.0, TUNED, det) == 0.0


def test_p3_undefined_without_damping_at_zero_detuning():
    with pytest.raises(ParameterError):
        p3_of_p1(0.3, TUNED.replace(beta1=0.0), det_at(TUNED, 0.0))


def test_p2_numerator_couplings_zero():
    d = TUNED.replace(alpha2=0.0, alpha3=0.0, W3=0.0)
    det = InternalDetuning(0.0, 0.0, 0.0)
    assert p2_of(0.4, 0.1, d, det) == 0.0


def test_p2_linear_without_cubic():
    d = TUNED.replace(W3=0.0, alpha3=0.0)
    det = det_at(d, 0.1)
    p1 = 0.3
    a = p2_of(p1, p3_of_p1(p1, d, det), d, det)
    b = p2_of(2 * p1, p3_of_p1(2 * p1, d, det), d, det)
    assert b == pytest.approx(2 * a, rel=1e-13)


def test_p2_rejects_zero_p1():
    with pytest.raises(ChartError):
        p2_of(0.0, 0.0, TUNED, det_at(TUNED))


def test_E2_vanishes_at_zero_amplitude():
    assert E2_of_p1(1e-8, TUNED, det_at(TUNED)) < 1e-14


def test_E2_scan_crosses_drive_level():
    p1 = np.linspace(1e-3, 3.0, 3000)
    f = E2_of_p1(p1, TUNED, det_at(TUNED)) - TUNED.E ** 2
    assert np.all(np.isfinite(f))
    assert np.count_nonzero(np.sign(f[:-1]) != np.sign(f[1:])) >= 1


# equilibria

def grid_equilibria(d, n_points=81, sigma1_range=(-0.4, 0.4)):
    for s1 in np.linspace(*sigma1_range, n_points):
        det = det_at(d, float(s1))
        for eq in solve_equilibria_internal(d.E, d, det):
            yield eq, det


@pytest.mark.parametrize("d", [TUNED, BISTABLE])
def test_equilibrium_residuals(d):
    count = 0
    for eq, det in grid_equilibria(d):
        assert np.max(np.abs(slow_rhs_internal(eq.state, d, det))) < 1e-10
        assert all(-math.pi < g <= math.pi for g in eq.state[1::2])
        assert eq.stable == bool(np.all(eq.eigenvalues.real < 0))
        count += 1
    assert count >= 81


def test_drive_relation_uses_p3_squared():
    # a p3-cubed variant of the drive relation would put E^2 off the rest points
    d, det = TUNED, det_at(TUNED, 0.05)
    eq = solve_equilibria_internal(d.E, d, det)[0].state
    p1, p3 = eq.p1, eq.p3
    good = E2_of_p1(p1, d, det)
    bad = good + 2 * d.alpha4 / (d.alpha1 * d.beta2) * d.alpha5 * d.alpha2 * d.beta1 * d.beta3 * (
        p3 ** 3 - p3 ** 2)
    assert good == pytest.approx(d.E ** 2, rel=1e-12)
    assert abs(bad - d.E ** 2) > 1e-4


def test_fine_scan_misses_nothing():
    for s1 in np.linspace(-0.4, 0.4, 41):
        det = det_at(TUNED, float(s1))
        fine = np.linspace(3.0 / 20000, 3.0, 20000)
        f = E2_of_p1(fine, TUNED, det) - TUNED.E ** 2
        n_fine = np.count_nonzero(np.sign(f[:-1]) != np.sign(f[1:]))
        assert len(solve_equilibria_internal(TUNED.E, TUNED, det)) == n_fine


def test_no_roots_is_empty_not_error():
    assert solve_equilibria_internal(1e-3, TUNED, det_at(TUNED), p1_max=1e-6, n_scan=10) == []


def test_rejects_nonpositive_drive():
    with pytest.raises(ParameterError):
        solve_equilibria_internal(0.0, TUNED)


# Jacobian

def fd_jacobian(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    cols = []
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = h
        cols.append((f(x + e) - f(x - e)) / (2 * h))
    return np.array(cols).T


@pytest.mark.parametrize("d", [TUNED, BASELINE])
def test_jacobian_matches_finite_differences(d):
    for i, s in enumerate(random_states(100, 3)):
        det = det_at(d, 0.3 * math.sin(i))
        J = jacobian_internal(s, d, det)
        Jfd = fd_jacobian(lambda x: slow_rhs_internal(x, d, det), s)
        np.testing.assert_allclose(J, Jfd, rtol=1e-5, atol=1e-8)


def test_jacobian_damping_only_diagonal():
    d = TUNED.replace(alpha1=0.0, alpha2=0.0, alpha4=0.0, beta2=0.0, E=0.0)
    J = jacobian_internal(SlowStateInternal(0.3, 0.1, 0.4, 0.2, 0.5, 0.3), d, det_at(d))
    assert J[0, 0] == -d.alpha3 / 2
    assert J[2, 2] == -d.alpha5 / 2
    assert J[4, 4] == -d.beta1 / 2


# relaxation oracle

def relax(z0, d, det, T):
    def f(_, x):
        dz = slow_rhs_internal_cartesian(x[:3] + 1j * x[3:], d, det)
        return np.concatenate([dz.real, dz.imag])
    x0 = np.concatenate([z0.real, z0.imag])
    sol = solve_ivp(f, (0, T), x0, method="DOP853", rtol=1e-11, atol=1e-13)
    return sol.y[:3, -1] + 1j * sol.y[3:, -1]


@pytest.mark.parametrize("d,n_points", [(TUNED, 81), (BISTABLE, 17)])
def test_stability_flags_predict_relaxation(d, n_points):
    rng = np.random.default_rng(5)
    seen = {True: 0, False: 0}
    for eq, det in grid_equilibria(d, n_points):
        z_eq = to_cartesian_internal(eq.state)
        kick = rng.normal(size=3) + 1j * rng.normal(size=3)
        z0 = z_eq + 1e-3 * kick / np.linalg.norm(kick)
        rate = np.max(eq.eigenvalues.real) if not eq.stable else -np.max(eq.eigenvalues.real)
        end = relax(z0, d, det, 16.0 / rate)
        dist = np.linalg.norm(end - z_eq)
        if eq.stable:
            assert dist < 1e-6
        else:
            assert dist > 1e-2
        seen[eq.stable] += 1
    if d is BISTABLE:
        assert seen[True] and seen[False]


def test_closed_form_matches_marched_equilibrium():
    det = det_at(TUNED, 0.0)
    z = relax(np.array([0.01, 0.01, 0.01], dtype=complex), TUNED, det, 400.0)
    p1, p2, p3 = np.abs(z)
    assert p3_of_p1(p1, TUNED, det) == pytest.approx(p3, abs=1e-6)
    assert p2_of(p1, p3, TUNED, det) == pytest.approx(p2, abs=1e-6)
    (eq,) = solve_equilibria_internal(TUNED.E, TUNED, det)
    assert eq.state.p1 == pytest.approx(p1, abs=1e-4)


def test_weak_drive_single_small_root():
    d = TUNED.replace(alpha3=1.0, alpha5=1.5, beta1=1.5)
    det = det_at(d, 0.0)
    eqs = solve_equilibria_internal(0.05, d, det)
    assert len(eqs) == 1
    z = relax(np.zeros(3, dtype=complex), d.replace(E=0.05), det, 200.0)
    assert eqs[0].state.p1 == pytest.approx(abs(z[0]), abs=1e-8)


# frequency response

def test_freq_response_shape():
    c = freq_response_internal(TUNED.E, TUNED)
    assert len(c.grid) == 81 and c.empty == ()
    s = c.column("sigma1")
    assert np.all(np.diff(s) >= 0)
    pk = c.peak("p3")
    assert abs(pk.sigma1) < 0.15
    p3 = c.column("p3")
    assert p3[0] < pk.p3 and p3[-1] < pk.p3


def test_linear_system_matches_direct_solve():
    # without the cubic term the complex slow flow is affine; solve it directly
    d = TUNED.replace(W3=0.0)
    c = freq_response_internal(d.E, d, n_points=21)
    for pt in c:
        det = det_at(d, pt.sigma1)
        b = slow_rhs_internal_cartesian(np.zeros(3, dtype=complex), d, det)
        M = np.column_stack([slow_rhs_internal_cartesian(np.eye(3)[k].astype(complex), d, det) - b
                             for k in range(3)])
        z = np.linalg.solve(M, -b)
        np.testing.assert_allclose([pt.p1, pt.p2, pt.p3], np.abs(z), rtol=1e-9)
    p3 = c.column("p3")
    k = int(np.argmax(p3))
    assert np.all(np.diff(p3[:k + 1]) > 0) and np.all(np.diff(p3[k:]) < 0)
