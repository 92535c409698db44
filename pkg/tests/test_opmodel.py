import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from decayscales import opmodel as om
from decayscales.errors import ConvergenceError, DomainError, PreconditionError, SpecError, TailError


def _brute_log_norm(a, u, log_r, t):
    """Dense-grid reference for ``sup_u log|r| - t a(u)``."""
    return float(np.max(log_r - t * a))


def _dense(lo, hi, n=2_000_001):
    return np.concatenate([[0.0], np.geomspace(lo, hi, n)])


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("t", [1.0, 100.0, 1e4])
def test_power_curve_norm_against_dense_grid(alpha, t):
    u = _dense(1e-6, 1e10)
    a = (1 + u) ** -alpha
    log_r = -0.5 * np.log(a ** 2 + u ** 2)
    want = _brute_log_norm(a, u, log_r, t)
    got = om.log_semigroup_norms(om.power_curve(alpha), [t], om.InvA())[0]
    assert got >= want - 1e-12
    assert got == pytest.approx(want, abs=1e-7)


def test_log_growth_norm_against_dense_grid():
    u = np.geomspace(2.0, 1e12, 2_000_001)
    a = 1 / np.log(u)
    log_r = -0.5 * np.log(a ** 2 + u ** 2)
    for t in (4.0, 25.0, 100.0):
        got = om.log_semigroup_norms(om.log_growth_curve(), [t], om.InvA())[0]
        assert got == pytest.approx(_brute_log_norm(a, u, log_r, t), abs=1e-7)


def test_diagonal_norms_are_exact():
    lam = np.array([1.0, 0.5 + 2j, 0.01 + 100j])
    model = om.Diagonal(lam)
    t = np.array([0.0, 1.0, 10.0, 1e3])
    want = np.max(np.exp(-t[:, None] * lam.real[None, :]) / np.abs(lam)[None, :], axis=1)
    np.testing.assert_allclose(om.semigroup_norm(model, t, om.InvA()), want, rtol=1e-14)
    res = om.cancel_sup(model, om.InvA())
    ratios = 1 / (np.abs(lam) * lam.real)
    assert res["value"] == pytest.approx(ratios.max(), rel=1e-14)
    assert res["witness"] == lam[np.argmax(ratios)]


def test_diagonal_validation():
    with pytest.raises(SpecError):
        om.Diagonal(np.array([-1.0]))
    with pytest.raises(SpecError):
        om.Diagonal(np.array([2j]))
    with pytest.raises(SpecError):
        om.Diagonal(np.array([]))
    m = om.Diagonal(np.array([0.0, 1.0]))
    assert m.contains_zero
    with pytest.raises(PreconditionError):
        om.semigroup_norm(m, 1.0, om.InvA())
    assert om.semigroup_norm(m, 1.0, om.BofA()) == pytest.approx(math.exp(-1) / 2)


def test_curve_validation():
    with pytest.raises(SpecError):
        om.Curve(om.PowerShape(1.0, -5.0))
    with pytest.raises(SpecError):
        om.Curve(om.ConstShape(1.0), s0=-1.0)
    assert om.zero_curve(1.0).contains_zero
    assert not om.power_curve(1.0).contains_zero
    with pytest.raises(PreconditionError):
        om.semigroup_norm(om.zero_curve(1.0), 1.0, om.InvA())


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([0.5, 1.0, 2.0]), st.floats(-1, 5), st.floats(0.01, 3))
def test_norms_nonincreasing_in_time(alpha, log_t, step):
    model = om.power_curve(alpha)
    t = 10.0 ** log_t
    a, b = om.log_semigroup_norms(model, [t, t * (1 + step)], om.InvA())
    assert b <= a + 1e-12


@settings(max_examples=15, deadline=None)
@given(st.sampled_from([0.5, 1.0, 2.0]), st.floats(-1, 6))
def test_time_weighted_norm_below_cancellation_bound(alpha, log_t):
    # t e^{-t a} <= 1/(e a) pointwise, so t ||T(t) r(A)|| <= sup |r|/Re / e
    model = om.power_curve(alpha)
    obs = om.Power(-alpha)
    cs = om.cancel_sup(model, obs)["value"]
    t = 10.0 ** log_t
    assert t * om.semigroup_norm(model, t, obs) <= cs / math.e * (1 + 1e-9)


def test_cancel_sup_against_dense_grid():
    u = _dense(1e-6, 1e8)
    a = (1 + u) ** -2.0
    vals = -1.0 * np.log(a ** 2 + u ** 2) - np.log(a)
    res = om.cancel_sup(om.power_curve(2.0), om.Power(-2.0))
    assert res["finite"]
    assert math.log(res["value"]) == pytest.approx(float(vals.max()), abs=1e-8)
    assert not om.cancel_sup(om.power_curve(2.0), om.Identity())["finite"]


def test_halfplane_sup_below_cancellation():
    model = om.power_curve(2.0)
    obs = om.Power(-2.0)
    hp = om.halfplane_sup(model, obs)
    cs = om.cancel_sup(model, obs)["value"]
    assert hp <= cs * (1 + 1e-9)
    assert hp >= 0.95 * cs


def test_tail_error_when_maximizer_escapes():
    with pytest.raises(TailError):
        om.semigroup_norm(om.log_growth_curve(), 1e6, om.InvA())


def test_resolvent_norm_diagonal_and_curve():
    lam = np.array([1.0, 0.5 + 2j])
    s = np.array([0.0, -2.0, 5.0])
    want = 1 / np.min(np.abs(lam[None, :] + 1j * s[:, None]), axis=1)
    np.testing.assert_allclose(om.resolvent_norm(om.Diagonal(lam), s), want, rtol=1e-14)
    model = om.power_curve(1.0)
    u = _dense(1e-6, 1e6)
    a = 1 / (1 + u)
    for target in (0.5, 10.0, 1e3):
        ref = float(np.max(-0.5 * np.log(a ** 2 + (u - target) ** 2)))
        got = math.log(om.resolvent_norm(model, -target))
        assert got == pytest.approx(ref, abs=1e-6)
        assert got >= ref - 1e-12


def test_profiles_monotone_and_dominate_pointwise():
    model = om.power_curve(2.0)
    s = np.geomspace(1e-2, 1e4, 25)
    M = om.resolvent_profile(model, "Mcap", s)
    assert np.all(np.diff(M) >= -1e-12 * M[:-1])
    # far out the nearest spectral point sits right next to the frequency
    big = s >= 100
    np.testing.assert_allclose(M[big], (1 + s[big]) ** 2, rtol=1e-3)
    for si, Mi in zip(s[::6], M[::6]):
        r = np.linspace(-si, si, 41)
        assert np.all(om.resolvent_norm(model, r) <= Mi * (1 + 1e-9))
    z = om.zero_curve(1.0)
    m = om.resolvent_profile(z, "mcap", s[s < 1])
    assert np.all(np.diff(m) <= 1e-12 * m[:-1])
    m01 = om.resolvent_profile(z, "mcap", 0.1)
    assert om.resolvent_profile(z, "mlog", 0.1) == pytest.approx(m01 * math.log((1 + m01) / 0.1), rel=1e-14)


def test_profile_domains():
    model = om.power_curve(1.0)
    with pytest.raises(DomainError):
        om.resolvent_profile(model, "mcap", [0.0])
    with pytest.raises(DomainError):
        om.resolvent_profile(model, "M2", [0.5])
    with pytest.raises(SpecError):
        om.resolvent_profile(model, "Q", [1.0])


def test_sectoriality():
    model = om.power_curve(2.0)
    res = om.sectoriality_audit(model, lambda m: m)
    assert res["passed"] and res["C"] <= 1 + 1e-9
    with pytest.raises(PreconditionError):
        om.sectoriality_audit(model, lambda m: -m)


def test_golden_max():
    x, fx = om.golden_max(lambda x: -(x - 0.3) ** 2, 0.0, 1.0)
    assert x == pytest.approx(0.3, abs=1e-6) and fx <= 0
    with pytest.raises(ConvergenceError):
        om.golden_max(lambda x: -(x - 0.3) ** 2, 0.0, 1.0, maxit=3)


def test_observable_symbols():
    lam = np.array([0.5 + 1j, 2.0 + 0j])
    np.testing.assert_allclose(om.AIA2().symbol(lam), lam / (1 + lam) ** 2)
    np.testing.assert_allclose(om.FracComb(1.0, 2.0).symbol(lam), lam / (1 + lam) ** 3)
    np.testing.assert_allclose(om.PowBofA(0.5).symbol(lam), (lam / (1 + lam)) ** 0.5)
    w = om.Wop(2.0, 0.5)
    # pure power with unit slow part: S_g(lam) = lam**(-1/2) * (pi/2)
    np.testing.assert_allclose(w.symbol(lam), lam ** -1.5 * lam ** -0.5 * math.pi / 2, rtol=1e-9)


def test_model_and_observable_round_trip():
    models = [om.power_curve(2.0), om.both_curve(1.0, 2.0), om.log_corrected_curve(1.0, 2.0), om.log_growth_curve(),
              om.Diagonal(np.array([1.0, 0.5 + 2j]))]
    for m in models:
        back = om.model_from_dict(om.model_to_dict(m))
        assert om.model_to_dict(back) == om.model_to_dict(m)
    for obs in (om.InvA(), om.FracComb(1.0, 2.0), om.Power(-0.5), om.Wop(2.0, 0.5)):
        assert om.observable_from_dict(om.observable_to_dict(obs)) == obs
    with pytest.raises(SpecError):
        om.model_from_dict({"variant": "mystery"})
    with pytest.raises(SpecError):
        om.observable_from_dict({"kind": "Power"})
