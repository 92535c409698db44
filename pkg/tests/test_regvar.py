import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from decayscales import regvar as rv
from decayscales.errors import DomainError, PreconditionError, SpecError

mpmath.mp.dps = 40


def _oracle_log_conj(v, log_l):
    """High-precision root of ``x + log l(x) = v`` in ``x = log s``; returns ``-log l(x)``."""
    x = mpmath.findroot(lambda x: x + log_l(x) - v, v, tol=mpmath.mpf(10) ** -30)
    return float(-log_l(x))


@pytest.mark.parametrize("beta", [-2.0, 1.0, 3.0])
def test_logpow_conjugate_matches_high_precision_root(beta):
    conj = rv.conjugate(rv.LogPow(beta))
    v = np.log(np.array([1e4, 1e8, 1e30, 1e200]))
    got = conj.log_at(v)
    want = [_oracle_log_conj(mpmath.mpf(x), lambda y: beta * mpmath.log(y)) for x in v]
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("beta", [0.3, 0.6])
def test_explogpow_conjugate_matches_high_precision_root(beta):
    conj = rv.conjugate(rv.ExpLogPow(beta))
    v = np.log(np.array([1e5, 1e12, 1e100]))
    got = conj.log_at(v)
    want = [_oracle_log_conj(mpmath.mpf(x), lambda y: y ** beta) for x in v]
    np.testing.assert_allclose(got, want, rtol=1e-10)


def test_const_conjugate_is_reciprocal():
    conj = rv.conjugate(rv.Const(2.0))
    np.testing.assert_allclose(conj.evaluate(np.array([1e3, 1e9])), 0.5)
    assert rv.conjugate_identity_error(rv.Const(2.0), [1e3, 1e6]) < 1e-14


def test_log_space_survives_beyond_double_range():
    u = np.array([1e5, 1e300])
    np.testing.assert_allclose(rv.LogPow(2.0).log_at(u), 2 * np.log(u))
    with pytest.raises(rv.OverflowError):
        rv.evaluate(rv.RealPower(rv.ExpLogPow(0.9), 3.0), np.array([1e300]))


def test_evaluate_plain_values():
    s = np.array([10.0, 1e6])
    np.testing.assert_allclose(rv.evaluate(rv.LogPow(2.0), s), np.log(s) ** 2)
    s = np.array([100.0, 1e6])
    np.testing.assert_allclose(rv.evaluate(rv.IterLog(2, 1.0), s), np.log(np.log(s)))
    with pytest.raises(DomainError):
        rv.evaluate(rv.IterLog(2, 1.0), np.array([10.0]))


@pytest.mark.parametrize("text", ["logpow(1.5)", "explogpow(0.4)", "iterlog(2, 3)", "logpow(-1)*iterlog(2, 2)",
                                  "pow(logpow(2), 0.5)", "argpow(explogpow(0.5), 2)"])
def test_index_function_matches_central_difference(text):
    expr = rv.parse(text)
    u = np.array([20.0, 80.0, 400.0])
    h = 1e-5
    fd = (expr.log_at(u + h) - expr.log_at(u - h)) / (2 * h)
    np.testing.assert_allclose(rv.index_function(expr, u), fd, rtol=1e-6, atol=1e-12)


def test_log_increment_accurate_for_tiny_steps():
    expr = rv.LogPow(1.0)
    u = np.array([1e10])
    h = np.array([1e-3])
    # log l(s e^h) - log l(s) with l = log and u = log s = 1e10
    exact = float(mpmath.log((mpmath.mpf("1e10") + mpmath.mpf("1e-3")) / mpmath.mpf("1e10")))
    np.testing.assert_allclose(rv.log_increment(expr, u, h), exact, rtol=1e-8)


exprs = st.recursive(
    st.one_of(
        st.floats(0.5, 4).map(lambda c: rv.Const(round(c, 3))),
        st.floats(-3, 3).map(lambda b: rv.LogPow(round(b, 3))),
        st.floats(0.05, 0.95).map(lambda b: rv.ExpLogPow(round(b, 3))),
        st.tuples(st.integers(2, 3), st.floats(-2, 2)).map(lambda kb: rv.IterLog(kb[0], round(kb[1], 3))),
    ),
    lambda inner: st.one_of(
        st.tuples(inner, inner).map(lambda ab: rv._flatten(rv.Product(ab))),
        st.tuples(inner, st.floats(-2, 2)).map(lambda xa: rv.RealPower(xa[0], round(xa[1], 3))),
    ),
    max_leaves=4,
)


@settings(max_examples=60, deadline=None)
@given(exprs)
def test_text_and_dict_round_trip(expr):
    assert rv.parse(rv.to_text(expr)) == expr
    assert rv.from_dict(rv.to_dict(expr)) == expr


@pytest.mark.parametrize("bad", ["", "logpow(", "foo(1)", "logpow(1, 2)", "iterlog(1.5, 1)", "logpow(x)",
                                 "explogpow(1.5)"])
def test_malformed_text_raises(bad):
    with pytest.raises((SpecError, DomainError)):
        rv.parse(bad)


def test_malformed_dict_raises():
    with pytest.raises(SpecError):
        rv.from_dict({"node": "logpow"})
    with pytest.raises(SpecError):
        rv.from_dict({"node": "mystery"})


def test_grids_and_block_maxima():
    g = rv.decade_grid(1e3, 1e6, 4)
    assert g.log_s.size == 13
    m = rv.block_maxima(g, np.abs(np.exp(-g.log_s)))
    assert m.size == 3
    assert np.all(np.diff(m) < 0)


@given(st.lists(st.floats(0, 1), min_size=3, max_size=10))
def test_tends_to_zero_needs_small_nonincreasing_tail(maxima):
    m = np.array(maxima)
    ok = rv.tends_to_zero(m, 0.2)
    tail = m[-3:]
    # roundoff-sized increases are tolerated
    steady = np.all(np.diff(tail) <= 1e-12 * np.maximum(1.0, tail[:-1]))
    assert ok == bool(m[-1] < 0.2 and steady)


def test_slow_variation_audit_separates_slow_from_regular():
    assert rv.slow_variation_audit(rv.LogPow(2.0)).passed
    assert rv.slow_variation_audit(rv.ExpLogPow(0.5)).passed
    assert not rv.slow_variation_audit(rv.ExpLogPow.unchecked(1.0)).passed


def test_db_symmetry():
    assert rv.db_symmetry_audit(rv.LogPow(3.0)).passed
    assert not rv.db_symmetry_audit(rv.ExpLogPow(0.8)).passed


def test_potter_constants_bound_all_pairs():
    res = rv.potter_bounds_audit(rv.LogPow(2.0), 0.1)
    assert res.passed
    c, C = res.details["c"], res.details["C"]
    u = rv.decade_grid(1e3, 1e12, 4).log_s
    lv = 2 * np.log(u)
    for i in range(u.size):
        for j in range(i, u.size):
            r = math.exp(lv[j] - lv[i])
            d = math.exp(u[j] - u[i])
            assert c * d ** -0.1 <= r * (1 + 1e-12)
            assert r <= C * d ** 0.1 * (1 + 1e-12)
    with pytest.raises(PreconditionError):
        rv.potter_bounds_audit(rv.LogPow(1.0), 0.0)


def test_asymptotic_inverse_is_exact_inverse():
    f = rv.RegVarFn(2.0, rv.LogPow(1.0))
    inv = rv.asymptotic_inverse(f)
    v = np.log(np.array([1e6, 1e20, 1e100]))
    back = f.log_at(inv.exact(v))
    np.testing.assert_allclose(back, v, rtol=1e-12)


def test_log_perturbation_preconditions():
    f = rv.RegVarFn(2.0, rv.LogPow(1.0))
    with pytest.raises(PreconditionError):
        rv.log_perturbation_audit(f, 0.2)
    res = rv.log_perturbation_audit(f, 0.5)
    assert res.passed
    with pytest.raises(PreconditionError):
        rv.log_perturbation_audit(rv.RegVarFn(2.0, rv.LogPow(-1.0)), 0.5)


def test_closed_ratio_audit_requires_catalogued_form():
    assert rv.conjugate_ratio_audit(rv.LogPow(1.0)).passed
    with pytest.raises(PreconditionError):
        rv.conjugate_ratio_audit(rv.parse("iterlog(3, 1)*explogpow(0.3)*logpow(2)"))


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(3.5, 11.5))
def test_identity_holds_for_any_logpow(beta, exponent):
    assert rv.conjugate_identity_error(rv.LogPow(beta), [10 ** exponent]) < 1e-9
