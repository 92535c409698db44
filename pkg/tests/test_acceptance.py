"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (printed in the terminal summary) before
asserting, so the report lists every criterion even when some fail.
"""

import math
import time

import numpy as np
import pytest

from decayscales import cbf
from decayscales import harness as hs
from decayscales import opmodel as om
from decayscales import rates as ra
from decayscales import regvar as rv


def _report(log, number, title, checks, elapsed, limit, details=""):
    checks = dict(checks)
    checks["runtime"] = elapsed < limit
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {title} ({elapsed:.2f}s < {limit}s)"
    if failed:
        line += " failed: " + ", ".join(failed)
    if details:
        line += " | " + details
    log.append(line)
    print(line)
    assert ok, line


def _nonincreasing(x):
    return bool(np.all(np.diff(x) <= 1e-12))


def test_criterion_01_conjugate_identity(acceptance_log):
    s = np.geomspace(1e3, 1e12, 30)
    t0 = time.perf_counter()
    errs = {e: rv.conjugate_identity_error(rv.parse(e), s)
            for e in ("const(2)", "logpow(-2)", "logpow(1)", "logpow(3)", "explogpow(0.4)", "explogpow(0.6)")}
    el = time.perf_counter() - t0
    _report(acceptance_log, 1, "conjugate identity", {e: v <= 1e-9 for e, v in errs.items()}, el, 1.0,
            "max err %.2e" % max(errs.values()))


def test_criterion_02_closed_form_conjugates(acceptance_log):
    u = np.log(np.array([1e9, 1e10, 1e11, 1e12]))
    t0 = time.perf_counter()
    checks, info = {}, []
    for e in ("logpow(-2)", "logpow(1)", "logpow(3)", "explogpow(0.4)"):
        c = rv.conjugate(rv.parse(e))
        r = np.exp(c.log_at(u) - c.closed_log_at(u))
        checks[e + " in band"] = bool(0.8 <= r[-1] <= 1.25)
        checks[e + " trend"] = _nonincreasing(np.abs(r - 1))
        info.append(f"{e}={r[-1]:.4f}")
    el = time.perf_counter() - t0
    _report(acceptance_log, 2, "closed-form conjugates", checks, el, 1.0, " ".join(info))


def test_criterion_03_karamata_constants(acceptance_log):
    t0 = time.perf_counter()
    checks, info = {}, []
    for sigma in (0.25, 0.5, 0.75):
        g = rv.RegVarFn(1 - sigma, rv.Const(1.0))
        s = cbf.stieltjes_part(cbf.StieltjesTriple(0, 0, g), [1e4])[0].real
        beta_oracle = (1 - sigma) * math.pi / math.sin(math.pi * sigma)
        checks[f"const sigma={sigma}"] = abs(s * 1e4 ** sigma / beta_oracle - 1) <= 1e-6
        g = rv.RegVarFn(1 - sigma, rv.LogPow(1.0))
        lam = np.array([1e5, 1e6, 1e7, 1e8])
        s = cbf.stieltjes_part(cbf.StieltjesTriple(0, 0, g), lam).real
        r = s * lam ** sigma / (cbf.karamata_constant(sigma) * np.log(lam))
        checks[f"log sigma={sigma}"] = abs(r[-1] - 1) <= 0.1 and _nonincreasing(np.abs(r - 1))
        info.append(f"log sigma={sigma}: {r[-1]:.4f}")
    el = time.perf_counter() - t0
    _report(acceptance_log, 3, "karamata constants", checks, el, 5.0, " ".join(info))


def test_criterion_04_log_growth_example(acceptance_log):
    t0 = time.perf_counter()
    model = om.log_growth_curve()
    t = np.array([16.0, 36.0, 64.0, 100.0])
    v = om.semigroup_norm(model, t, om.InvA())
    rel = np.abs(v / np.exp(-2 * np.sqrt(t)) - 1)
    s = np.geomspace(2.0, 1e6, 20)
    M = om.resolvent_profile(model, "Mcap", s)
    in_band = (M >= np.log(s) * (1 - 1e-12)) & (M <= np.log(s + 1) * (1 + 1e-12))
    el = time.perf_counter() - t0
    _report(acceptance_log, 4, "log-growth example",
            {"decay": bool(np.all(rel <= 1e-3)), "profile": bool(in_band.all())}, el, 5.0,
            "max rel err %.2e" % rel.max())


def test_criterion_05_power_curves(acceptance_log):
    t0 = time.perf_counter()
    checks, info = {}, []
    for alpha in (0.5, 1.0, 2.0):
        curve = hs.run_decay_experiment(om.power_curve(alpha), om.InvA(), (1e2, 1e8), 8)
        env = ra.predict(ra.RateRegime("InfHilbertPoly", alpha=alpha))
        rep = hs.compare(curve, env, window=(1e2, 1e8), slope_expected=-1 / alpha, band_max=20)
        checks[f"alpha={alpha}"] = all(rep.passed.values())
        info.append(f"a={alpha}: slope {rep.slope_fit:.4f} band {rep.band_ratio:.3f}")
    el = time.perf_counter() - t0
    _report(acceptance_log, 5, "power-law curves at infinity", checks, el, 30.0, "; ".join(info))


def test_criterion_06_log_corrected_curve(acceptance_log):
    t0 = time.perf_counter()
    curve = hs.run_decay_experiment(om.log_corrected_curve(1.0, 2.0), om.InvA(), (1e3, 1e7), 8)
    rep = hs.compare(curve, ra.regvarinf_formulas(1.0, 2.0, "slower"), window=(1e3, 1e7), band_max=50)
    el = time.perf_counter() - t0
    _report(acceptance_log, 6, "log-corrected curve at infinity", {"band": rep.passed["band"]}, el, 10.0,
            f"band {rep.band_ratio:.3f}")


def test_criterion_07_singularity_at_zero(acceptance_log):
    t0 = time.perf_counter()
    checks, info = {}, []
    s = np.geomspace(1e-4, 1e-1, 13)
    for alpha in (1.0, 2.0):
        model = om.zero_curve(alpha)
        curve = hs.run_decay_experiment(model, om.BofA(), (1e-2, 1e12), 4)
        env = ra.predict(ra.RateRegime("ZeroHilbertPoly", alpha=alpha))
        rep = hs.compare(curve, env, window=(1e2, 1e6), slope_expected=-1 / alpha)
        checks[f"slope alpha={alpha}"] = rep.passed["slope"]
        bound = ra.decay_to_resolvent(curve.N, "zero", t_start=curve.t[0], t_budget=curve.t[-1])["zero"](s)
        mcap = om.resolvent_profile(model, "mcap", s)
        worst = float(np.max(mcap / bound))
        checks[f"majorant alpha={alpha}"] = worst <= 10.0
        info.append(f"a={alpha}: slope {rep.slope_fit:.4f} mcap/bound <= {worst:.3f}")
    el = time.perf_counter() - t0
    _report(acceptance_log, 7, "singularity at zero", checks, el, 20.0, "; ".join(info))


def test_criterion_08_both_singularities(acceptance_log):
    t0 = time.perf_counter()
    curve = hs.run_decay_experiment(om.both_curve(1.0, 2.0), om.AIA2(), (1e2, 1e6), 8)
    env = ra.predict(ra.RateRegime("BothHilbertPoly", alpha=1.0, beta=2.0))
    rep = hs.compare(curve, env, window=(1e2, 1e6), slope_expected=-0.5)
    el = time.perf_counter() - t0
    _report(acceptance_log, 8, "singularities at both ends", {"slope": rep.passed["slope"]}, el, 10.0,
            f"slope {rep.slope_fit:.4f}")


def test_criterion_09_inequality_audits(acceptance_log):
    t0 = time.perf_counter()
    moment = hs.inequality_audit("moment", trials=1000, n=64)
    transfer = hs.inequality_audit("transfer")
    bern = hs.inequality_audit("bernstein", trials=1000)
    inter = hs.inequality_audit("interpol2")
    el = time.perf_counter() - t0
    checks = {"moment": moment.passed and moment.constant == 1.0, "transfer": transfer.passed,
              "bernstein": bern.passed and bern.constant == hs.FROZEN_BERNSTEIN_C,
              "interpol2": inter.passed and inter.constant <= 1.0}
    _report(acceptance_log, 9, "inequality audits", checks, el, 10.0,
            f"violations {moment.violations}/{transfer.violations}/{bern.violations}/{inter.violations}, "
            f"interpol2 c={inter.constant:.3g}")


def test_criterion_10_normal_characterization(acceptance_log):
    t0 = time.perf_counter()
    res = {
        "s^0.5": ra.normal_characterization(lambda s: s ** 0.5),
        "s^2": ra.normal_characterization(lambda s: s ** 2),
        "e^s": ra.normal_characterization(lambda s: s, log_valued=True),
        "log s": ra.normal_characterization(np.log),
    }
    el = time.perf_counter() - t0
    checks = {k: v["holds"] for k, v in res.items() if k != "log s"}
    checks["log s rejected"] = not res["log s"]["holds"]
    _report(acceptance_log, 10, "normal characterization", checks, el, 5.0,
            "log s B trace " + " ".join("%.3g" % b for b in res["log s"]["B_trace"]))


def test_criterion_11_iterative_refinement(acceptance_log):
    t0 = time.perf_counter()
    beta = 0.55
    ref = ra.iterate_refinement(1.0, rv.ExpLogPow(beta))
    L = math.log(1e12)
    closed = math.exp(-(L ** beta + beta * L ** (2 * beta - 1))) / 1e12
    ratio = ref.envelope()(1e12) / closed
    const = ra.iterate_refinement(1.0, rv.Const(1.0))
    el = time.perf_counter() - t0
    checks = {"explog steps": ref.stabilized_at == 2, "explog ratio": 0.9 <= ratio <= 1.1,
              "const steps": const.stabilized_at == 0}
    _report(acceptance_log, 11, "iterative refinement", checks, el, 2.0,
            f"steps {ref.stabilized_at}, ratio {ratio:.4f}")


def test_criterion_12_sectoriality(acceptance_log):
    t0 = time.perf_counter()
    fns = {"sqrt/(1+mu)": lambda m: np.sqrt(m) / (1 + m), "sqrt(mu/(1+mu))": lambda m: np.sqrt(m / (1 + m))}
    checks, worst = {}, 0.0
    models = {}
    for model, _ in hs.transfer_catalogue():
        models.setdefault(getattr(model, "name", "diagonal"), model)
    for name, model in models.items():
        for label, g in fns.items():
            r = om.sectoriality_audit(model, g)
            checks[f"{name} {label}"] = r["passed"]
            worst = max(worst, r["growth"])
    el = time.perf_counter() - t0
    _report(acceptance_log, 12, "sectoriality", checks, el, 5.0, f"worst growth {worst:.2e}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
