"""Decay-rate envelopes predicted from resolvent growth, and the inverse direction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import regvar as rv
from .errors import (DomainError, LimitError, MonotonicityError, NonConvergence, RegimeParameterError)

REGIMES = (
    "InfUpperBanach", "InfLower", "InfHilbertPoly", "InfHilbertRegVarSlower", "InfHilbertRegVarFaster",
    "ZeroLower", "ZeroUpperGeneral", "ZeroHilbertPoly", "ZeroHilbertRegVarSlower",
    "BothLower", "BothMartinez", "BothHilbertPoly",
)

_NEEDS = {
    "InfUpperBanach": ("M",), "InfLower": ("M",), "InfHilbertPoly": ("alpha",),
    "InfHilbertRegVarSlower": ("alpha",), "InfHilbertRegVarFaster": ("alpha",),
    "ZeroLower": ("m",), "ZeroUpperGeneral": ("m",), "ZeroHilbertPoly": ("alpha",),
    "ZeroHilbertRegVarSlower": ("alpha",), "BothLower": ("M", "m"), "BothMartinez": ("M", "m"),
    "BothHilbertPoly": ("alpha", "beta"),
}


@dataclass(frozen=True)
class RateRegime:
    """Which rate regime to apply, with its parameters and the constants it leaves open."""

    regime: str
    alpha: float | None = None
    beta: float | None = None
    eps: float = 0.1
    slow: rv.SlowExpr = rv.Const(1.0)
    c: float = 1.0
    c_prime: float = 1.0
    C: float = 1.0
    C_prime: float = 1.0

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise RegimeParameterError(f"unknown regime {self.regime!r}")
        for name in ("c", "c_prime", "C", "C_prime"):
            if not getattr(self, name) > 0:
                raise RegimeParameterError(f"constant {name} must be positive")
        needs = _NEEDS[self.regime]
        if "alpha" in needs and not (self.alpha is not None and self.alpha > 0):
            raise RegimeParameterError(f"{self.regime} needs alpha > 0")
        if "beta" in needs and not (self.beta is not None and self.beta > 0):
            raise RegimeParameterError(f"{self.regime} needs beta > 0")
        if self.regime in ("InfHilbertRegVarFaster", "ZeroUpperGeneral") and not 0 < self.eps < 1:
            raise RegimeParameterError("eps must lie in (0, 1); eps = 0 is not covered")
        if self.regime == "ZeroHilbertRegVarSlower" and not self.alpha > 1:
            raise RegimeParameterError("the zero-end regularly varying regime needs alpha > 1")
        if self.regime in ("InfHilbertRegVarSlower", "ZeroHilbertRegVarSlower"):
            if rv.eventual_direction(self.slow) != 1:
                raise RegimeParameterError("slow part must be increasing in this regime")
        if self.regime == "InfHilbertRegVarFaster":
            if isinstance(self.slow, rv.Const) or rv.eventual_direction(self.slow) != -1:
                raise RegimeParameterError("slow part must be decreasing in this regime")

    @property
    def gamma(self):
        if self.regime == "BothHilbertPoly":
            return max(self.alpha, self.beta)
        return None


@dataclass(frozen=True)
class RateEnvelope:
    """Predicted decay bound ``t -> value``, evaluated in log space."""

    log_fn: Callable
    regime: str
    formula: str
    validity_start: float = 0.0

    def log_at(self, log_t):
        log_t = np.asarray(log_t, float)
        out = np.asarray(self.log_fn(log_t), float)
        start = math.log(self.validity_start) if self.validity_start > 0 else -np.inf
        return np.where(log_t >= start, out, np.nan)

    def __call__(self, t):
        t = np.asarray(t, float)
        with np.errstate(divide="ignore"):
            out = np.exp(self.log_at(np.log(t)))
        return float(out) if out.ndim == 0 else out

    def audit(self, t_grid=None) -> bool:
        """Positive and nonincreasing on the grid (defaults to four decades past the start)."""
        if t_grid is None:
            start = max(self.validity_start, 1.0)
            t_grid = np.geomspace(start * 10, start * 1e5, 65)
        v = self.log_at(np.log(np.asarray(t_grid, float)))
        return bool(np.all(np.isfinite(v)) and np.all(np.diff(v) <= 1e-12 * np.maximum(1.0, np.abs(v[:-1]))))


# ---------------------------------------------------------------- profiles and their inverses

class Profile:
    """Monotone resolvent profile handled through ``log_s -> log value``."""

    def __init__(self, log_fn, log_lo, log_hi, increasing):
        self.log_fn, self.log_lo, self.log_hi, self.increasing = log_fn, log_lo, log_hi, increasing

    @classmethod
    def wrap(cls, obj, end="infinity", log_valued=False, s_range=None):
        if isinstance(obj, Profile):
            return obj
        if end == "infinity":
            lo, hi = (math.log(s_range[0]), math.log(s_range[1])) if s_range else (0.0, 690.0)
        else:
            lo, hi = (math.log(s_range[0]), math.log(s_range[1])) if s_range else (-690.0, 0.0)
        if isinstance(obj, rv.RegVarFn):
            lo = max(lo, obj.slow.log_start)
            return cls(obj.log_at, lo, hi, end == "infinity")

        def log_fn(x):
            x = np.asarray(x, float)
            with np.errstate(over="ignore", divide="ignore"):
                v = np.asarray(obj(np.exp(x)), float)
                return v if log_valued else np.log(v)
        return cls(log_fn, lo, hi, end == "infinity")

    def log_value(self, log_s):
        return self.log_fn(log_s)

    def check(self, n=257):
        x = np.linspace(self.log_lo, self.log_hi, n)
        v = self.log_fn(x)
        with np.errstate(invalid="ignore"):     # inf - inf once the profile overflows
            d = np.diff(v) if self.increasing else -np.diff(v)
        if np.any(d < -1e-12 * np.maximum(1.0, np.abs(v[:-1]))):
            raise MonotonicityError("profile is not monotone on its sampled range")

    def log_inverse(self, log_y):
        """Right inverse in log space; nan where the level is not attained on the range."""
        log_y = np.atleast_1d(np.asarray(log_y, float))
        sign = 1.0 if self.increasing else -1.0
        f = lambda x: sign * self.log_fn(x)
        target = sign * log_y
        a = np.full_like(log_y, self.log_lo)
        b = np.full_like(log_y, self.log_hi)
        fa, fb = f(a[:1])[0], f(b[:1])[0]
        ok = (target >= fa) & (target <= fb)
        for _ in range(200):
            mid = 0.5 * (a + b)
            up = f(mid) >= target
            b = np.where(up, mid, b)
            a = np.where(up, a, mid)
            if np.all(b - a <= 1e-13 * np.maximum(1.0, np.abs(b))):
                break
        return np.where(ok, b, np.nan)


def _log_Mlog(prof: Profile):
    def f(x):
        lm = prof.log_fn(x)
        return lm + np.log(np.logaddexp(0.0, lm) + np.logaddexp(0.0, x))
    return Profile(f, prof.log_lo, prof.log_hi, True)


def _log_mlog(prof: Profile):
    def f(x):
        lm = prof.log_fn(x)
        with np.errstate(invalid="ignore", divide="ignore"):
            return lm + np.log(np.logaddexp(0.0, lm) - x)
    return Profile(f, prof.log_lo, prof.log_hi, False)


def _start_from(level_log, scale):
    """Smallest t with ``log(scale*t) >= level_log``."""
    return math.exp(level_log) / scale if level_log < 700 else math.inf


def _inf_end_inverse(prof, log_c):
    def g(log_t):
        return prof.log_inverse(log_t + log_c)
    start = _start_from(float(prof.log_fn(np.array([prof.log_lo]))[0]), math.exp(log_c))
    return g, start


def _zero_end_inverse(prof, log_c):
    def g(log_t):
        return prof.log_inverse(log_t + log_c)
    start = _start_from(float(prof.log_fn(np.array([prof.log_hi]))[0]), math.exp(log_c))
    return g, start


def predict(regime: RateRegime, M=None, m=None, log_valued=False, s_range_inf=None, s_range_zero=None) -> RateEnvelope:
    """Envelope for ``||T(t) A^{-1}||`` (infinity), ``||T(t) A(I+A)^{-1}||`` (zero) or
    ``||T(t) A(I+A)^{-2}||`` (both ends) under the regime's hypotheses.

    ``M``/``m`` are profiles: callables (``log_valued`` if they return logs) or
    ``RegVarFn`` instances.
    """
    r = regime
    name = r.regime
    needs = _NEEDS[name]
    if "M" in needs and M is None or "m" in needs and m is None:
        raise RegimeParameterError(f"{name} needs the profiles {needs}")
    P = Profile.wrap(M, "infinity", log_valued, s_range_inf) if M is not None else None
    p = Profile.wrap(m, "zero", log_valued, s_range_zero) if m is not None else None
    for prof in (P, p):
        if prof is not None:
            prof.check()
    lc, lcp, lC, lCp = (math.log(v) for v in (r.c, r.c_prime, r.C, r.C_prime))
    a = r.alpha

    if name == "InfUpperBanach":
        inv, start = _inf_end_inverse(_log_Mlog(P), lc)
        return RateEnvelope(lambda x: -inv(x), name, "1/M_log^{-1}(c t)", start)
    if name == "InfLower":
        inv, start = _inf_end_inverse(P, lC)
        return RateEnvelope(lambda x: lc - inv(x), name, "c/M^{-1}(C t)", start)
    if name in ("InfHilbertPoly", "ZeroHilbertPoly"):
        return RateEnvelope(lambda x: lC - np.asarray(x) / a, name, "C t^(-1/alpha)", 0.0)
    if name == "BothHilbertPoly":
        g = r.gamma
        return RateEnvelope(lambda x: lC - np.asarray(x) / g, name, "C t^(-1/gamma), gamma=max(alpha,beta)", 0.0)
    if name in ("InfHilbertRegVarSlower", "ZeroHilbertRegVarSlower"):
        slow = r.slow
        start = math.exp(a * slow.log_start)
        return RateEnvelope(lambda x: lC - (np.asarray(x) + slow.log_at(np.asarray(x) / a)) / a,
                            name, "C (t l(t^(1/alpha)))^(-1/alpha)", start)
    if name == "InfHilbertRegVarFaster":
        k = rv.RealPower(rv.ArgPower(r.slow, 1.0 / a), -1.0)
        conj = rv.conjugate(k)
        eps = r.eps
        start = max(math.e, conj.domain_start)

        def f(x):
            x = np.asarray(x, float)
            return lC + eps * np.log(x) - (x + conj.log_at(x)) / a
        return RateEnvelope(f, name, "C (log t)^eps / (t k#(t))^(1/alpha), k(t)=1/l(t^(1/alpha))", start)
    if name == "ZeroLower":
        inv, start = _zero_end_inverse(p, lcp)
        return RateEnvelope(lambda x: lc + inv(x), name, "c m^{-1}(c' t)", start)
    if name == "ZeroUpperGeneral":
        inv, start = _zero_end_inverse(p, 0.0)
        e = r.eps
        return RateEnvelope(lambda x: lC + inv((1.0 - e) * np.asarray(x)), name, "C m^{-1}(t^(1-eps))",
                            start ** (1.0 / (1.0 - e)) if np.isfinite(start) else start)
    if name in ("BothLower", "BothMartinez"):
        if name == "BothLower":
            zi, zs = _zero_end_inverse(p, lcp)
            ii, is_ = _inf_end_inverse(P, lCp)
            formula = "c max(m^{-1}(c' t), 1/M^{-1}(C' t))"
        else:
            zi, zs = _zero_end_inverse(_log_mlog(p), lcp)
            ii, is_ = _inf_end_inverse(_log_Mlog(P), lCp)
            formula = "C max(m_log^{-1}(c' t), 1/M_log^{-1}(C' t))"
        lead = lc if name == "BothLower" else lC
        return RateEnvelope(lambda x: lead + np.fmax(zi(x), -ii(x)), name, formula, max(zs, is_))
    raise RegimeParameterError(f"no envelope for {name}")  # pragma: no cover


def regvarinf_formulas(alpha, beta, side="slower", eps=None) -> RateEnvelope:
    """Log-corrected power envelopes for ``M(s) ~ s**alpha (log s)**(-beta)`` (slower)
    or ``(log s)**beta`` (faster)."""
    if not alpha > 0 or not beta >= 0:
        raise RegimeParameterError("need alpha > 0 and beta >= 0")
    if side == "slower":
        return RateEnvelope(lambda x: -np.asarray(x) / alpha - beta / alpha * np.log(x), "log-corrected-slower",
                            "t^(-1/alpha) (log t)^(-beta/alpha)", math.e)
    if side == "faster":
        if eps is None or not eps > 0:
            raise RegimeParameterError("the faster side needs eps > 0")
        return RateEnvelope(lambda x: -np.asarray(x) / alpha + (eps + beta / alpha) * np.log(x),
                            "log-corrected-faster", "t^(-1/alpha) (log t)^(eps+beta/alpha)", math.e)
    raise RegimeParameterError(f"side must be 'slower' or 'faster', got {side!r}")


# ---------------------------------------------------------------- iterative refinement

@dataclass
class Refinement:
    alpha: float
    slow: rv.SlowExpr
    iterates: list          # log m_n on the grid
    traces: list            # per-step block maxima of |m_{n+1}/m_n - 1|
    stabilized_at: int
    grid: rv.Grid
    log_m: Callable = field(repr=False, default=None)

    def envelope(self, n=None) -> RateEnvelope:
        n = self.stabilized_at if n is None else n
        a = self.alpha
        log_m = self._log_m_fn(n)
        return RateEnvelope(lambda x: -(np.asarray(x, float) + log_m(np.asarray(x, float))) / a,
                            "iterate", f"(t m_{n}(t))^(-1/alpha)", 0.0)

    def _log_m_fn(self, n):
        return lambda u: self.log_m(u, n)


def iterate_refinement(alpha, slow: rv.SlowExpr, m0="one", max_iter=12, tol=0.02, grid: rv.Grid | None = None):
    """Repeatedly improve ``m`` via ``m_{n+1}(t) = l(t^{1/alpha} m_n(t)^{1/alpha})`` until it settles.

    ``m0`` is "one", "altstart" (``k#(t)/log t`` with ``k(s) = 1/l(s^{1/alpha})``) or a callable
    returning ``log m0`` as a function of ``log t``.
    """
    if not alpha > 0:
        raise RegimeParameterError("alpha must be positive")
    if rv.eventual_direction(slow) != 1:
        raise RegimeParameterError("refinement needs an increasing slow part")
    grid = grid or rv.deep_grid(math.log(1e3), 1e6)
    if m0 == "one":
        base = lambda u: np.zeros_like(np.asarray(u, float))
    elif m0 == "altstart":
        conj = rv.conjugate(rv.RealPower(rv.ArgPower(slow, 1.0 / alpha), -1.0))
        base = lambda u: conj.log_at(u) - np.log(u)
    elif callable(m0):
        base = m0
    else:
        raise RegimeParameterError(f"unknown starting point {m0!r}")

    def log_m(u, n):
        u = np.asarray(u, float)
        cur = base(u)
        for _ in range(n):
            cur = slow.log_at((u + cur) / alpha)
        return cur

    u = grid.log_s
    iterates = [log_m(u, 0)]
    traces = []
    for n in range(max_iter):
        nxt = slow.log_at((u + iterates[-1]) / alpha)
        with np.errstate(over="ignore"):
            dev = np.abs(np.expm1(nxt - iterates[-1]))
        maxima = rv.block_maxima(grid, dev)
        traces.append(maxima)
        if rv.tends_to_zero(maxima, tol):
            return Refinement(alpha, slow, iterates, traces, n, grid, log_m)
        iterates.append(nxt)
    raise NonConvergence(f"no stabilization within {max_iter} iterations; last block maxima {traces[-1]}")


# ---------------------------------------------------------------- normality of profiles

def normal_characterization(profile, c=1.0, end="infinity", log_valued=False, schedule=None, per_decade=16,
                            s_min=None):
    """Smallest ``B`` with ``M(tau)/M(s) >= c log(tau/s) - B`` on grids of growing extent.

    At the zero end the roles flip: ``m(tau)/m(s) >= c log(s/tau) - B`` for ``tau <= s``.
    """
    if not c > 0:
        raise RegimeParameterError("c must be positive")
    if end == "infinity":
        schedule = schedule or (1e3, 1e6, 1e12, 1e24, 1e48)
        s_min = s_min or 3.0
    else:
        schedule = schedule or (1e-3, 1e-6, 1e-12, 1e-24, 1e-48)
        s_min = s_min or 1.0
    prof = Profile.wrap(profile, end, log_valued)
    bs = []
    for edge in schedule:
        lo, hi = sorted((math.log10(s_min), math.log10(edge)))
        x = np.linspace(lo, hi, int(round((hi - lo) * per_decade)) + 1) * math.log(10.0)
        lv = np.asarray(prof.log_value(x), float)
        if end == "infinity":
            gap = x[None, :] - x[:, None]              # log(tau/s), rows s, cols tau
            ratio = lv[None, :] - lv[:, None]
        else:
            gap = x[:, None] - x[None, :]              # log(s/tau)
            ratio = lv[None, :] - lv[:, None]
        with np.errstate(over="ignore"):
            vals = np.where(gap > 0, c * gap - np.exp(ratio), -np.inf)
        bs.append(float(np.max(vals)))
    bs = np.array(bs)
    growth = np.diff(bs[-3:])
    diverging = bool(np.all(growth > 1e-3 * np.maximum(1.0, bs[-3:-1])))
    return {"holds": bool(np.isfinite(bs[-1]) and not diverging), "B": float(bs[-1]), "B_trace": bs,
            "schedule": tuple(schedule)}


# ---------------------------------------------------------------- decay back to resolvent growth

def n_star(N, s, t_start=1e-3, t_budget=1e12):
    """``min{t : N(t) <= s}`` by bisection in ``log t``."""
    s = np.atleast_1d(np.asarray(s, float))
    lo, hi = math.log(t_start), math.log(t_budget)
    f = lambda x: np.asarray(N(np.exp(x)), float)
    if np.any(f(np.array([hi])) > s):
        raise LimitError("N does not reach the requested level within the search budget")
    a = np.full_like(s, lo)
    b = np.full_like(s, hi)
    done = f(a) <= s
    for _ in range(200):
        mid = 0.5 * (a + b)
        below = f(mid) <= s
        b = np.where(below, mid, b)
        a = np.where(below, a, mid)
        if np.all(b - a < 1e-12 * max(1.0, abs(hi))):
            break
    return np.where(done, t_start, np.exp(b))


def decay_to_resolvent(N, variant="zero", c=0.5, t_start=1e-3, t_budget=1e12):
    """Resolvent bounds implied by a decay function ``N``.

    Returns a dict with the ``"zero"`` bound ``N*(c|s|) + 1/|s|`` and, for
    ``variant="both"``, the ``"infinity"`` bound ``N*(c/|s|)``.
    """
    if not 0 < c < 1:
        raise DomainError("c must lie in (0, 1)")
    if variant not in ("zero", "both"):
        raise DomainError(f"variant must be 'zero' or 'both', got {variant!r}")
    t = np.geomspace(t_start, t_budget, 241)
    vals = np.asarray(N(t), float)
    if np.any(np.diff(vals) > 1e-12 * np.maximum(1.0, np.abs(vals[:-1]))):
        raise MonotonicityError("N must be nonincreasing")
    if not vals[-1] < vals[0]:
        raise LimitError("N does not decrease on the search budget")

    def zero(s):
        s = np.abs(np.asarray(s, float))
        out = n_star(N, c * s, t_start, t_budget) + 1.0 / s
        return float(out[0]) if np.ndim(s) == 0 else out

    out = {"zero": zero}
    if variant == "both":
        def infinity(s):
            s = np.abs(np.asarray(s, float))
            out = n_star(N, c / s, t_start, t_budget)
            return float(out[0]) if np.ndim(s) == 0 else out
        out["infinity"] = infinity
    return out
