"""Stieltjes and complete Bernstein functions built from a triple ``(a, b, g)``.

A Stieltjes function is ``a/z + b + S_g(z)`` and a complete Bernstein function
is ``a + b z + z S_g(z)`` with ``S_g(z) = int dg(s)/(s+z)``.  For a power-type
distribution function ``g(s) = s**p * l(s)`` the transform is evaluated in the
density form ``int g(s)/(s+z)**2 ds`` after the substitution ``s = |z| e**x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import regvar as rv
from .errors import (ConvergenceError, DomainError, IntegrabilityError, PreconditionError,
                     SpecError, ZeroFunctionError)

STIELTJES = "stieltjes"
BERNSTEIN = "bernstein"

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_CHUNK = 256


@dataclass(frozen=True)
class Atoms:
    """Finite measure ``sum w_i delta_{s_i}`` on ``(0, inf)``."""

    points: tuple
    weights: tuple

    def __post_init__(self):
        p = np.asarray(self.points, float)
        w = np.asarray(self.weights, float)
        if p.shape != w.shape or p.ndim != 1:
            raise SpecError("atoms need matching point and weight lists")
        if np.any(~(p > 0)) or np.any(~(w >= 0)) or not np.all(np.isfinite(w)):
            raise IntegrabilityError("atoms must sit in (0, inf) with finite nonnegative weights")
        object.__setattr__(self, "points", tuple(p.tolist()))
        object.__setattr__(self, "weights", tuple(w.tolist()))


@dataclass(frozen=True)
class QuadConfig:
    step: float = 0.5
    min_step: float = 1.0 / 512
    tail: float = 1.0
    rtol: float = 1e-11


@dataclass(frozen=True)
class StieltjesTriple:
    """``g`` is None, an ``Atoms`` list, or a ``RegVarFn`` ``s**p l(s)`` with ``0 <= p <= 1``.

    With ``reflect=True`` the slow part is read at ``1/s``, which models a
    distribution function regularly varying at zero.  Below its domain the slow
    part is continued as a constant.
    """

    a: float = 0.0
    b: float = 0.0
    g: object = None
    reflect: bool = False

    def __post_init__(self):
        if not (self.a >= 0 and self.b >= 0 and math.isfinite(self.a) and math.isfinite(self.b)):
            raise SpecError("triple needs finite a, b >= 0")
        if isinstance(self.g, rv.RegVarFn):
            _certify(self.g, self.reflect)
        elif self.g is not None and not isinstance(self.g, Atoms):
            raise SpecError("g must be None, Atoms or RegVarFn")

    @property
    def is_zero(self):
        if self.a or self.b:
            return False
        if self.g is None:
            return True
        return isinstance(self.g, Atoms) and not any(self.g.weights)


def _certify(g, reflect):
    p = g.index
    if not (0.0 <= p <= 1.0):
        raise IntegrabilityError(f"distribution index {p} outside [0, 1]")
    if p == 1.0:
        if reflect:
            return
        nf = rv._normal_form(g.slow)
        if nf is None or nf[2] or not nf[1] < -1.0:
            raise IntegrabilityError("index 1 needs int l(s)/(s+1) ds finite; not certified for this slow part")
    if p == 0.0 and not reflect and rv.eventual_direction(g.slow) < 0:
        raise IntegrabilityError("index 0 with decreasing slow part is not a distribution function")


@dataclass(frozen=True)
class SpecialFn:
    kind: str
    triple: StieltjesTriple
    quad: QuadConfig = field(default_factory=QuadConfig)

    def __post_init__(self):
        if self.kind not in (STIELTJES, BERNSTEIN):
            raise SpecError(f"unknown kind {self.kind!r}")

    def __call__(self, lam):
        return eval_special(self, lam)


# ---------------------------------------------------------------- quadrature

def _log_slow(g, reflect, log_s):
    u = -log_s if reflect else log_s
    return g.slow.log_at(np.maximum(u, g.slow.log_start))


def _slow_index(g, reflect, log_s):
    u = -log_s if reflect else log_s
    inside = u > g.slow.log_start
    eps = np.where(inside, g.slow.index_at(np.maximum(u, g.slow.log_start)), 0.0)
    return -eps if reflect else eps


def _density_chunk(g, reflect, lam, lo, h, n):
    """Composite Gauss-Legendre on ``n`` panels of width ``h`` for a chunk of ``lam``.

    The panels are shifted per point so that an edge falls on the kink where the
    slow part is continued as a constant.
    """
    p = g.index
    r = np.abs(lam)[:, None]
    w = (lam / np.abs(lam))[:, None]
    logr = np.log(r)
    kink = (-g.slow.log_start if reflect else g.slow.log_start) - logr
    start = lo - h + np.mod(kink - lo, h)
    base = (np.arange(n)[:, None] * h + 0.5 * h * (_GL_X + 1.0)).ravel()
    wt = np.tile(0.5 * h * _GL_W, n)
    x = start + base[None, :]
    logl = _log_slow(g, reflect, logr + x)
    neg = x <= 0
    denom = np.where(neg, (np.exp(np.minimum(x, 0)) + w) ** 2, (1.0 + w * np.exp(-np.maximum(x, 0))) ** 2)
    expo = np.where(neg, (1 + p) * x, (p - 1) * x) + logl + (p - 1) * logr
    return (np.exp(expo) / denom) @ wt


def _tail_bounds(g, reflect, lam, lo, hi):
    """Envelope bounds on the integral outside ``[lo, hi]`` (in scaled log variable)."""
    p = g.index
    logr = np.log(np.abs(lam))
    eps_hi = _slow_index(g, reflect, logr + hi)
    eps_lo = _slow_index(g, reflect, logr + lo)
    rate_hi = (1 - p) - np.maximum(eps_hi, 0)
    rate_lo = (1 + p) + np.minimum(eps_lo, 0)
    cut = np.abs(1 - np.exp(-hi)) ** 2
    val_hi = np.exp((p - 1) * hi + _log_slow(g, reflect, logr + hi) + (p - 1) * logr) / cut
    val_lo = np.exp((1 + p) * lo + _log_slow(g, reflect, logr + lo) + (p - 1) * logr) / (1 - np.exp(lo)) ** 2
    with np.errstate(divide="ignore"):
        up = np.where(rate_hi > 0, val_hi / np.where(rate_hi > 0, rate_hi, 1), np.inf)
        down = np.where(rate_lo > 0, val_lo / np.where(rate_lo > 0, rate_lo, 1), np.inf)
    return up, down


def density_transform(g, lam, reflect=False, quad: QuadConfig = QuadConfig()):
    """``int g(s)/(s+lam)**2 ds`` for ``g = s**p l(s)``, vectorised over ``lam``."""
    lam = np.atleast_1d(np.asarray(lam, complex))
    p = g.index
    sigma = 1.0 - p
    lo = -40.0 * quad.tail
    hi = quad.tail * max(40.0, 40.0 / max(sigma, 1e-3))
    out = np.empty(lam.shape, complex)
    for k in range(0, lam.size, _CHUNK):
        chunk = lam[k:k + _CHUNK]
        c_lo, c_hi = lo, hi
        for _ in range(40):
            up, down = _tail_bounds(g, reflect, chunk, c_lo, c_hi)
            scale = np.exp(_log_slow(g, reflect, np.log(np.abs(chunk))) + (p - 1) * np.log(np.abs(chunk)))
            bad_hi = np.any(up > 1e-14 * scale)
            bad_lo = np.any(down > 1e-14 * scale)
            if not (bad_hi or bad_lo):
                break
            if bad_hi:
                c_hi *= 1.5
            if bad_lo:
                c_lo *= 1.5
        else:
            raise ConvergenceError("could not certify quadrature truncation")
        out[k:k + _CHUNK] = _refine(g, reflect, chunk, c_lo, c_hi, quad)
    return out


def _refine(g, reflect, lam, lo, hi, quad):
    h = quad.step
    n = max(1, int(math.ceil((hi - lo) / h))) + 1
    prev = _density_chunk(g, reflect, lam, lo, h, n)
    todo = np.arange(lam.size)
    result = prev.copy()
    while todo.size:
        h, n = h / 2, 2 * n
        if h < quad.min_step:
            raise ConvergenceError("quadrature did not converge before the minimum step")
        cur = _density_chunk(g, reflect, lam[todo], lo, h, n)
        err = np.abs(cur - prev[todo]) / np.maximum(np.abs(cur), 1e-300)
        result[todo] = cur
        prev = result.copy()
        todo = todo[err > quad.rtol]
    return result


def stieltjes_part(triple: StieltjesTriple, lam, quad: QuadConfig = QuadConfig()):
    """``S_g(lam)`` for the measure of the triple."""
    lam = np.atleast_1d(np.asarray(lam, complex))
    g = triple.g
    if g is None:
        return np.zeros(lam.shape, complex)
    if isinstance(g, Atoms):
        pts = np.asarray(g.points)
        wts = np.asarray(g.weights)
        return (wts / (pts + lam[:, None])).sum(axis=1)
    return density_transform(g, lam, triple.reflect, quad)


def _check_slit(lam):
    bad = (lam.imag == 0) & (lam.real <= 0)
    if np.any(bad) or np.any(~np.isfinite(lam)):
        raise DomainError("argument on the cut (-inf, 0]")


def eval_special(fn: SpecialFn, lam):
    lam_arr = np.asarray(lam, complex)
    flat = np.atleast_1d(lam_arr).ravel()
    _check_slit(flat)
    t = fn.triple
    s = stieltjes_part(t, flat, fn.quad)
    if fn.kind == STIELTJES:
        val = t.a / flat + t.b + s
    else:
        val = t.a + t.b * flat + flat * s
    val = val.reshape(lam_arr.shape)
    if np.isrealobj(np.asarray(lam)):
        val = val.real
    return val.item() if val.ndim == 0 else val


# ---------------------------------------------------------------- composites

def make_fg_fm(g, reflect=False, quad: QuadConfig = QuadConfig()):
    """``f_g(z) = S_g(1/z)`` and ``f_m = f_g/(1+f_g)`` as callables on the slit plane."""
    triple = StieltjesTriple(0.0, 0.0, g, reflect)
    s = SpecialFn(STIELTJES, triple, quad)

    def f_g(lam):
        lam = np.asarray(lam, complex)
        _check_slit(np.atleast_1d(lam))
        return _real_if(eval_special(s, 1.0 / lam), lam)

    def f_m(lam):
        v = f_g(lam)
        return v / (1.0 + v)

    return f_g, f_m


def _real_if(val, lam):
    if np.all(np.asarray(lam).imag == 0):
        return np.real(val)
    return val


def karamata_constant(sigma):
    return math.gamma(sigma) * math.gamma(2.0 - sigma)


def karamata_audit(g: rv.RegVarFn, sigma: float, end="infinity", lam_grid: rv.Grid | None = None,
                   tol=0.05, quad: QuadConfig = QuadConfig()):
    """Trace ``S_g(lam) lam**sigma / (Gamma(sigma) Gamma(2-sigma) l(lam or 1/lam))``.

    The grid is given in ``log lam`` for the infinity end and ``-log lam`` for the zero end.
    """
    if not 0 < sigma <= 1:
        raise PreconditionError("sigma must lie in (0, 1]")
    if abs(g.index - (1 - sigma)) > 1e-12:
        raise PreconditionError("distribution index must equal 1 - sigma")
    reflect = end == "zero"
    if end not in ("infinity", "zero"):
        raise SpecError("end must be 'infinity' or 'zero'")
    grid = lam_grid or rv.decade_grid(1e2, 1e8, 4)
    log_lam = -grid.log_s if reflect else grid.log_s
    lam = np.exp(log_lam)
    s = stieltjes_part(StieltjesTriple(0, 0, g, reflect), lam, quad).real
    u = np.maximum(grid.log_s, g.slow.log_start)
    trace = s * np.exp(sigma * log_lam - g.slow.log_at(u)) / karamata_constant(sigma)
    res = rv._similar(grid, trace - 1.0, tol)
    res.details["trace"] = trace
    res.details["lam"] = lam
    return res


def sector_domination_audit(fn: SpecialFn, phis, rs, slack=1e-9):
    """Check ``sqrt((1+cos phi)/2) g(r) <= |g(r e^{i phi})| <= sqrt(2/(1+cos phi)) g(r)``."""
    t = fn.triple
    if t.a or t.b:
        raise PreconditionError("sector domination needs a triple of the form (0, 0, mu)")
    phis = np.asarray([p for p in np.atleast_1d(phis) if abs(p) <= math.pi - 0.05], float)
    rs = np.atleast_1d(np.asarray(rs, float))
    on_axis = np.asarray(eval_special(fn, rs), float)
    z = rs[:, None] * np.exp(1j * phis[None, :])
    mod = np.abs(np.asarray(eval_special(fn, z.ravel()), complex)).reshape(z.shape)
    c = np.sqrt((1 + np.cos(phis)) / 2)[None, :]
    lower = c * on_axis[:, None]
    upper = on_axis[:, None] / c
    ok = (mod >= lower * (1 - slack)) & (mod <= upper * (1 + slack))
    return {"passed": bool(ok.all()), "violations": int((~ok).sum()),
            "lower_gap": float(np.min(mod / lower)), "upper_gap": float(np.max(mod / upper))}


# ---------------------------------------------------------------- dualities

@dataclass
class DerivedFn:
    """Value-level transform of a special function with its claimed class."""

    kind: str
    func: Callable
    label: str

    def __call__(self, lam):
        return self.func(lam)


_TRANSFORMS = {
    "times_lambda": (STIELTJES, BERNSTEIN, lambda f: lambda z: z * f(z)),
    "over_lambda": (BERNSTEIN, STIELTJES, lambda f: lambda z: f(z) / z),
    "reciprocal": (None, None, lambda f: lambda z: 1.0 / f(z)),
    "lambda_over": (BERNSTEIN, BERNSTEIN, lambda f: lambda z: z / f(z)),
    "inversion": (BERNSTEIN, BERNSTEIN, lambda f: lambda z: z * f(1.0 / np.asarray(z))),
}


def duality_transform(fn, how: str) -> DerivedFn:
    if how not in _TRANSFORMS:
        raise SpecError(f"unknown transform {how!r}; choose from {sorted(_TRANSFORMS)}")
    src, dst, make = _TRANSFORMS[how]
    if isinstance(fn, SpecialFn) and fn.triple.is_zero:
        raise ZeroFunctionError("transform of the zero function")
    if src is not None and fn.kind != src:
        raise PreconditionError(f"{how} expects a {src} function")
    if dst is None:
        dst = BERNSTEIN if fn.kind == STIELTJES else STIELTJES
    return DerivedFn(dst, make(fn), how)


def membership_audit(fn, lam=None, rtol=1e-10):
    """Sampled positivity and monotonicity for the claimed class."""
    lam = np.geomspace(1e-6, 1e6, 121) if lam is None else np.asarray(lam, float)
    v = np.real(np.asarray(fn(lam)))
    d = np.diff(v)
    tol = rtol * np.maximum(np.abs(v[1:]), 1e-300)
    if fn.kind == BERNSTEIN:
        ok = np.all(v >= -tol.max()) and np.all(d >= -tol)
    else:
        ok = np.all(v > 0) and np.all(d <= tol)
    return bool(ok)
