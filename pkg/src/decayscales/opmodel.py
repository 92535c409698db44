"""Quasi-multiplication models: operator norms as suprema over the spectrum.

For a model whose semigroup acts by multiplication, ``||T(t) r(A)||`` equals
``sup |exp(-t lam) r(lam)|`` over the spectrum and the resolvent norm at
``i s`` is the reciprocal distance from ``-i s`` to the spectrum.  Spectra are
either finite eigenvalue lists or curves ``u -> a(u) + i u``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from . import cbf
from . import regvar as rv
from .errors import (ConvergenceError, DomainError, PreconditionError, SpecError, TailError)

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_LOG10_MIN, _LOG10_MAX = -300.0, 300.0
MAX_EIGENVALUES = 10 ** 6


def golden_max(f, a, b, tol=1e-13, maxit=300):
    """Golden-section search for the maximum of a unimodal scalar function on ``[a, b]``."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxit):
        if abs(b - a) <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    else:
        raise ConvergenceError(f"golden-section search exhausted its budget on [{a}, {b}]")
    return (c, fc) if fc >= fd else (d, fd)


# ---------------------------------------------------------------- real-part shapes

class Shape:
    """Real part ``a(u)`` of a spectral curve, evaluated at ``|u|``."""

    def __call__(self, u):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return self._eval(np.abs(np.asarray(u, float)))


@dataclass(frozen=True)
class ConstShape(Shape):
    c: float

    def _eval(self, u):
        return np.full_like(u, self.c)


@dataclass(frozen=True)
class PowerShape(Shape):
    """``c (shift + u)**p``."""

    p: float
    shift: float = 0.0
    c: float = 1.0

    def _eval(self, u):
        return self.c * (self.shift + u) ** self.p


@dataclass(frozen=True)
class LogPowShape(Shape):
    """``log(shift + u)**q``; needs ``shift + u > 1``."""

    q: float
    shift: float = math.e

    def _eval(self, u):
        return np.log(self.shift + u) ** self.q


@dataclass(frozen=True)
class ExpLogPowShape(Shape):
    """``exp(coef * log(shift + u)**kappa)``."""

    kappa: float
    coef: float = 1.0
    shift: float = math.e

    def _eval(self, u):
        return np.exp(self.coef * np.log(self.shift + u) ** self.kappa)


@dataclass(frozen=True)
class ProductShape(Shape):
    factors: tuple

    def _eval(self, u):
        out = np.ones_like(u)
        for f in self.factors:
            out = out * f._eval(u)
        return out


@dataclass(frozen=True)
class MinShape(Shape):
    parts: tuple

    def _eval(self, u):
        return np.min(np.stack([np.nan_to_num(p._eval(u), nan=np.inf) for p in self.parts]), axis=0)


_SHAPES = {"const": ConstShape, "power": PowerShape, "logpow": LogPowShape, "explogpow": ExpLogPowShape}


def shape_to_dict(shape: Shape) -> dict:
    if isinstance(shape, ProductShape):
        return {"kind": "product", "factors": [shape_to_dict(f) for f in shape.factors]}
    if isinstance(shape, MinShape):
        return {"kind": "min", "parts": [shape_to_dict(p) for p in shape.parts]}
    for name, cls in _SHAPES.items():
        if type(shape) is cls:
            d = {"kind": name}
            d.update(shape.__dict__)
            return d
    raise SpecError(f"unknown shape {shape!r}")


def shape_from_dict(d: dict) -> Shape:
    try:
        kind = d["kind"]
        if kind == "product":
            return ProductShape(tuple(shape_from_dict(f) for f in d["factors"]))
        if kind == "min":
            return MinShape(tuple(shape_from_dict(p) for p in d["parts"]))
        cls = _SHAPES[kind]
        args = {k: float(v) for k, v in d.items() if k != "kind"}
        return cls(**args)
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed curve shape {d!r}") from exc


# ---------------------------------------------------------------- models

class Model:
    contains_zero: bool

    def __post_init__(self):
        self._cache = {}
        self._lock = threading.Lock()

    def _memo(self, key, compute):
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        val = compute()
        with self._lock:
            self._cache.setdefault(key, val)
        return val


@dataclass(eq=False)
class Diagonal(Model):
    eigenvalues: np.ndarray

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.eigenvalues, complex))
        if lam.size == 0:
            raise SpecError("diagonal model needs at least one eigenvalue")
        if lam.size > MAX_EIGENVALUES:
            raise SpecError("diagonal models are capped at 10**6 eigenvalues; use a curve")
        if np.any(~np.isfinite(lam)) or np.any(lam.real < 0):
            raise SpecError("eigenvalues must be finite with nonnegative real part")
        if np.any((lam.real == 0) & (lam != 0)):
            raise SpecError("purely imaginary eigenvalues are admitted only at 0")
        self.eigenvalues = lam
        self.contains_zero = bool(np.any(lam == 0))
        super().__post_init__()

    def spectrum_sample(self):
        return self.eigenvalues


@dataclass(eq=False)
class Curve(Model):
    """Spectrum ``{a(u) + i u : u >= s0}``, plus conjugates when ``symmetric``."""

    shape: Shape
    s0: float = 0.0
    symmetric: bool = True
    name: str = ""

    def __post_init__(self):
        if not (self.s0 >= 0 and math.isfinite(self.s0)):
            raise SpecError("curve start must be a finite nonnegative number")
        probe = np.concatenate([[self.s0], self.s0 + np.logspace(-8, 12, 401)])
        a = self.shape(probe)
        if np.any(np.isnan(a)) or np.any(a[1:] <= 0) or np.any(~np.isfinite(a[1:])):
            raise SpecError("curve real part must be finite and positive for u > s0")
        if not a[0] >= 0:
            raise SpecError("curve real part must be nonnegative at its start")
        self.contains_zero = bool(self.s0 == 0 and a[0] == 0)
        super().__post_init__()

    def a(self, u):
        return self.shape(u)

    def spectrum_sample(self, per_decade=64, lo=-12.0, hi=12.0):
        u = self._ugrid(per_decade, lo, hi)
        lam = self.a(u) + 1j * u
        return np.concatenate([lam, np.conj(lam[u > 0])]) if self.symmetric else lam

    def _ugrid(self, per_decade, lo, hi):
        start = math.log10(self.s0) if self.s0 > 0 else lo
        hi = max(hi, start + 1)
        u = np.logspace(start, hi, int(round((hi - start) * per_decade)) + 1)
        return np.concatenate([[0.0], u]) if self.s0 == 0 else u


def log_growth_curve():
    """Spectrum ``1/log u + i u`` for ``u >= 2``."""
    return Curve(LogPowShape(-1.0, 0.0), 2.0, False, "log-growth")


def power_curve(alpha):
    """``a(u) = (1+|u|)**(-alpha)``: resolvent growth ``M(s) ~ s**alpha``."""
    return Curve(PowerShape(-float(alpha), 1.0), 0.0, True, f"power-a{alpha:g}")


def log_corrected_curve(alpha, beta):
    """``a(u) = (e+u)**(-alpha) log(e+u)**beta``: ``M(s) ~ s**alpha (log s)**(-beta)``."""
    return Curve(ProductShape((PowerShape(-float(alpha), math.e), LogPowShape(float(beta), math.e))),
                 0.0, True, f"log-corrected-a{alpha:g}-b{beta:g}")


def zero_curve(alpha):
    """``a(u) = min(1, |u|**alpha)``: ``m(s) ~ s**(-alpha)`` near zero."""
    return Curve(MinShape((ConstShape(1.0), PowerShape(float(alpha)))), 0.0, True, f"zero-a{alpha:g}")


def both_curve(alpha, beta):
    """``a(u) = min(|u|**alpha, |u|**(-beta))``: ``m ~ s**(-alpha)`` and ``M ~ s**beta``."""
    return Curve(MinShape((PowerShape(float(alpha)), PowerShape(-float(beta)))), 0.0, True,
                 f"both-a{alpha:g}-b{beta:g}")


PRESETS = {
    "log-growth": lambda **kw: log_growth_curve(),
    "power": lambda alpha=2.0, **kw: power_curve(alpha),
    "log-corrected": lambda alpha=1.0, beta=2.0, **kw: log_corrected_curve(alpha, beta),
    "zero": lambda alpha=1.0, **kw: zero_curve(alpha),
    "both": lambda alpha=1.0, beta=2.0, **kw: both_curve(alpha, beta),
}


def model_to_dict(model: Model) -> dict:
    if isinstance(model, Diagonal):
        return {"variant": "diagonal",
                "eigenvalues": [[float(z.real), float(z.imag)] for z in model.eigenvalues]}
    return {"variant": "curve", "shape": shape_to_dict(model.shape), "s0": model.s0,
            "symmetric": model.symmetric, "name": model.name}


def model_from_dict(d: dict) -> Model:
    try:
        variant = d["variant"]
        if variant == "diagonal":
            return Diagonal(np.array([complex(x, y) for x, y in d["eigenvalues"]]))
        if variant == "curve":
            return Curve(shape_from_dict(d["shape"]), float(d.get("s0", 0.0)),
                         bool(d.get("symmetric", True)), str(d.get("name", "")))
        if variant == "preset":
            params = {k: float(v) for k, v in d.get("params", {}).items()}
            return PRESETS[d["name"]](**params)
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed model {d!r}") from exc
    raise SpecError(f"unknown model variant {d.get('variant')!r}")


# ---------------------------------------------------------------- observables

class Observable:
    singular_at_zero = False
    per_decade = 256

    def symbol(self, lam):
        raise NotImplementedError

    def log_abs(self, lam):
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.symbol(lam)))


def _log_abs(z):
    with np.errstate(divide="ignore"):
        return np.log(np.abs(z))


@dataclass(frozen=True)
class Identity(Observable):
    def symbol(self, lam):
        return np.ones_like(np.asarray(lam, complex))

    def log_abs(self, lam):
        return np.zeros(np.shape(lam))


@dataclass(frozen=True)
class InvA(Observable):
    singular_at_zero = True

    def symbol(self, lam):
        return 1.0 / np.asarray(lam, complex)

    def log_abs(self, lam):
        return -_log_abs(lam)


@dataclass(frozen=True)
class BofA(Observable):
    def symbol(self, lam):
        lam = np.asarray(lam, complex)
        return lam / (1.0 + lam)

    def log_abs(self, lam):
        return _log_abs(lam) - _log_abs(1.0 + np.asarray(lam, complex))


@dataclass(frozen=True)
class AIA2(Observable):
    def symbol(self, lam):
        lam = np.asarray(lam, complex)
        return lam / (1.0 + lam) ** 2

    def log_abs(self, lam):
        return _log_abs(lam) - 2.0 * _log_abs(1.0 + np.asarray(lam, complex))


@dataclass(frozen=True)
class FracComb(Observable):
    """``lam**alpha / (1+lam)**(alpha+beta)``."""

    alpha: float
    beta: float

    @property
    def singular_at_zero(self):
        return self.alpha < 0

    def symbol(self, lam):
        lam = np.asarray(lam, complex)
        return lam ** self.alpha / (1.0 + lam) ** (self.alpha + self.beta)

    def log_abs(self, lam):
        lam = np.asarray(lam, complex)
        return self.alpha * _log_abs(lam) - (self.alpha + self.beta) * _log_abs(1.0 + lam)


@dataclass(frozen=True)
class PowBofA(Observable):
    """``(lam/(1+lam))**gamma``."""

    gamma: float

    @property
    def singular_at_zero(self):
        return self.gamma < 0

    def symbol(self, lam):
        lam = np.asarray(lam, complex)
        return (lam / (1.0 + lam)) ** self.gamma

    def log_abs(self, lam):
        lam = np.asarray(lam, complex)
        return self.gamma * (_log_abs(lam) - _log_abs(1.0 + lam))


@dataclass(frozen=True)
class Power(Observable):
    """``lam**gamma`` (principal branch)."""

    gamma: float

    @property
    def singular_at_zero(self):
        return self.gamma < 0

    def symbol(self, lam):
        return np.asarray(lam, complex) ** self.gamma

    def log_abs(self, lam):
        return self.gamma * _log_abs(lam)


@dataclass(frozen=True)
class Wop(Observable):
    """``lam**(-(alpha-beta)) S_g(lam)`` with ``g(s) = s**(1-beta) l(s)``."""

    alpha: float
    beta: float
    slow: rv.SlowExpr = rv.Const(1.0)
    singular_at_zero = True
    per_decade = 32

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise SpecError("Wop needs 0 < beta <= 1")

    @property
    def triple(self):
        return cbf.StieltjesTriple(0.0, 0.0, rv.RegVarFn(1.0 - self.beta, self.slow))

    def symbol(self, lam):
        lam = np.asarray(lam, complex)
        flat = lam.ravel()
        s = cbf.stieltjes_part(self.triple, flat)
        return (flat ** (-(self.alpha - self.beta)) * s).reshape(lam.shape)


@dataclass(frozen=True)
class Vop(Observable):
    """``(lam/(1+lam))**(alpha-beta) f_m(lam)`` with ``g(s) = s**(1-beta) l(s)``."""

    alpha: float
    beta: float
    slow: rv.SlowExpr = rv.Const(1.0)
    per_decade = 32

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise SpecError("Vop needs 0 < beta <= 1")

    @property
    def singular_at_zero(self):
        return self.alpha < self.beta

    def symbol(self, lam):
        lam = np.asarray(lam, complex)
        flat = lam.ravel()
        out = np.zeros(flat.shape, complex)
        nz = flat != 0
        fg = cbf.stieltjes_part(cbf.StieltjesTriple(0.0, 0.0, rv.RegVarFn(1.0 - self.beta, self.slow)),
                                1.0 / flat[nz])
        out[nz] = (flat[nz] / (1.0 + flat[nz])) ** (self.alpha - self.beta) * fg / (1.0 + fg)
        return out.reshape(lam.shape)


@dataclass(frozen=True)
class CBFof(Observable):
    fn: cbf.SpecialFn = None
    per_decade = 32

    def symbol(self, lam):
        lam = np.asarray(lam, complex)
        flat = lam.ravel()
        out = np.full(flat.shape, complex(self.fn.triple.a))
        nz = flat != 0
        out[nz] = np.asarray(cbf.eval_special(self.fn, flat[nz]), complex)
        return out.reshape(lam.shape)


_OBS = {"InvA": InvA, "BofA": BofA, "AIA2": AIA2, "FracComb": FracComb, "PowBofA": PowBofA,
        "Power": Power, "Wop": Wop, "Vop": Vop, "Identity": Identity}


def observable_from_dict(d) -> Observable:
    if isinstance(d, str):
        d = {"kind": d}
    try:
        kind = d["kind"]
        cls = _OBS[kind]
        args = {k: v for k, v in d.items() if k != "kind"}
        if "slow" in args:
            args["slow"] = rv.from_dict(args["slow"])
        return cls(**{k: (v if k == "slow" else float(v)) for k, v in args.items()})
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed observable {d!r}") from exc


def observable_to_dict(obs: Observable) -> dict:
    name = type(obs).__name__
    if name not in _OBS:
        raise SpecError(f"observable {name} has no JSON form")
    d = {"kind": name}
    for k, v in obs.__dict__.items():
        d[k] = rv.to_dict(v) if isinstance(v, rv.SlowExpr) else v
    return d


# ---------------------------------------------------------------- curve suprema

class _Sampler:
    """Lazily extended log grid of the curve parameter with cached ``a`` and ``log|r|``."""

    def __init__(self, model: Curve, obs: Observable):
        self.model, self.obs = model, obs
        self.ppd = obs.per_decade
        lo = math.log10(model.s0) if model.s0 > 0 else -4.0
        self.lo, self.hi = lo, max(lo + 8.0, 8.0)
        self.bottom_fixed = model.s0 > 0
        self.u = np.logspace(self.lo, self.hi, int(round((self.hi - self.lo) * self.ppd)) + 1)
        self.a, self.r = self._eval(self.u)

    def _eval(self, u):
        a = self.model.a(u)
        return a, self.obs.log_abs(a + 1j * u)

    def extend(self, up: bool):
        if up:
            new_hi = min(self.hi + 16.0, _LOG10_MAX)
            u = np.logspace(self.hi, new_hi, int(round((new_hi - self.hi) * self.ppd)) + 1)[1:]
            a, r = self._eval(u)
            self.u, self.a, self.r = (np.concatenate([x, y]) for x, y in ((self.u, u), (self.a, a), (self.r, r)))
            self.hi = new_hi
        else:
            new_lo = max(self.lo - 16.0, _LOG10_MIN)
            u = np.logspace(new_lo, self.lo, int(round((self.lo - new_lo) * self.ppd)) + 1)[:-1]
            a, r = self._eval(u)
            self.u, self.a, self.r = (np.concatenate([y, x]) for x, y in ((self.u, u), (self.a, a), (self.r, r)))
            self.lo = new_lo

    def can_extend(self, up):
        return self.hi < _LOG10_MAX if up else (not self.bottom_fixed and self.lo > _LOG10_MIN)


def _objective(model, obs, t, cancel):
    def f(log_u):
        u = np.array([10.0 ** log_u])
        a = model.a(u)
        r = obs.log_abs(a + 1j * u)
        with np.errstate(divide="ignore"):
            q = np.log(a) if cancel else a
        return float(r[0] - t * q[0])
    return f


def _curve_sup(model: Curve, obs: Observable, ts, cancel=False):
    """Return ``(log_sup, witness_u)`` arrays for each ``t`` (``cancel``: weight ``1/Re lam``)."""
    ts = np.atleast_1d(np.asarray(ts, float))
    smp = _Sampler(model, obs)
    flat_tol = 1e-9
    for _ in range(64):
        with np.errstate(divide="ignore"):
            q = np.log(smp.a) if cancel else smp.a
        vals, arg = _kernels.weighted_max(ts, q, smp.r)
        k = min(smp.ppd, smp.u.size - 1)
        with np.errstate(invalid="ignore"):
            top = smp.r[-1] - ts * q[-1]
            top_prev = smp.r[-1 - k] - ts * q[-1 - k]
            bot = smp.r[0] - ts * q[0]
            bot_next = smp.r[k] - ts * q[k]
            slope_top = np.where(top == np.inf, np.inf, top - top_prev)
            slope_bot = np.where(bot == np.inf, np.inf, bot - bot_next)
        rising_up = slope_top > flat_tol
        rising_down = slope_bot > flat_tol
        need_up = bool(np.any(rising_up)) and smp.can_extend(True)
        need_down = bool(np.any(rising_down)) and smp.can_extend(False)
        if not (need_up or need_down):
            break
        if need_up:
            smp.extend(True)
        if need_down:
            smp.extend(False)
    out = np.empty(ts.size)
    wit = np.empty(ts.size)
    logu = np.log10(smp.u)
    for i, t in enumerate(ts):
        j = int(arg[i])
        best, where = vals[i], smp.u[j]
        if np.isfinite(best) and 0 < j < smp.u.size - 1:
            x, fx = golden_max(_objective(model, obs, t, cancel), logu[j - 1], logu[j + 1], tol=1e-12)
            if fx > best:
                best, where = fx, 10.0 ** x
        if slope_top[i] > flat_tol:
            if slope_top[i] > 1e-6:
                if not cancel:
                    raise TailError(f"no decreasing tail envelope for {type(obs).__name__} on this curve at t={t:g}")
                best, where = np.inf, np.inf
        if model.s0 == 0:
            a0 = model.a(np.array([0.0]))
            r0 = obs.log_abs(a0 + 0j)
            with np.errstate(divide="ignore"):
                v0 = r0[0] - (t * a0[0] if not cancel else (np.log(a0[0]) if r0[0] > -np.inf else 0.0))
            if v0 > best:
                best, where = v0, 0.0
        out[i], wit[i] = best, where
    return out, wit


def _check_observable(model, obs):
    if obs.singular_at_zero and model.contains_zero:
        raise PreconditionError(f"{type(obs).__name__} is singular at 0, which lies in the spectrum")


def log_semigroup_norms(model: Model, ts, obs: Observable):
    """``log ||T(t) r(A)||`` for each ``t``."""
    _check_observable(model, obs)
    ts = np.atleast_1d(np.asarray(ts, float))
    if np.any(ts < 0):
        raise DomainError("t must be nonnegative")
    if isinstance(model, Diagonal):
        lam = model.eigenvalues
        vals, _ = _kernels.weighted_max(ts, lam.real, obs.log_abs(lam))
        return vals
    return _curve_sup(model, obs, ts)[0]


def semigroup_norm(model: Model, t, obs: Observable):
    out = np.exp(log_semigroup_norms(model, t, obs))
    return float(out[0]) if np.ndim(t) == 0 else out


def cancel_sup(model: Model, obs: Observable):
    """``sup |r(lam)| / Re lam`` over the spectrum with the witnessing point."""
    _check_observable(model, obs)
    if isinstance(model, Diagonal):
        lam = model.eigenvalues
        with np.errstate(divide="ignore"):
            vals = obs.log_abs(lam) - np.log(lam.real)
        vals = np.where(np.isnan(vals), -np.inf, vals)
        j = int(np.argmax(vals))
        return {"value": float(np.exp(vals[j])), "finite": bool(np.isfinite(vals[j])), "witness": complex(lam[j])}
    v, w = _curve_sup(model, obs, [1.0], cancel=True)
    value = float(np.exp(v[0]))
    witness = complex(float(model.a(np.array([w[0]]))[0]), w[0]) if np.isfinite(w[0]) else complex(0.0, np.inf)
    return {"value": value, "finite": bool(np.isfinite(value)), "witness": witness}


# ---------------------------------------------------------------- resolvents

def _local_peak(model, center, width, lo_bound, hi_bound):
    """Max of ``-0.5 log(a(u)**2 + dist(u, [lo_bound, hi_bound])**2)`` near ``center``."""
    lo = max(model.s0, center - width)
    hi = center + width
    if hi <= lo:
        return -np.inf

    def f(u):
        a = float(model.a(np.array([u]))[0])
        d = max(0.0, lo_bound - u, u - hi_bound)
        with np.errstate(divide="ignore"):
            return -0.5 * math.log(a * a + d * d) if a * a + d * d > 0 else np.inf

    xs = np.linspace(lo, hi, 129)
    fs = np.array([f(x) for x in xs])
    j = int(np.argmax(fs))
    if not np.isfinite(fs[j]):
        return np.inf
    _, fx = golden_max(f, xs[max(j - 1, 0)], xs[min(j + 1, xs.size - 1)], tol=1e-14)
    return max(fx, fs[j])


_PROFILE_GRID_PPD = 64


def _profile_grid(model: Curve):
    def build():
        start = math.log10(model.s0) if model.s0 > 0 else _LOG10_MIN
        u = np.logspace(start, _LOG10_MAX, int((_LOG10_MAX - start) * _PROFILE_GRID_PPD) + 1)
        if model.s0 == 0:
            u = np.concatenate([[0.0], u])
        return u, model.a(u)
    return model._memo("profile-grid", build)


def _curve_interval_sup(model: Curve, lo, hi):
    """``sup_u -log hypot(a(u), dist(|u|, [lo, hi]))`` for arrays of intervals."""
    u, a = _profile_grid(model)
    base = _kernels.interval_profile(a, u, lo, hi)
    out = base.copy()
    for i in range(lo.size):
        best = base[i]
        for e in (lo[i], hi[i]):
            if not np.isfinite(e):
                continue
            e_eff = max(e, model.s0)
            ae = float(model.a(np.array([e_eff]))[0])
            width = 4.0 * ae + 2.0 * max(0.0, model.s0 - e) + 1e-300
            best = max(best, _local_peak(model, e_eff, width, lo[i], hi[i]))
        if not np.isfinite(hi[i]):
            k = _PROFILE_GRID_PPD
            top = -np.log(a[-1])
            if top - (-np.log(a[-1 - k])) > 1e-6:
                best = np.inf
        out[i] = best
    return out


def resolvent_norm(model: Model, s):
    """``||(i s + A)^{-1}||``, i.e. the reciprocal distance from ``-i s`` to the spectrum."""
    s_arr = np.atleast_1d(np.asarray(s, float))
    if isinstance(model, Diagonal):
        lam = model.eigenvalues
        d = np.min(np.abs(lam[None, :] + 1j * s_arr[:, None]), axis=1)
        with np.errstate(divide="ignore"):
            out = 1.0 / d
    else:
        target = np.abs(s_arr) if model.symmetric else -s_arr
        out = np.exp(_curve_interval_sup(model, target, target))
    return float(out[0]) if np.ndim(s) == 0 else out


PROFILE_KINDS = ("Mcap", "mcap", "Mlog", "mlog", "M2", "m2")


def resolvent_profile(model: Model, kind: str, s):
    """Running suprema of resolvent norms over frequency ranges."""
    if kind not in PROFILE_KINDS:
        raise SpecError(f"unknown profile kind {kind!r}")
    s_arr = np.atleast_1d(np.asarray(s, float))
    if kind in ("Mlog", "mlog"):
        base = resolvent_profile(model, kind[0] + "cap", s_arr)
        if kind == "Mlog":
            out = base * (np.log1p(base) + np.log1p(s_arr))
        else:
            out = base * np.log((1.0 + base) / s_arr)
        return float(out[0]) if np.ndim(s) == 0 else out
    checks = {"Mcap": s_arr >= 0, "mcap": s_arr > 0, "M2": s_arr >= 1, "m2": (s_arr > 0) & (s_arr <= 1)}
    if not np.all(checks[kind]):
        raise DomainError(f"{kind} undefined at some requested s")
    lo, hi = {"Mcap": (np.zeros_like(s_arr), s_arr), "mcap": (s_arr, np.full_like(s_arr, np.inf)),
              "M2": (np.ones_like(s_arr), s_arr), "m2": (s_arr, np.ones_like(s_arr))}[kind]
    if isinstance(model, Diagonal):
        lam = model.eigenvalues
        log_vals = _kernels.interval_profile(lam.real, np.abs(lam.imag), lo, hi)
    else:
        log_vals = _curve_interval_sup(model, lo, hi)
    out = np.exp(log_vals)
    return float(out[0]) if np.ndim(s) == 0 else out


# ---------------------------------------------------------------- audits on models

def halfplane_sup(model: Model, obs: Observable, re_range=(1e-6, 1e3), n_re=40, max_points=4000):
    """Direct grid supremum of ``|r(lam)| / |z + lam|`` over ``z`` in the right half-plane."""
    _check_observable(model, obs)
    lam = model.spectrum_sample() if isinstance(model, Diagonal) else model.spectrum_sample(16, -6, 6)
    lam = lam[np.isfinite(lam)]
    r = obs.log_abs(lam)
    keep = np.isfinite(r)
    lam, r = lam[keep], r[keep]
    ims = np.unique(-lam.imag)
    if ims.size > max_points:
        ims = ims[np.linspace(0, ims.size - 1, max_points).astype(int)]
    xs = np.geomspace(*re_range, n_re)
    zr = np.repeat(xs, ims.size)
    zi = np.tile(ims, xs.size)
    return float(np.exp(np.max(_kernels.halfplane(zr, zi, lam.real, lam.imag, r))))


def sectoriality_audit(model: Model, g, lam_grid=None, growth_tol=1e-3):
    """``sup lam / |lam + g(mu)|`` over ``lam`` in the grid and ``mu`` in the spectrum."""
    lam_grid = np.geomspace(1e-6, 1e6, 121) if lam_grid is None else np.asarray(lam_grid, float)
    mu = model.spectrum_sample() if isinstance(model, Diagonal) else model.spectrum_sample(32)
    gm = np.asarray(g(mu), complex)
    finite = np.isfinite(gm)
    gm = gm[finite]
    if np.any(gm.real < -1e-12 * np.maximum(1.0, np.abs(gm))):
        raise PreconditionError("g must map the spectrum into the closed right half-plane")
    ratio = np.array([np.max(lam / np.abs(lam + gm)) for lam in lam_grid])
    dec = np.floor(np.log10(lam_grid) - math.log10(lam_grid[0]) + 1e-12).astype(int)
    maxima = np.array([ratio[dec == d].max() for d in np.unique(dec)])
    tail = maxima[-3:]
    growth = float(np.max(np.diff(tail) / tail[:-1])) if tail.size > 1 else 0.0
    return {"passed": bool(np.all(np.isfinite(maxima)) and growth <= growth_tol), "C": float(maxima.max()),
            "maxima": maxima, "growth": growth}
