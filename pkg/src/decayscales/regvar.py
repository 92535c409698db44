"""Slowly varying expressions, de Bruijn conjugates and asymptotic inverses.

Every expression is evaluated in log space: ``log_at(u)`` returns
``log l(e**u)``.  Working with ``u = log s`` keeps the audits meaningful far
beyond the range of double precision ``s``.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import (BracketError, DomainError, MonotonicityError, OverflowError,
                     PreconditionError, SpecError)

LOG_FLOOR = math.log(3.0)
_LOG_MAX = math.log(np.finfo(float).max)
_LOG_TINY = math.log(np.finfo(float).tiny)
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _iterated_exp(j):
    x = 1.0
    for _ in range(j):
        x = math.exp(x) if x < _LOG_MAX else math.inf
    return x


class SlowExpr:
    """Base node.  Subclasses implement ``log_at``, ``index_at`` and ``log_start``."""

    def log_at(self, u):
        raise NotImplementedError

    def index_at(self, u):
        raise NotImplementedError

    @property
    def log_start(self) -> float:
        raise NotImplementedError

    @property
    def domain_start(self) -> float:
        return math.exp(self.log_start) if self.log_start < _LOG_MAX else math.inf

    def __mul__(self, other):
        return Product((self, other))

    def __pow__(self, a):
        return RealPower(self, float(a))

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Const(SlowExpr):
    c: float

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0):
            raise SpecError(f"const needs a positive finite value, got {self.c}")

    def log_at(self, u):
        return np.full_like(np.asarray(u, float), math.log(self.c))

    def index_at(self, u):
        return np.zeros_like(np.asarray(u, float))

    @property
    def log_start(self):
        return LOG_FLOOR


@dataclass(frozen=True)
class LogPow(SlowExpr):
    beta: float

    def __post_init__(self):
        if not math.isfinite(self.beta):
            raise SpecError("logpow exponent must be finite")

    def log_at(self, u):
        return self.beta * np.log(np.asarray(u, float))

    def index_at(self, u):
        return self.beta / np.asarray(u, float)

    @property
    def log_start(self):
        return LOG_FLOOR


@dataclass(frozen=True)
class ExpLogPow(SlowExpr):
    beta: float

    def __post_init__(self):
        if not (0.0 < self.beta < 1.0):
            raise SpecError(f"explogpow exponent must lie in (0, 1), got {self.beta}")

    @classmethod
    def unchecked(cls, beta):
        """Build without validation; used to feed audits with non-slowly varying input."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "beta", float(beta))
        return obj

    def log_at(self, u):
        return np.asarray(u, float) ** self.beta

    def index_at(self, u):
        return self.beta * np.asarray(u, float) ** (self.beta - 1.0)

    @property
    def log_start(self):
        return LOG_FLOOR


@dataclass(frozen=True)
class IterLog(SlowExpr):
    k: int
    beta: float

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise SpecError(f"iterlog depth must be an integer >= 2, got {self.k}")
        if not math.isfinite(self.beta):
            raise SpecError("iterlog exponent must be finite")

    def _chain(self, u):
        chain = [np.asarray(u, float)]
        for _ in range(self.k - 1):
            chain.append(np.log(chain[-1]))
        return chain

    def log_at(self, u):
        return self.beta * np.log(self._chain(u)[-1])

    def index_at(self, u):
        denom = np.ones_like(np.asarray(u, float))
        for level in self._chain(u):
            denom = denom * level
        return self.beta / denom

    @property
    def log_start(self):
        return max(LOG_FLOOR, _iterated_exp(self.k - 1))


@dataclass(frozen=True)
class Product(SlowExpr):
    factors: tuple

    def __post_init__(self):
        if len(self.factors) == 0:
            raise SpecError("product needs at least one factor")
        object.__setattr__(self, "factors", tuple(self.factors))

    def log_at(self, u):
        return sum(f.log_at(u) for f in self.factors)

    def index_at(self, u):
        return sum(f.index_at(u) for f in self.factors)

    @property
    def log_start(self):
        return max(f.log_start for f in self.factors)


@dataclass(frozen=True)
class RealPower(SlowExpr):
    inner: SlowExpr
    a: float

    def __post_init__(self):
        if not math.isfinite(self.a):
            raise SpecError("power exponent must be finite")

    def log_at(self, u):
        return self.a * self.inner.log_at(u)

    def index_at(self, u):
        return self.a * self.inner.index_at(u)

    @property
    def log_start(self):
        return self.inner.log_start


@dataclass(frozen=True)
class ArgPower(SlowExpr):
    """``l(s**a)`` for ``a > 0``."""

    inner: SlowExpr
    a: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0):
            raise SpecError(f"argpow exponent must be positive, got {self.a}")

    def log_at(self, u):
        return self.inner.log_at(self.a * np.asarray(u, float))

    def index_at(self, u):
        return self.a * self.inner.index_at(self.a * np.asarray(u, float))

    @property
    def log_start(self):
        return max(LOG_FLOOR, self.inner.log_start / self.a)


# ---------------------------------------------------------------- evaluation

def _check_domain(expr, u):
    u = np.asarray(u, float)
    if np.any(np.isnan(u)) or np.any(u < expr.log_start * (1 - 1e-12)):
        raise DomainError(f"argument below domain start {expr.domain_start:.6g} of {to_text(expr)}")
    return u


def log_eval(expr: SlowExpr, log_s):
    """``log l(s)`` given ``log s``."""
    return expr.log_at(_check_domain(expr, log_s))


def evaluate(expr: SlowExpr, s):
    s = np.asarray(s, float)
    if np.any(~(s > 0)):
        raise DomainError("slowly varying expressions take positive arguments")
    out = log_eval(expr, np.log(s))
    if np.any(out > _LOG_MAX) or np.any(out < _LOG_TINY):
        raise OverflowError(f"{to_text(expr)} leaves double range; use log_eval")
    val = np.exp(out)
    return float(val) if val.ndim == 0 else val


def index_function(expr: SlowExpr, log_s):
    """Logarithmic derivative ``d log l / d log s``."""
    return expr.index_at(_check_domain(expr, log_s))


def log_increment(expr: SlowExpr, u, h):
    """``log l(e**(u+h)) - log l(e**u)`` without cancellation when ``h << u``."""
    u = np.asarray(u, float)
    h = np.broadcast_to(np.asarray(h, float), u.shape)
    direct = expr.log_at(u + h) - expr.log_at(u)
    small = np.abs(h) < 1e-2 * np.abs(u)
    if not np.any(small):
        return direct
    nodes = u[..., None] + 0.5 * h[..., None] * (_GL_X + 1.0)
    quad = 0.5 * h * (expr.index_at(nodes) * _GL_W).sum(axis=-1)
    return np.where(small, quad, direct)


# ---------------------------------------------------------------- grids

class Grid(NamedTuple):
    """Points in ``log s`` with a block label used for per-decade statistics."""

    log_s: np.ndarray
    block: np.ndarray


def _blocks(x10, lo10, hi10):
    n = max(1, int(math.ceil(hi10 - lo10 - 1e-9)))
    return np.minimum(np.floor(x10 - lo10 + 1e-12).astype(int), n - 1)


def decade_grid(s_min, s_max, per_decade=16) -> Grid:
    """Log-spaced ``s`` with one block per decade of ``s``."""
    lo, hi = math.log10(s_min), math.log10(s_max)
    x10 = np.linspace(lo, hi, max(2, int(round((hi - lo) * per_decade)) + 1))
    return Grid(x10 * math.log(10.0), _blocks(x10, lo, hi))


def deep_grid(log_min, log_max, per_decade=16) -> Grid:
    """Log-spaced ``log s`` with one block per decade of ``log s``."""
    lo, hi = math.log10(log_min), math.log10(log_max)
    x10 = np.linspace(lo, hi, max(2, int(round((hi - lo) * per_decade)) + 1))
    return Grid(10.0 ** x10, _blocks(x10, lo, hi))


def block_maxima(grid: Grid, dev):
    dev = np.asarray(dev, float)
    return np.array([np.max(dev[grid.block == b]) for b in np.unique(grid.block)])


def tends_to_zero(maxima, tol):
    """Top block below ``tol`` and the last three block maxima nonincreasing."""
    maxima = np.asarray(maxima, float)
    if maxima.size == 0 or not np.all(np.isfinite(maxima)):
        return False
    tail = maxima[-3:]
    return bool(tail[-1] < tol and np.all(np.diff(tail) <= 1e-12 * np.maximum(1.0, tail[:-1])))


@dataclass
class AuditResult:
    passed: bool
    grid: Grid
    trace: np.ndarray
    maxima: np.ndarray
    details: dict


def _similar(grid, dev, tol, **details):
    dev = np.abs(np.asarray(dev, float))
    m = block_maxima(grid, dev)
    return AuditResult(tends_to_zero(m, tol), grid, dev, m, details)


# ---------------------------------------------------------------- monotone tails

def monotone_tail(phi: Callable, log_lo: float, log_hi: float, direction=1, samples=64) -> float:
    """Smallest sampled ``u`` beyond which ``phi`` is strictly monotone.

    ``direction=1`` asks for increase, ``-1`` for decrease.  Each pass restarts
    past the last bad step on a grid four times finer; the answer must survive
    at least one refinement.
    """
    u = np.geomspace(log_lo, log_hi, samples)
    for rounds in range(5):
        bad = np.nonzero(direction * np.diff(phi(u)) <= 0)[0]
        if bad.size == 0 and rounds > 0:
            return float(u[0])
        start = 0 if bad.size == 0 else bad[-1] + 1
        if start >= u.size - 2:
            raise MonotonicityError("no monotone tail found on the sampled range")
        u = np.geomspace(u[start], log_hi, 4 * (u.size - start))
    raise MonotonicityError("monotone tail failed certification on the refined grid")


def _tail_hi(log_lo):
    return max(1e6, 1e3 * log_lo)


def increasing_tail(expr: SlowExpr) -> float:
    """Log of the point from which ``s * l(s)`` is increasing."""
    lo = expr.log_start
    return monotone_tail(lambda u: u + expr.log_at(u), lo, _tail_hi(lo))


def eventual_direction(expr: SlowExpr) -> int:
    """+1 if ``l`` is eventually nondecreasing, -1 if nonincreasing; constants count as +1."""
    lo = expr.log_start
    u = np.geomspace(lo, _tail_hi(lo), 256)
    eps = expr.index_at(u)
    if np.all(eps == 0):
        return 1
    for direction in (1, -1):
        try:
            monotone_tail(expr.log_at, lo, _tail_hi(lo), direction)
            return direction
        except MonotonicityError:
            pass
    raise MonotonicityError(f"{to_text(expr)} is not eventually monotone on the sampled range")


# ---------------------------------------------------------------- root finding

def solve_increasing(phi: Callable, targets, lo: float, rtol=1e-12):
    """Vectorised bracket-and-bisect solve of ``phi(u) = target`` for ``u >= lo``."""
    v = np.atleast_1d(np.asarray(targets, float))
    if np.any(v < phi(np.array([lo]))[0] - 1e-15 * abs(lo)):
        raise BracketError("target below the value at the start of the monotone tail")
    a = np.full_like(v, lo)
    b = np.full_like(v, max(2.0 * lo, lo + 1.0))
    for _ in range(1100):
        low = phi(b) < v
        if not low.any():
            break
        a = np.where(low, b, a)
        b = np.where(low, 2.0 * b, b)
    else:
        raise BracketError("bracket doubling did not reach the target")
    for _ in range(400):
        if np.all(b - a <= rtol * np.abs(b)):
            break
        mid = 0.5 * (a + b)
        up = phi(mid) >= v
        b = np.where(up, mid, b)
        a = np.where(up, a, mid)
    fa, fb = phi(a), phi(b)
    span = fb - fa
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(span > 0, a + (v - fa) * (b - a) / span, b)
    return np.clip(w, a, b)


# ---------------------------------------------------------------- conjugates

def _normal_form(expr):
    """Return ``(log_c, logpow_beta, {explog_beta: coeff})`` or None when not catalogued."""
    if isinstance(expr, Const):
        return math.log(expr.c), 0.0, {}
    if isinstance(expr, LogPow):
        return 0.0, expr.beta, {}
    if isinstance(expr, ExpLogPow):
        return 0.0, 0.0, {expr.beta: 1.0}
    if isinstance(expr, IterLog):
        return None
    if isinstance(expr, Product):
        parts = [_normal_form(f) for f in expr.factors]
        if any(p is None for p in parts):
            return None
        explog = {}
        for _, _, e in parts:
            for b, c in e.items():
                explog[b] = explog.get(b, 0.0) + c
        return sum(p[0] for p in parts), sum(p[1] for p in parts), explog
    if isinstance(expr, RealPower):
        p = _normal_form(expr.inner)
        if p is None:
            return None
        return expr.a * p[0], expr.a * p[1], {b: expr.a * c for b, c in p[2].items()}
    if isinstance(expr, ArgPower):
        p = _normal_form(expr.inner)
        if p is None:
            return None
        a = expr.a
        return p[0] + p[1] * math.log(a), p[1], {b: c * a ** b for b, c in p[2].items()}
    return None


def closed_conjugate(expr: SlowExpr):
    """Catalogued asymptotic form of the conjugate as a log-space callable, or None."""
    nf = _normal_form(expr)
    if nf is None:
        return None
    log_c, beta, explog = nf
    explog = {b: c for b, c in explog.items() if c != 0.0}
    if len(explog) > 1 or (explog and beta != 0.0):
        return None
    if not explog:
        return lambda v: -log_c - beta * np.log(np.asarray(v, float))
    (b, c), = explog.items()
    if b < 0.5:
        return lambda v: -log_c - c * np.asarray(v, float) ** b
    if b < 2.0 / 3.0:
        return lambda v: (-log_c - c * np.asarray(v, float) ** b
                          + c * c * b * np.asarray(v, float) ** (2 * b - 1))
    return None


class Conjugate:
    """Numeric de Bruijn conjugate ``(s l(s))^{-1}(s) / s``."""

    def __init__(self, expr: SlowExpr):
        self.expr = expr
        self.tail_log_start = increasing_tail(expr)
        self.closed = closed_conjugate(expr)
        self._phi = lambda u: u + expr.log_at(u)
        self.log_start = float(self._phi(np.array([self.tail_log_start]))[0])

    @property
    def domain_start(self):
        return math.exp(self.log_start) if self.log_start < _LOG_MAX else math.inf

    def log_at(self, v):
        v = np.asarray(v, float)
        w = solve_increasing(self._phi, v, self.tail_log_start)
        return (w - np.atleast_1d(v)).reshape(v.shape)

    def evaluate(self, s):
        s = np.asarray(s, float)
        out = np.exp(self.log_at(np.log(s)))
        return float(out) if out.ndim == 0 else out

    def closed_log_at(self, v):
        if self.closed is None:
            return None
        return self.closed(v)


def conjugate(expr: SlowExpr) -> Conjugate:
    return Conjugate(expr)


# ---------------------------------------------------------------- regularly varying functions

@dataclass(frozen=True)
class RegVarFn:
    """``s**index * l(s)``."""

    index: float
    slow: SlowExpr

    def log_at(self, u):
        return self.index * np.asarray(u, float) + self.slow.log_at(u)

    def evaluate(self, s):
        s = np.asarray(s, float)
        out = self.log_at(_check_domain(self.slow, np.log(s)))
        val = np.exp(out)
        return float(val) if val.ndim == 0 else val


class Inverse(NamedTuple):
    exact: Callable
    closed: Callable
    catalogued: bool
    log_start: float


def asymptotic_inverse(f: RegVarFn) -> Inverse:
    """Exact numeric inverse of ``f`` and the conjugate-based asymptotic form, both in log space.

    For ``f(s) = s**a * l(s)`` write ``l(s) = m(s**a)`` with ``m = argpow(l, 1/a)``;
    then ``f^{-1}(y) = y**(1/a) * m#(y)**(1/a)``.
    """
    if not f.index > 0:
        raise DomainError("asymptotic inverses need a positive index")
    a = f.index
    tail = monotone_tail(f.log_at, f.slow.log_start, _tail_hi(f.slow.log_start))
    phi = f.log_at

    def exact(v):
        v = np.asarray(v, float)
        return solve_increasing(phi, v, tail).reshape(v.shape)

    inner = ArgPower(f.slow, 1.0 / a)
    closed_conj = closed_conjugate(inner)
    if closed_conj is None:
        conj = Conjugate(inner)
        closed_conj = conj.log_at

    def closed(v):
        v = np.asarray(v, float)
        return (v + closed_conj(v)) / a

    return Inverse(exact, closed, closed_conjugate(inner) is not None,
                   float(phi(np.array([tail]))[0]))


# ---------------------------------------------------------------- audits

def _default_deep():
    return deep_grid(10.0, 1e12)


def slow_variation_audit(expr: SlowExpr, lambdas=(0.5, 2.0, 10.0), grid: Grid | None = None, tol=0.05):
    """Check ``l(lambda s) / l(s) -> 1`` for each ``lambda``."""
    grid = grid or _default_deep()
    u = grid.log_s
    worst = np.zeros_like(u)
    for lam in lambdas:
        h = math.log(lam)
        ok = u + h >= expr.log_start
        inc = np.where(ok, log_increment(expr, np.where(ok, u, expr.log_start + abs(h)), h), np.nan)
        worst = np.fmax(worst, np.abs(np.expm1(inc)))
    return _similar(grid, worst, tol, lambdas=tuple(lambdas))


def db_symmetry_audit(expr: SlowExpr, grid: Grid | None = None, tol=0.05):
    """Check ``l(s l(s)) / l(s) -> 1``; needs ``l`` eventually monotone."""
    eventual_direction(expr)
    grid = grid or _default_deep()
    u = grid.log_s
    h = expr.log_at(u)
    ok = u + h >= expr.log_start
    inc = np.full_like(u, np.nan)
    inc[ok] = log_increment(expr, u[ok], h[ok])
    with np.errstate(over="ignore"):
        dev = np.expm1(inc)
    return _similar(grid, dev, tol)


def potter_bounds_audit(expr: SlowExpr, gamma: float, grid: Grid | None = None):
    """Empirical Potter constants over all grid pairs plus eventual monotonicity of ``s**(+-gamma) l``."""
    if not gamma > 0:
        raise PreconditionError("gamma must be positive")
    grid = grid or decade_grid(1e3, 1e12, 4)
    u = grid.log_s
    lv = expr.log_at(u)
    i, j = np.triu_indices(u.size)
    r = lv[j] - lv[i]
    d = u[j] - u[i]
    lower = float(np.exp(np.min(r + gamma * d)))
    upper = float(np.exp(np.max(r - gamma * d)))
    lo, hi = expr.log_start, _tail_hi(expr.log_start)
    details = {"c": lower, "C": upper}
    try:
        details["increasing_from"] = math.exp(min(monotone_tail(lambda x: gamma * x + expr.log_at(x), lo, hi, 1), 700))
        details["decreasing_from"] = math.exp(min(monotone_tail(lambda x: -gamma * x + expr.log_at(x), lo, hi, -1), 700))
        passed = math.isfinite(lower) and math.isfinite(upper) and lower > 0
    except MonotonicityError as exc:
        details["error"] = str(exc)
        passed = False
    return AuditResult(passed, grid, np.array([lower, upper]), np.array([]), details)


def log_perturbation_audit(f: RegVarFn, delta: float, grid: Grid | None = None, growth_tol=0.1):
    """Check ``f^{-1}(s) <= C (f log)^{-1}(s) (log s)**delta`` and report the smallest ``C``."""
    a = f.index
    if delta < 1.0 / a - 1e-12:
        raise PreconditionError("delta must be at least 1/index")
    if abs(delta - 1.0 / a) <= 1e-12 and eventual_direction(f.slow) < 0:
        raise PreconditionError("delta = 1/index needs an eventually increasing slow part")
    g = RegVarFn(a, Product((f.slow, LogPow(1.0))))
    inv_f, inv_g = asymptotic_inverse(f), asymptotic_inverse(g)
    grid = grid or deep_grid(max(10.0, inv_f.log_start, inv_g.log_start) * 1.01, 1e8)
    v = grid.log_s
    log_ratio = inv_f.exact(v) - inv_g.exact(v) - delta * np.log(v)
    m = block_maxima(grid, log_ratio)
    growth = float(m[-1] - m[-2]) if m.size > 1 else 0.0
    return AuditResult(growth <= growth_tol, grid, np.exp(log_ratio), np.exp(m),
                       {"C": float(np.exp(np.max(log_ratio))), "top_growth": growth})


def conjugate_identity_error(expr: SlowExpr, s_values):
    """``max |l(s) l#(s l(s)) - 1|`` over the given ``s``."""
    u = np.log(np.asarray(s_values, float))
    conj = Conjugate(expr)
    lv = log_eval(expr, u)
    return float(np.max(np.abs(np.expm1(lv + conj.log_at(u + lv)))))


def conjugate_ratio_audit(expr: SlowExpr, grid: Grid | None = None, tol=0.25):
    """Numeric conjugate over its catalogued closed form, per block."""
    conj = Conjugate(expr)
    if conj.closed is None:
        raise PreconditionError(f"no catalogued closed form for {to_text(expr)}")
    grid = grid or decade_grid(1e3, 1e12, 8)
    ratio = np.exp(conj.log_at(grid.log_s) - conj.closed(grid.log_s))
    res = _similar(grid, ratio - 1.0, tol)
    res.details["ratio"] = ratio
    return res


# ---------------------------------------------------------------- text and json forms

_NAMES = {"const": Const, "logpow": LogPow, "explogpow": ExpLogPow}


def _num(x):
    return repr(float(x)) if float(x) != int(x) or abs(x) > 1e15 else str(int(x))


def to_text(expr: SlowExpr) -> str:
    if isinstance(expr, Const):
        return f"const({_num(expr.c)})"
    if isinstance(expr, LogPow):
        return f"logpow({_num(expr.beta)})"
    if isinstance(expr, ExpLogPow):
        return f"explogpow({_num(expr.beta)})"
    if isinstance(expr, IterLog):
        return f"iterlog({int(expr.k)}, {_num(expr.beta)})"
    if isinstance(expr, Product):
        return "*".join(to_text(f) for f in expr.factors)
    if isinstance(expr, RealPower):
        return f"pow({to_text(expr.inner)}, {_num(expr.a)})"
    if isinstance(expr, ArgPower):
        return f"argpow({to_text(expr.inner)}, {_num(expr.a)})"
    raise SpecError(f"unknown node {expr!r}")


def _number(node):
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        x = _number(node.operand)
        return -x if isinstance(node.op, ast.USub) else x
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Div):
        return _number(node.left) / _number(node.right)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return float(node.value)
    raise SpecError("expected a number")


def _build(node):
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Mult):
        return Product((_build(node.left), _build(node.right)))
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Pow):
        return RealPower(_build(node.left), _number(node.right))
    if not (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)) or node.keywords:
        raise SpecError("expected a call such as logpow(1)")
    name, args = node.func.id, node.args
    if name in _NAMES and len(args) == 1:
        return _NAMES[name](_number(args[0]))
    if name == "iterlog" and len(args) == 2:
        k = _number(args[0])
        if k != int(k):
            raise SpecError("iterlog depth must be an integer")
        return IterLog(int(k), _number(args[1]))
    if name in ("pow", "argpow") and len(args) == 2:
        cls = RealPower if name == "pow" else ArgPower
        return cls(_build(args[0]), _number(args[1]))
    raise SpecError(f"unknown constructor {name} with {len(args)} arguments")


def _flatten(expr):
    if isinstance(expr, Product):
        out = []
        for f in map(_flatten, expr.factors):
            out.extend(f.factors if isinstance(f, Product) else [f])
        return Product(tuple(out))
    if isinstance(expr, RealPower):
        return RealPower(_flatten(expr.inner), expr.a)
    if isinstance(expr, ArgPower):
        return ArgPower(_flatten(expr.inner), expr.a)
    return expr


def parse(text: str) -> SlowExpr:
    """Parse e.g. ``logpow(-2)*iterlog(2, 1)``; raises SpecError on malformed input."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise SpecError(f"cannot parse expression {text!r}") from exc
    try:
        return _flatten(_build(tree.body))
    except (TypeError, ZeroDivisionError) as exc:
        raise SpecError(str(exc)) from exc


def to_dict(expr: SlowExpr) -> dict:
    if isinstance(expr, Const):
        return {"node": "const", "c": expr.c}
    if isinstance(expr, LogPow):
        return {"node": "logpow", "beta": expr.beta}
    if isinstance(expr, ExpLogPow):
        return {"node": "explogpow", "beta": expr.beta}
    if isinstance(expr, IterLog):
        return {"node": "iterlog", "k": int(expr.k), "beta": expr.beta}
    if isinstance(expr, Product):
        return {"node": "product", "factors": [to_dict(f) for f in expr.factors]}
    if isinstance(expr, RealPower):
        return {"node": "pow", "inner": to_dict(expr.inner), "a": expr.a}
    if isinstance(expr, ArgPower):
        return {"node": "argpow", "inner": to_dict(expr.inner), "a": expr.a}
    raise SpecError(f"unknown node {expr!r}")


def from_dict(d) -> SlowExpr:
    if isinstance(d, str):
        return parse(d)
    try:
        kind = d["node"]
        if kind == "const":
            return Const(float(d["c"]))
        if kind == "logpow":
            return LogPow(float(d["beta"]))
        if kind == "explogpow":
            return ExpLogPow(float(d["beta"]))
        if kind == "iterlog":
            return IterLog(int(d["k"]), float(d["beta"]))
        if kind == "product":
            return Product(tuple(from_dict(f) for f in d["factors"]))
        if kind == "pow":
            return RealPower(from_dict(d["inner"]), float(d["a"]))
        if kind == "argpow":
            return ArgPower(from_dict(d["inner"]), float(d["a"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed expression object {d!r}") from exc
    raise SpecError(f"unknown node kind {d.get('node')!r}")
