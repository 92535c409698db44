"""Command-line front end.

Exit codes: 0 pass, 1 comparison or audit failure, 2 bad input, 3 runtime error.
"""

from __future__ import annotations

import argparse
import ast
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import cbf
from . import harness as hs
from . import opmodel as om
from . import rates as ra
from . import regvar as rv
from .errors import DecayScalesError, PreconditionError, RegimeParameterError, SpecError

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2, 3


# ---------------------------------------------------------------- output helpers

def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return "%.17g" % x


def dump_json(obj, indent=2, _level=0):
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dump_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        return "[\n" + ",\n".join(pad + dump_json(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_, int, np.integer, float, np.floating)):
        return fmt(obj)
    if isinstance(obj, complex):
        return dump_json([obj.real, obj.imag], indent, _level)
    return json.dumps(str(obj))


def to_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (v if isinstance(v, str) else fmt(v)) for v in row])
    return buf.getvalue()


def write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text, out=None):
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------- closed-form envelopes

_FUNCS = {"exp": np.exp, "log": np.log, "sqrt": np.sqrt}


def formula_envelope(text):
    """Envelope from an arithmetic expression in ``t`` (exp, log, sqrt, + - * / **)."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise SpecError(f"cannot parse formula {text!r}") from exc

    def ev(node, t):
        if isinstance(node, ast.Expression):
            return ev(node.body, t)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "t":
            return t
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand, t)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            a, b = ev(node.left, t), ev(node.right, t)
            ops = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply, ast.Div: np.divide,
                   ast.Pow: np.power}
            for k, f in ops.items():
                if isinstance(node.op, k):
                    return f(a, b)
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS
                and len(node.args) == 1 and not node.keywords):
            return _FUNCS[node.func.id](ev(node.args[0], t))
        raise SpecError(f"unsupported construct in formula {text!r}")

    ev(tree, np.array([2.0]))
    return ra.RateEnvelope(lambda x: np.log(ev(tree, np.exp(np.asarray(x, float)))), "formula", text, 0.0)


# ---------------------------------------------------------------- experiment specs

_PRESET_ALIASES = {"a": "alpha", "b": "beta"}


def preset_from_name(name):
    """``power-a2`` style shorthand for presets."""
    parts = name.split("-")
    i = 1
    while i < len(parts) and not (parts[i][:1] in "ab" and _is_number(parts[i][1:])):
        i += 1
    base = "-".join(parts[:i])
    if base not in om.PRESETS:
        raise SpecError(f"unknown model preset {name!r}; choose from {sorted(om.PRESETS)}")
    params = {_PRESET_ALIASES[p[0]]: float(p[1:]) for p in parts[i:]}
    return {"variant": "preset", "name": base, "params": params}


def _is_number(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def _slow(v):
    if v is None:
        return rv.Const(1.0)
    return rv.parse(v) if isinstance(v, str) else rv.from_dict(v)


@dataclass
class ExperimentSpec:
    model: dict
    observable: object = "InvA"
    regime: dict | None = None
    grids: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    seed: int = hs.DEFAULT_SEED
    outputs: dict = field(default_factory=dict)
    version: int = SCHEMA_VERSION

    _KEYS = ("version", "model", "observable", "regime", "grids", "tolerances", "seed", "outputs")

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise SpecError("experiment spec must be a JSON object")
        unknown = set(d) - set(cls._KEYS)
        if unknown:
            raise SpecError(f"unknown spec keys {sorted(unknown)}")
        if d.get("version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise SpecError(f"unsupported spec version {d.get('version')!r}")
        if "model" not in d:
            raise SpecError("spec needs a model")
        model = d["model"]
        if isinstance(model, str):
            model = preset_from_name(model)
        spec = cls(model=model, observable=d.get("observable", "InvA"), regime=d.get("regime"),
                   grids=dict(d.get("grids", {})), tolerances=dict(d.get("tolerances", {})),
                   seed=int(d.get("seed", hs.DEFAULT_SEED)), outputs=dict(d.get("outputs", {})),
                   version=SCHEMA_VERSION)
        spec.validate()
        return spec

    def to_dict(self):
        return {"version": self.version, "model": self.model, "observable": self.observable,
                "regime": self.regime, "grids": self.grids, "tolerances": self.tolerances,
                "seed": self.seed, "outputs": self.outputs}

    def validate(self):
        self.build_model()
        self.build_observable()
        lo, hi = self.t_range
        if not (0 < lo < hi and math.isfinite(hi)):
            raise SpecError("grids.t_range must satisfy 0 < t_min < t_max")
        if not self.points_per_decade >= 1:
            raise SpecError("grids.points_per_decade must be at least 1")
        if self.regime is not None and not isinstance(self.regime, dict):
            raise SpecError("regime must be an object")

    @property
    def t_range(self):
        try:
            lo, hi = self.grids.get("t_range", (1.0, 1e6))
            return float(lo), float(hi)
        except (TypeError, ValueError) as exc:
            raise SpecError("grids.t_range must be a pair of numbers") from exc

    @property
    def points_per_decade(self):
        return int(self.grids.get("points_per_decade", 8))

    def t_grid(self):
        lo, hi = self.t_range
        n = max(2, int(round(math.log10(hi / lo) * self.points_per_decade)) + 1)
        return np.geomspace(lo, hi, n)

    def build_model(self):
        return om.model_from_dict(self.model)

    def build_observable(self):
        return om.observable_from_dict(self.observable)

    def build_envelope(self, model=None):
        r = self.regime
        if r is None:
            raise SpecError("this command needs a regime")
        if "formula" in r:
            return formula_envelope(str(r["formula"]))
        if "log_corrected" in r:
            p = r["log_corrected"]
            return ra.regvarinf_formulas(float(p["alpha"]), float(p.get("beta", 0.0)), p.get("side", "slower"),
                                         p.get("eps"))
        fields = {k: r[k] for k in ("alpha", "beta", "eps", "c", "c_prime", "C", "C_prime") if k in r}
        try:
            regime = ra.RateRegime(str(r["regime"]), slow=_slow(r.get("slow")),
                                   **{k: float(v) for k, v in fields.items()})
        except KeyError as exc:
            raise SpecError("regime needs a 'regime' name, 'formula' or 'log_corrected'") from exc
        profiles = {}
        for key, kind in (("M", "Mcap"), ("m", "mcap")):
            src = r.get("profiles", {}).get(key)
            if src is None:
                continue
            if src == "model":
                mdl = model or self.build_model()
                profiles[key] = (lambda k: lambda s: om.resolvent_profile(mdl, k, s))(kind)
            elif isinstance(src, dict):
                profiles[key] = rv.RegVarFn(float(src["index"]), _slow(src.get("slow")))
            else:
                raise SpecError(f"profile {key} must be 'model' or an index/slow object")
        return ra.predict(regime, **profiles)


def load_spec(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read spec {path!r}: {exc}") from exc
    return ExperimentSpec.from_dict(data)


# ---------------------------------------------------------------- commands

def cmd_conjugate(args):
    text = args.expr
    if text is None and args.spec:
        with open(args.spec) as fh:
            text = fh.read().strip()
    if not text:
        raise SpecError("give --expr or --spec with an expression")
    expr = rv.parse(text)
    conj = rv.conjugate(expr)
    grid = rv.decade_grid(args.smin, args.smax, args.per_decade)
    u = grid.log_s
    log_l = expr.log_at(u)
    log_c = conj.log_at(u)
    closed = conj.closed_log_at(u)
    ratio = np.exp(log_c - closed) if closed is not None else None
    identity = rv.conjugate_identity_error(expr, np.exp(u[u >= conj.tail_log_start]))
    ok = bool(identity <= (args.tol if args.tol is not None else 1e-9))
    audit = None
    if closed is not None:
        audit = rv.conjugate_ratio_audit(expr, grid)
        ok = ok and audit.passed
    rows = [(float(np.exp(x)), float(np.exp(a)), float(np.exp(b)),
             None if closed is None else float(np.exp(c)), None if ratio is None else float(r))
            for x, a, b, c, r in zip(u, log_l, log_c, closed if closed is not None else u,
                                     ratio if ratio is not None else u)]
    if args.format == "json":
        out = {"expr": rv.to_text(expr), "identity_error": identity, "closed_form": closed is not None,
               "ratio_audit": None if audit is None else audit.passed, "passed": ok,
               "rows": [dict(zip(("s", "l", "conjugate", "closed", "ratio"), r)) for r in rows]}
        emit(dump_json(out), args.out)
    else:
        emit(to_csv(["s", "l", "conjugate", "closed", "ratio"], rows), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_predict(args):
    spec = load_spec(args.spec)
    env = spec.build_envelope()
    t = spec.t_grid()
    pred = env(t)
    if args.format == "json":
        emit(dump_json({"formula": env.formula, "regime": env.regime, "validity_start": env.validity_start,
                        "t": t, "predicted": pred, "config": spec.to_dict(), "version": __version__}), args.out)
    else:
        emit(to_csv(["t", "predicted"], zip(t, pred)), args.out)
    return EXIT_OK


def _simulate(spec):
    model = spec.build_model()
    return model, hs.run_decay_experiment(model, spec.build_observable(), spec.t_range, spec.points_per_decade)


def cmd_simulate(args):
    spec = load_spec(args.spec)
    _, curve = _simulate(spec)
    n = curve.running_sup()
    if args.format == "json":
        emit(dump_json({"t": curve.t, "measured": curve.values, "running_sup": n,
                        "failures": {fmt(k): v for k, v in curve.failures.items()},
                        "config": spec.to_dict(), "version": __version__}), args.out)
    else:
        emit(to_csv(["t", "measured", "running_sup"], zip(curve.t, curve.values, n)), args.out)
    return EXIT_OK


def cmd_verify(args):
    spec = load_spec(args.spec)
    model, curve = _simulate(spec)
    env = spec.build_envelope(model)
    tol = spec.tolerances
    report = hs.compare(curve, env, window=tol.get("window"), slope_expected=tol.get("slope_expected"),
                        slope_tol=float(tol.get("slope", args.tol if args.tol is not None else 0.05)),
                        band_max=tol.get("band"))
    passed = dict(report.passed)
    if "band_range" in tol:
        lo, hi = tol["band_range"]
        passed["band_range"] = bool(report.band[0] >= lo and report.band[1] <= hi)
    ok = all(passed.values())
    body = report.to_dict()
    body.update({"passed": passed, "pass": ok, "seed": spec.seed, "config": spec.to_dict(),
                 "version": __version__, "formula": env.formula})
    csv_text = report.to_csv()
    json_text = dump_json(body)
    if spec.outputs.get("csv"):
        write_atomic(spec.outputs["csv"], csv_text)
    if spec.outputs.get("json"):
        write_atomic(spec.outputs["json"], json_text)
    emit(json_text if args.format == "json" else csv_text, args.out)
    if not args.quiet:
        print(f"verify: slope {report.slope_fit:.4f} (expected {report.slope_expected:.4f}), "
              f"band [{report.band[0]:.6g}, {report.band[1]:.6g}] -> {'pass' if ok else 'FAIL'}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_audit(args):
    seed = args.seed if args.seed is not None else hs.DEFAULT_SEED
    kind = args.kind
    if kind == "karamata":
        sigma = args.sigma
        g = rv.RegVarFn(1.0 - sigma, _slow(args.slow))
        lam = args.lam
        s = float(cbf.stieltjes_part(cbf.StieltjesTriple(0, 0, g), [lam])[0].real)
        ratio = s * lam ** sigma / math.exp(float(g.slow.log_at(max(math.log(lam), g.slow.log_start))))
        const = cbf.karamata_constant(sigma)
        err = abs(ratio / const - 1.0)
        tol = args.tol if args.tol is not None else 1e-6
        body = {"kind": "karamata", "sigma": sigma, "lam": lam, "ratio": ratio, "constant": const,
                "rel_error": err, "passed": err <= tol}
    elif kind in hs.AUDIT_KINDS:
        kw = {}
        if kind in ("moment", "bernstein"):
            kw["n"] = args.n
        model = None
        if args.model:
            model = om.model_from_dict(preset_from_name(args.model))
            if kind == "transfer":
                obs = args.obs or "Identity"
                kw["obs"] = om.observable_from_dict(json.loads(obs) if obs.lstrip().startswith("{") else obs)
        rep = hs.inequality_audit(kind, trials=args.trials, seed=seed, model=model, **kw)
        body = rep.to_dict()
    else:
        raise SpecError(f"unknown audit {kind!r}")
    body["version"] = __version__
    emit(dump_json(body), args.out)
    return EXIT_OK if body["passed"] else EXIT_FAIL


def cmd_transform(args):
    slow = _slow(args.slow)
    g = rv.RegVarFn(args.index, slow)
    fn = cbf.SpecialFn(args.kind, cbf.StieltjesTriple(args.a, args.b, g))
    derived = cbf.duality_transform(fn, args.how)
    lam = np.geomspace(args.lmin, args.lmax, args.points)
    vals = np.real(np.asarray(derived(lam)))
    member = cbf.membership_audit(derived, lam)
    if args.format == "json":
        emit(dump_json({"how": args.how, "class": derived.kind, "membership": member, "lam": lam,
                        "value": vals, "version": __version__}), args.out)
    else:
        emit(to_csv(["lam", "value"], zip(lam, vals)), args.out)
    return EXIT_OK if member else EXIT_FAIL


# ---------------------------------------------------------------- entry point

def build_parser():
    p = argparse.ArgumentParser(prog="decayscales", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write output here (atomically) instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--quiet", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("conjugate", parents=[common], help="numeric and closed-form conjugates")
    c.add_argument("--expr")
    c.add_argument("--spec", help="file holding the expression")
    c.add_argument("--smin", type=float, default=1e3)
    c.add_argument("--smax", type=float, default=1e12)
    c.add_argument("--per-decade", type=int, default=4)
    c.set_defaults(func=cmd_conjugate)

    for name, func, help_ in (("predict", cmd_predict, "envelope for a regime"),
                              ("simulate", cmd_simulate, "measured decay curve"),
                              ("verify", cmd_verify, "measured decay against the envelope")):
        q = sub.add_parser(name, parents=[common], help=help_)
        q.add_argument("--spec", required=True)
        q.set_defaults(func=func)

    a = sub.add_parser("audit", parents=[common], help="inequality and constant audits")
    a.add_argument("kind", choices=hs.AUDIT_KINDS + ("karamata",))
    a.add_argument("--n", type=int, default=64)
    a.add_argument("--trials", type=int, default=1000)
    a.add_argument("--model", help="preset shorthand such as power-a2")
    a.add_argument("--obs", help="observable name for transfer audits on a single model")
    a.add_argument("--sigma", type=float, default=0.5)
    a.add_argument("--slow", help="slow part for the karamata audit, e.g. 'logpow(1)'")
    a.add_argument("--lam", type=float, default=1e4)
    a.set_defaults(func=cmd_audit)

    t = sub.add_parser("transform", parents=[common], help="dualities between special functions")
    t.add_argument("how", choices=("times_lambda", "over_lambda", "reciprocal", "lambda_over", "inversion"))
    t.add_argument("--kind", choices=(cbf.STIELTJES, cbf.BERNSTEIN), default=cbf.BERNSTEIN)
    t.add_argument("--a", type=float, default=0.0)
    t.add_argument("--b", type=float, default=0.0)
    t.add_argument("--index", type=float, default=0.5, help="index of the distribution function")
    t.add_argument("--slow")
    t.add_argument("--lmin", type=float, default=1e-3)
    t.add_argument("--lmax", type=float, default=1e3)
    t.add_argument("--points", type=int, default=25)
    t.set_defaults(func=cmd_transform)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (SpecError, RegimeParameterError, PreconditionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DecayScalesError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
