"""Problem files, run reports and trace tables.

A problem file is JSON with the top-level keys ``dim``, ``operator_a``,
``operator_b``, ``cocoercive_c`` and optionally ``x0`` and ``params``.
Each operator is an object with a ``kind`` tag plus its parameters;
matrices are row-major nested arrays.  :func:`dump_problem` writes the
canonical form (sorted keys, 17 significant digits) so that
write → parse → write is byte-identical.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    Affine, BallIndicator, BoxIndicator, HuberGrad, LinearPSD, Problem, ScaledIdentity,
    Shifted, SpecError, SplittingError, SubdiffL1, SubdiffQuadratic, ZeroMap, ZeroOp,
)

__all__ = [
    "ProblemFileError", "ProblemFile", "parse_problem", "load_problem", "dump_problem",
    "problem_to_dict", "report_to_dict", "write_report", "write_trace", "canonical_json",
]


class ProblemFileError(SplittingError):
    pass


@dataclass(frozen=True, eq=False)
class ProblemFile:
    problem: Problem
    x0: np.ndarray | None = None
    params: dict | None = None


# kind -> (class, ordered field names, kinds of each field)
_OPS = {
    "zero": (ZeroOp, (), ()),
    "scaled_identity": (ScaledIdentity, ("alpha",), ("num",)),
    "affine": (Affine, ("M", "b"), ("mat", "vec")),
    "subdiff_quadratic": (SubdiffQuadratic, ("Q", "q"), ("mat", "vec")),
    "subdiff_l1": (SubdiffL1, ("w",), ("num",)),
    "box": (BoxIndicator, ("lo", "hi"), ("vec", "vec")),
    "ball": (BallIndicator, ("radius",), ("num",)),
    "shifted": (Shifted, ("base", "tau"), ("op", "num")),
}
_MAPS = {
    "zero": (ZeroMap, (), ()),
    "linear_psd": (LinearPSD, ("Q", "q"), ("mat", "vec")),
    "huber": (HuberGrad, ("mu", "p"), ("num", "vec")),
}
_TOP = {"dim", "operator_a", "operator_b", "cocoercive_c", "x0", "params"}
_PARAMS = {"gamma", "delta", "eta_fraction"}


# --------------------------------------------------------------------------
# canonical emitter


def _num(v):
    v = float(v)
    if not math.isfinite(v):
        raise ProblemFileError(f"non-finite number {v} cannot be written")
    s = format(v, ".17g")
    return "0" if s == "-0" else s


def _emit(obj, out, indent):
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            out.write("{}")
            return
        out.write("{\n")
        keys = sorted(obj)
        for i, k in enumerate(keys):
            out.write(f"{pad}  {json.dumps(k)}: ")
            _emit(obj[k], out, indent + 1)
            out.write(",\n" if i < len(keys) - 1 else "\n")
        out.write(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if obj and all(isinstance(v, (list, tuple)) for v in obj):
            out.write("[\n")
            for i, row in enumerate(obj):
                out.write(pad + "  ")
                _emit(row, out, indent + 1)
                out.write(",\n" if i < len(obj) - 1 else "\n")
            out.write(pad + "]")
        else:
            out.write("[" + ", ".join(_scalar(v) for v in obj) + "]")
    else:
        out.write(_scalar(obj))


def _scalar(v):
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return _num(v)


def canonical_json(obj):
    buf = io.StringIO()
    _emit(obj, buf, 0)
    buf.write("\n")
    return buf.getvalue()


# --------------------------------------------------------------------------
# specs <-> plain data


def _spec_to_dict(spec, table):
    for kind, (cls, names, kinds) in table.items():
        if type(spec) is cls:
            d = {"kind": kind}
            for name, k in zip(names, kinds):
                v = getattr(spec, name)
                if k == "op":
                    d[name] = _spec_to_dict(v, _OPS)
                elif k == "num":
                    d[name] = float(v)
                else:
                    d[name] = np.asarray(v, dtype=float).tolist()
            return d
    raise ProblemFileError(f"cannot serialize {type(spec).__name__}")


def problem_to_dict(problem, x0=None, params=None):
    d = {
        "dim": problem.dim,
        "operator_a": _spec_to_dict(problem.a, _OPS),
        "operator_b": _spec_to_dict(problem.b, _OPS),
        "cocoercive_c": _spec_to_dict(problem.c, _MAPS),
    }
    if x0 is not None:
        d["x0"] = np.asarray(x0, dtype=float).tolist()
    if params:
        d["params"] = {k: float(v) for k, v in params.items()}
    return d


def _number(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ProblemFileError(f"{where}: expected a number, got {v!r}")
    return float(v)


def _vector(v, where):
    if not isinstance(v, list):
        raise ProblemFileError(f"{where}: expected an array")
    return np.array([_number(x, where) for x in v], dtype=float)


def _matrix(v, where):
    if not isinstance(v, list) or not all(isinstance(r, list) for r in v):
        raise ProblemFileError(f"{where}: expected an array of rows")
    rows = [_vector(r, where) for r in v]
    if len({r.size for r in rows}) > 1:
        raise ProblemFileError(f"{where}: ragged matrix")
    return np.array(rows, dtype=float).reshape(len(rows), -1)


def _spec_from_dict(d, table, where):
    if not isinstance(d, dict):
        raise ProblemFileError(f"{where}: expected an object")
    kind = d.get("kind")
    if kind not in table:
        raise ProblemFileError(f"{where}: unknown kind {kind!r}; expected one of {sorted(table)}")
    cls, names, kinds = table[kind]
    extra = set(d) - set(names) - {"kind"}
    if extra:
        raise ProblemFileError(f"{where}: unknown keys {sorted(extra)}")
    missing = set(names) - set(d)
    if missing:
        raise ProblemFileError(f"{where}: missing keys {sorted(missing)}")
    args = []
    for name, k in zip(names, kinds):
        at = f"{where}.{name}"
        if k == "op":
            args.append(_spec_from_dict(d[name], _OPS, at))
        elif k == "num":
            args.append(_number(d[name], at))
        elif k == "vec":
            args.append(_vector(d[name], at))
        else:
            args.append(_matrix(d[name], at))
    try:
        return cls(*args)
    except SpecError as exc:
        raise ProblemFileError(f"{where}: {exc}") from exc


def parse_problem(text):
    """Parse problem-file text into a `ProblemFile`; raises ProblemFileError."""
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"invalid JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise ProblemFileError("top level must be an object")
    extra = set(d) - _TOP
    if extra:
        raise ProblemFileError(f"unknown top-level keys {sorted(extra)}")
    for key in ("dim", "operator_a", "operator_b", "cocoercive_c"):
        if key not in d:
            raise ProblemFileError(f"missing key {key!r}")
    dim = d["dim"]
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise ProblemFileError("dim must be a positive integer")
    try:
        problem = Problem(_spec_from_dict(d["operator_a"], _OPS, "operator_a"),
                          _spec_from_dict(d["operator_b"], _OPS, "operator_b"),
                          _spec_from_dict(d["cocoercive_c"], _MAPS, "cocoercive_c"), dim)
    except SplittingError as exc:
        if isinstance(exc, ProblemFileError):
            raise
        raise ProblemFileError(str(exc)) from exc
    x0 = None
    if "x0" in d:
        x0 = _vector(d["x0"], "x0")
        if x0.size != dim:
            raise ProblemFileError(f"x0 has {x0.size} entries, dim is {dim}")
    params = None
    if "params" in d:
        p = d["params"]
        if not isinstance(p, dict):
            raise ProblemFileError("params must be an object")
        extra = set(p) - _PARAMS
        if extra:
            raise ProblemFileError(f"params: unknown keys {sorted(extra)}")
        params = {k: _number(v, f"params.{k}") for k, v in p.items()}
    return ProblemFile(problem, x0, params)


def load_problem(path):
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read())


def dump_problem(problem, x0=None, params=None):
    """Canonical problem-file text."""
    if isinstance(problem, ProblemFile):
        problem, x0, params = problem.problem, problem.x0, problem.params
    return canonical_json(problem_to_dict(problem, x0, params))


# --------------------------------------------------------------------------
# outputs


def _finite_or_none(v):
    return float(v) if math.isfinite(v) else None


def report_to_dict(report):
    """Plain-data report; non-finite values (diverged runs) become null."""
    p = report.plan
    shadow = report.final_shadow
    return {
        "status": report.status.value,
        "n_iter": report.n_iter,
        "kkt": _finite_or_none(report.kkt),
        "residual": _finite_or_none(report.residuals[-1]),
        "shadow": shadow.tolist() if np.all(np.isfinite(shadow)) else None,
        "backend": report.backend,
        "plan": {"gamma": p.gamma, "delta": p.delta, "lambda": p.lam, "eta": p.eta,
                 "eta_star": p.eta_star, "regime": p.regime.value},
    }


def write_report(report, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(canonical_json(report_to_dict(report)))


def write_trace(report, path):
    """CSV with header ``n,residual,sqrt_n_times_residual,kkt``, one row per iteration."""
    r = report.residuals
    n = np.arange(r.size)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("n,residual,sqrt_n_times_residual,kkt\n")
        for i in range(r.size):
            fh.write(f"{i},{format(float(r[i]), '.17g')},"
                     f"{format(math.sqrt(n[i]) * float(r[i]), '.17g')},"
                     f"{format(float(report.kkts[i]), '.17g')}\n")
