"""Command-line front end: JSON problem file in, JSON report out.

    ncshilov run problem.json [--seed N] [--out report.json] [--human]
    ncshilov gallery ex4_4 > problem.json
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

import jsonschema
import numpy as np

from . import __version__
from .envelope import triple_envelope
from .errors import InputError, InvalidInput, NcShilovError, NotApplicable, NumericsAlarm
from .gallery import NAMES, encode_matrix, gallery
from .matcore import Tolerances
from .minspace import BanachSpace, cross_validate_multipliers, realize_min
from .multiplier import (
    adjointable_left,
    adjointable_right,
    banach_stone,
    left_multipliers,
    multiplier_norm,
    right_multipliers,
)
from .oplication import BilinearAction, brs_certify, derive_theta
from .opspace import OperatorSpace

TASKS = ("envelope", "multipliers", "brs", "oplication", "banach_stone", "min_cross_validate")
DEFAULT_SEED = 42
_DIGITS = 12

_COMPLEX = {"oneOf": [{"type": "number"},
                      {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}]}
_VECTOR = {"type": "array", "items": _COMPLEX, "minItems": 1}
_MATRIX = {"type": "array", "items": _VECTOR, "minItems": 1}
_SPACE = {"type": "object", "required": ["basis"],
          "properties": {"basis": {"type": "array", "items": _MATRIX, "minItems": 1}, "label": {"type": "string"}}}
_TENSOR3 = {"type": "array", "items": _MATRIX}

_PAYLOADS = {
    "envelope": {"required": ["space"], "properties": {"space": _SPACE}},
    "multipliers": {"required": ["space"], "properties": {"space": _SPACE, "ops": {"type": "array", "items": _MATRIX}}},
    "brs": {"required": ["space", "unit"], "properties": {"space": _SPACE, "unit": _VECTOR, "product": _TENSOR3}},
    "oplication": {"required": ["Y", "X", "m", "e"],
                   "properties": {"Y": _SPACE, "X": _SPACE, "m": _TENSOR3, "e": _VECTOR}},
    "banach_stone": {"required": ["A", "B", "T", "unit_A", "unit_B"],
                     "properties": {"A": _SPACE, "B": _SPACE, "T": _MATRIX, "unit_A": _VECTOR, "unit_B": _VECTOR}},
    "min_cross_validate": {"required": ["banach"], "properties": {
        "banach": {"type": "object", "required": ["dim", "ball"], "properties": {
            "dim": {"type": "integer", "minimum": 1},
            "ball": {"oneOf": [{"enum": ["l1", "linf", "l2"]},
                               {"type": "object", "required": ["polytope"],
                                "properties": {"polytope": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}}}]}}},
        "sample_size": {"type": "integer", "minimum": 1}}},
}

SCHEMA = {
    "type": "object",
    "required": ["version", "task", "payload"],
    "properties": {
        "version": {"enum": ["1"]},
        "task": {"enum": list(TASKS)},
        "payload": {"type": "object"},
        "seed": {"type": "integer"},
        "tolerances": {"type": "object", "properties": {
            "rank_eps": {"type": "number", "exclusiveMinimum": 0},
            "norm_eps": {"type": "number", "exclusiveMinimum": 0},
            "gap_eps": {"type": "number", "exclusiveMinimum": 0}}, "additionalProperties": False},
        "level_cap": {"type": "integer", "minimum": 1},
    },
}


class SchemaError(InvalidInput):
    def __init__(self, message, pointer):
        super().__init__(f"{pointer}: {message}")
        self.pointer = pointer


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path)


def validate(problem: dict) -> None:
    try:
        jsonschema.validate(problem, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaError(exc.message, _pointer(exc.absolute_path)) from None
    try:
        jsonschema.validate(problem["payload"], {"type": "object", **_PAYLOADS[problem["task"]]})
    except jsonschema.ValidationError as exc:
        raise SchemaError(exc.message, _pointer(["payload", *exc.absolute_path])) from None


def _complex(v):
    return complex(v[0], v[1]) if isinstance(v, list) else complex(v)


def _array(obj, where: str, ndim: int) -> np.ndarray:
    """Decode nested lists of numbers or ``[re, im]`` pairs; reject ragged input."""

    def rec(o, depth, path):
        if depth == 0:
            return _complex(o)
        if not isinstance(o, list) or not o:
            raise SchemaError("expected a non-empty array", path)
        out = [rec(x, depth - 1, f"{path}/{i}") for i, x in enumerate(o)]
        if depth >= 2:
            lens = {len(x) for x in out}
            if len(lens) != 1:
                bad = next(i for i, x in enumerate(out) if len(x) != len(out[0]))
                raise SchemaError("ragged array (rows of unequal length)", f"{path}/{bad}")
            if depth >= 3:
                shapes = {np.shape(x) for x in out}
                if len(shapes) != 1:
                    bad = next(i for i, x in enumerate(out) if np.shape(x) != np.shape(out[0]))
                    raise SchemaError("matrices of unequal shape", f"{path}/{bad}")
        return out

    return np.asarray(rec(obj, ndim, where), dtype=np.complex128)


def _space(obj, where, tol) -> OperatorSpace:
    basis = _array(obj["basis"], f"{where}/basis", 3)
    return OperatorSpace(basis, label=obj.get("label", ""), tol=tol)


def _round(x):
    if isinstance(x, float):
        if not np.isfinite(x):
            return None
        return float(f"{x:.{_DIGITS}g}")
    if isinstance(x, complex):
        return [_round(x.real), _round(x.imag)]
    if isinstance(x, (np.floating,)):
        return _round(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return _round(x.tolist())
        return _round(x.tolist())
    if isinstance(x, dict):
        return {str(k): _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    return x


def _enc(m):
    """Complex arrays as nested ``[re, im]`` pairs, with tiny entries zeroed for stable output."""
    m = np.asarray(m, dtype=np.complex128)
    m = np.where(np.abs(m.real) < 1e-13, 0, m.real) + 1j * np.where(np.abs(m.imag) < 1e-13, 0, m.imag)
    if m.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in m]
    if m.ndim == 2:
        return encode_matrix(m)
    return [_enc(x) for x in m]


def _matrix_name(p, q):
    return f"M_{p}" if p == q else f"M_{p}x{q}"


def _corner_sizes(T):
    r = T.source.r
    out = []
    for i in T.kept_blocks:
        V = T.linking.D.blocks[i].isometry
        p = int(round(np.real(np.trace(V[:r].conj().T @ V[:r]))))
        out.append((p, V.shape[1] - p))
    return out


def _envelope_report(T) -> dict:
    sizes = _corner_sizes(T)
    kept_sizes = [T.linking.D.blocks[i].block_dim for i in T.kept_blocks]
    return {
        "linking_block_sizes": T.linking.D.sizes,
        "linking_dim": T.linking.L.dim,
        "shilov_ideal": sorted(T.shilov_ideal.block_indices),
        "greedy_fallback": T.search.greedy,
        "boundary_c_star": " + ".join(_matrix_name(n, n) for n in kept_sizes),
        "triple_envelope": " + ".join(_matrix_name(p, q) for p, q in sizes),
        "dim_T": int(T.T_basis.shape[0]),
        "dim_E": T.E.dim,
        "dim_F": T.F.dim,
        "search_warnings": list(T.search.warnings),
    }


def _mult_report(M) -> dict:
    return {"dim": M.dim, "unit_included": M.unit_included, "basis": _enc(M.element_basis)}


def run_envelope(payload, seed, tol, level_cap):
    X = _space(payload["space"], "/payload/space", tol)
    T = triple_envelope(X, seed=seed, tol=tol, level_cap=level_cap)
    return {"verdict": "envelope computed", **_envelope_report(T)}


def run_multipliers(payload, seed, tol, level_cap):
    X = _space(payload["space"], "/payload/space", tol)
    T = triple_envelope(X, seed=seed, tol=tol, level_cap=level_cap)
    L = left_multipliers(T, tol)
    out = {
        "verdict": "multipliers computed",
        "envelope": _envelope_report(T),
        "left": _mult_report(L),
        "adjointable_left": _mult_report(adjointable_left(T, tol)),
        "right": _mult_report(right_multipliers(T, tol)),
        "adjointable_right": _mult_report(adjointable_right(T, tol)),
    }
    norms = []
    for i, op in enumerate(payload.get("ops", [])):
        op = _array(op, f"/payload/ops/{i}", 2)
        r = multiplier_norm(T, L, op, seed=seed, level_cap=level_cap)
        norms.append(r.as_dict())
    out["op_norms"] = norms
    return out


def _product_tensor(X: OperatorSpace):
    from .oplication import _y_product

    t = _y_product(X, X.tol)
    if t is None:
        raise InvalidInput("/payload/product: space is not closed under matrix products; supply a product tensor")
    return t


def run_brs(payload, seed, tol, level_cap):
    X = _space(payload["space"], "/payload/space", tol)
    m = _array(payload["product"], "/payload/product", 3) if "product" in payload else _product_tensor(X)
    e = _array(payload["unit"], "/payload/unit", 1)
    res = brs_certify(X, m, e, seed=seed, tol=tol, level_cap=level_cap)
    return res.as_dict()


def run_oplication(payload, seed, tol, level_cap):
    Y = _space(payload["Y"], "/payload/Y", tol)
    X = _space(payload["X"], "/payload/X", tol)
    m = _array(payload["m"], "/payload/m", 3)
    e = _array(payload["e"], "/payload/e", 1)
    try:
        cert = derive_theta(BilinearAction(Y, X, m, e), seed=seed, tol=tol, level_cap=level_cap)
    except NotApplicable as exc:
        return {"verdict": "hypothesis fails", "reason": str(exc), "diagnostics": exc.diagnostics}
    return {"verdict": "oplication certified", **cert.as_dict(), "theta": _enc(cert.theta)}


def run_banach_stone(payload, seed, tol, level_cap):
    A = _space(payload["A"], "/payload/A", tol)
    B = _space(payload["B"], "/payload/B", tol)
    Tm = _array(payload["T"], "/payload/T", 2)
    res = banach_stone(A, B, Tm, _array(payload["unit_A"], "/payload/unit_A", 1),
                       _array(payload["unit_B"], "/payload/unit_B", 1), seed=seed, tol=tol)
    return {"verdict": "factorization found", "u": _enc(res.u), "u_inverse": _enc(res.u_inverse),
            "pi": _enc(res.pi), "checks": res.checks}


def run_min_cross_validate(payload, seed, tol, level_cap):
    b = payload["banach"]
    ball = b["ball"] if isinstance(b["ball"], str) else np.asarray(b["ball"]["polytope"], dtype=float)
    B = BanachSpace(b["dim"], ball)
    R = realize_min(B, payload.get("sample_size", 64), seed)
    cv = cross_validate_multipliers(B, R, seed=seed, tol=tol)
    return {"verdict": "agree" if cv.agree else "disagree", **cv.as_dict()}


RUNNERS = {
    "envelope": run_envelope,
    "multipliers": run_multipliers,
    "brs": run_brs,
    "oplication": run_oplication,
    "banach_stone": run_banach_stone,
    "min_cross_validate": run_min_cross_validate,
}


def run(problem: dict, seed: int | None = None, tol_overrides: dict | None = None,
        level_cap: int | None = None, task: str | None = None) -> dict:
    """Validate and dispatch one problem; returns the report dictionary."""
    if not isinstance(problem, dict):
        raise SchemaError("problem must be a JSON object", "/")
    if task is not None:
        problem = {**problem, "task": task}
    validate(problem)
    if seed is None:
        seed = int(problem.get("seed", DEFAULT_SEED))
    tol_dict = {**problem.get("tolerances", {}), **(tol_overrides or {})}
    try:
        tol = Tolerances(**tol_dict)
    except ValueError as exc:
        raise SchemaError(str(exc), "/tolerances") from None
    level_cap = level_cap if level_cap is not None else problem.get("level_cap")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = RUNNERS[problem["task"]](problem["payload"], seed, tol, level_cap)
    report = {
        "task": problem["task"],
        "result": result,
        "warnings": sorted({f"{w.category.__name__}: {w.message}" for w in caught}),
        "provenance": {"seed": seed, "tolerances": tol.as_dict(), "level_cap": level_cap,
                       "tool": "ncshilov", "version": __version__},
    }
    return _round(report)


def _human(report: dict) -> str:
    lines = [f"task: {report['task']}"]

    def walk(d, indent):
        for k, v in d.items():
            if isinstance(v, dict):
                lines.append(" " * indent + f"{k}:")
                walk(v, indent + 2)
            elif isinstance(v, list) and v and isinstance(v[0], list):
                lines.append(" " * indent + f"{k}: <array>")
            else:
                lines.append(" " * indent + f"{k}: {v}")

    walk(report["result"], 2)
    for w in report["warnings"]:
        lines.append(f"warning: {w}")
    p = report["provenance"]
    lines.append(f"seed {p['seed']}, tolerances {p['tolerances']}")
    return "\n".join(lines)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def _error(code, kind, message, **extra) -> int:
    print(_dump({"error": kind, "message": message, **extra}), file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ncshilov", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"ncshilov {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="solve a JSON problem file ('-' for stdin)")
    r.add_argument("problem")
    r.add_argument("--task", choices=TASKS, help="override the task named in the file")
    r.add_argument("--seed", type=int, help=f"random seed (default: $NCSHILOV_SEED, the file's seed, or {DEFAULT_SEED})")
    r.add_argument("--tol-norm", type=float, help="norm tolerance")
    r.add_argument("--tol-rank", type=float, help="rank tolerance")
    r.add_argument("--level-cap", type=int, help="largest matrix level searched")
    r.add_argument("--out", help="write the JSON report here instead of stdout")
    r.add_argument("--human", action="store_true", help="print a readable summary to stdout")
    g = sub.add_parser("gallery", help="print a named example problem file")
    g.add_argument("name", nargs="?", help=f"one of: {', '.join(NAMES)}")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "gallery":
        if args.name is None:
            print("\n".join(NAMES))
            return 0
        try:
            print(_dump(gallery(args.name)))
        except InputError as exc:
            return _error(2, "unknown fixture", str(exc), names=list(NAMES))
        return 0

    try:
        text = sys.stdin.read() if args.problem == "-" else open(args.problem, encoding="utf-8").read()
        problem = json.loads(text)
    except OSError as exc:
        return _error(2, "input", f"cannot read problem file: {exc}")
    except json.JSONDecodeError as exc:
        return _error(2, "input", f"invalid JSON: {exc}")

    seed = args.seed
    if seed is None and os.environ.get("NCSHILOV_SEED"):
        try:
            seed = int(os.environ["NCSHILOV_SEED"])
        except ValueError:
            return _error(2, "input", "NCSHILOV_SEED must be an integer")
    tol = {}
    if args.tol_norm is not None:
        tol["norm_eps"] = args.tol_norm
    if args.tol_rank is not None:
        tol["rank_eps"] = args.tol_rank
    try:
        report = run(problem, seed=seed, tol_overrides=tol, level_cap=args.level_cap, task=args.task)
    except SchemaError as exc:
        return _error(2, "schema", str(exc), pointer=exc.pointer)
    except InputError as exc:
        return _error(2, type(exc).__name__, str(exc), diagnostics=_round(getattr(exc, "diagnostics", {})))
    except NumericsAlarm as exc:
        return _error(3, type(exc).__name__, str(exc))
    except NcShilovError as exc:
        return _error(3, type(exc).__name__, str(exc))

    text = _dump(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    elif not args.human:
        print(text)
    if args.human:
        print(_human(report))
    return 0


if __name__ == "__main__":
    sys.exit(main())
