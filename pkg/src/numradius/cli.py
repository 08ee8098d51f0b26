"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 hypothesis not met
(a corrector's gap condition fails), 3 a mathematical assertion failed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass

import jsonschema
import numpy as np

from . import correctors as cr
from . import numrange as nr
from . import probes as pb
from . import spaces as sp
from .bracket import Bracket
from .errors import HypothesisFailed, NumRadiusError, VerificationError
from .operators import Operator, operator_norm

COMMANDS = ("v", "opnorm", "index", "index2", "skewbasis", "correct", "probe", "counterexample")
STOCHASTIC = ("v", "opnorm", "index", "index2", "probe")
FORMATS = ("json", "csv")
EXIT_OK, EXIT_USAGE, EXIT_HYPOTHESIS, EXIT_ASSERTION = 0, 1, 2, 3

_VEC = {"type": "array", "items": {"anyOf": [{"type": "number"},
                                             {"type": "array", "items": {"type": "number"}, "minItems": 2,
                                              "maxItems": 2}]}}
_SPACE = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["lp", "polyhedral", "znorm", "sum_inf", "dual"]},
        "dim": {"type": "integer", "minimum": 1},
        "field": {"enum": ["real", "complex"]},
        "p": {"anyOf": [{"type": "number", "minimum": 1}, {"enum": ["inf", "Infinity"]}]},
        "dual_vertices": {"type": "array", "items": _VEC, "minItems": 1},
        "left": {"$ref": "#/$defs/space"},
        "right": {"$ref": "#/$defs/space"},
        "base": {"$ref": "#/$defs/space"},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "lp"}}}, "then": {"required": ["p", "dim"]}},
        {"if": {"properties": {"kind": {"const": "znorm"}}}, "then": {"required": ["dim"]}},
        {"if": {"properties": {"kind": {"const": "polyhedral"}}}, "then": {"required": ["dual_vertices"]}},
        {"if": {"properties": {"kind": {"const": "sum_inf"}}}, "then": {"required": ["left", "right"]}},
        {"if": {"properties": {"kind": {"const": "dual"}}}, "then": {"required": ["base"]}},
    ],
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {"space": _SPACE, "vector": _VEC},
    "type": "object",
    "required": ["command"],
    "additionalProperties": False,
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "space": {"$ref": "#/$defs/space"},
        "operator": {"type": "array", "items": {"$ref": "#/$defs/vector"}},
        "state": {"type": "object", "required": ["x", "xstar"],
                  "properties": {"x": {"$ref": "#/$defs/vector"}, "xstar": {"$ref": "#/$defs/vector"},
                                 "tol": {"type": "number", "exclusiveMinimum": 0}}},
        "x": {"$ref": "#/$defs/vector"},
        "weights": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "ystars": {"type": "array", "items": {"$ref": "#/$defs/vector"}},
        "eps": {"type": "number", "exclusiveMinimum": 0},
        "budget": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "workers": {"type": "integer", "minimum": 1},
        "method": {"enum": list(nr.METHODS)},
        "corrector": {"enum": ["hilbert", "linf", "ssd"]},
        "mode": {"enum": ["block", "eigen"]},
        "probe": {"enum": ["eta_pp", "eta_oo", "ssd_modulus", "znorm_degradation"]},
        "kind": {"enum": ["2dim", "znorm"]},
        "n": {"type": "integer"},
        "theta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "delta": {"type": "number", "exclusiveMinimum": 0},
        "dims": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "out": {"type": "string"},
        "format": {"enum": list(FORMATS)},
    },
    "allOf": [
        {"if": {"properties": {"command": {"enum": list(STOCHASTIC)}}}, "then": {"required": ["seed"]}},
        {"if": {"properties": {"command": {"enum": ["v", "opnorm"]}}}, "then": {"required": ["space", "operator"]}},
        {"if": {"properties": {"command": {"enum": ["index", "index2", "skewbasis"]}}},
         "then": {"required": ["space"]}},
        {"if": {"properties": {"command": {"const": "correct"}}}, "then": {"required": ["corrector", "eps"]}},
        {"if": {"properties": {"command": {"const": "probe"}}}, "then": {"required": ["probe"]}},
        {"if": {"properties": {"command": {"const": "counterexample"}}}, "then": {"required": ["kind", "n"]}},
    ],
}


class ConfigError(NumRadiusError, ValueError):
    """Schema violations; ``violations`` lists one ``path: message`` line each."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid config:\n  " + "\n  ".join(self.violations))


@dataclass
class ExperimentConfig:
    command: str
    data: dict
    space: sp.Space | None = None
    operator: Operator | None = None
    seed: int | None = None
    budget: int | None = None
    eps: float | None = None
    workers: int = 1
    out: str | None = None
    format: str = "json"


def _path(err):
    parts = [str(p) for p in err.absolute_path]
    return ".".join(parts) if parts else "<root>"


def _violation(err):
    if err.validator == "required":
        missing = err.message.split("'")[1] if "'" in err.message else err.message
        where = _path(err)
        return f"{missing}: required" + ("" if where == "<root>" else f" (in {where})")
    return f"{_path(err)}: {err.message}"


def parse_config(text):
    """Parse and validate a JSON config; raises :class:`ConfigError` listing every violation."""
    if isinstance(text, dict):
        data = text
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError([f"line {e.lineno}, column {e.colno}: {e.msg}"]) from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errs = sorted(validator.iter_errors(data), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errs:
        raise ConfigError([_violation(e) for e in errs])
    cfg = ExperimentConfig(command=data["command"], data=data, seed=data.get("seed"), budget=data.get("budget"),
                           eps=data.get("eps"), workers=data.get("workers", 1), out=data.get("out"),
                           format=data.get("format", "json"))
    try:
        if "space" in data:
            cfg.space = sp.space_from_json(data["space"])
        if "operator" in data:
            if cfg.space is None:
                raise ConfigError(["space: required when operator is given"])
            cfg.operator = Operator.from_dict({"space": data["space"], "entries": data["operator"]})
    except ConfigError:
        raise
    except (NumRadiusError, ValueError, KeyError) as e:
        raise ConfigError([f"space: {e}"]) from None
    return cfg


# -- dispatch ---------------------------------------------------------------

def _state(cfg):
    s = cfg.data.get("state")
    if s is None:
        raise ConfigError(["state: required for this command"])
    x = sp.vector_from_json(s["x"], cfg.space)
    f = sp.vector_from_json(s["xstar"], cfg.space)
    return sp.validate_state(cfg.space, x, f, tol=s.get("tol", sp.DEFAULT_STATE_TOL))


def _need(cfg, *keys):
    missing = [k for k in keys if k not in cfg.data]
    if missing:
        raise ConfigError([f"{k}: required for {cfg.command}" for k in missing])


def _bracket_rows(est):
    return [dict(label=k, **v.to_dict()) for k, v in est.items()]


def run_experiment(cfg):
    """Dispatch ``cfg`` and return ``(result_dict, csv_rows)``."""
    d = cfg.data
    c = cfg.command
    seed = cfg.seed if cfg.seed is not None else 0
    budget = cfg.budget
    if c == "v":
        r = nr.numerical_radius(cfg.operator, method=d.get("method"), seed=seed, workers=cfg.workers)
        res = r.to_dict()
        return res, [dict(state=i, **w) for i, w in enumerate(res["witnesses"])] or _bracket_rows({"v": r.value})
    if c == "opnorm":
        b = operator_norm(cfg.operator, seed=seed, workers=cfg.workers)
        return {"value": b.to_dict()}, _bracket_rows({"norm": b})
    if c == "index":
        r = nr.numerical_index(cfg.space, budget=budget or 64, seed=seed, workers=cfg.workers)
        return r.to_dict(), _bracket_rows({"n": r.value})
    if c == "index2":
        r = nr.second_numerical_index(cfg.space, budget=budget or 64, seed=seed, workers=cfg.workers)
        return r.to_dict(), _bracket_rows({"n2": r.value})
    if c == "skewbasis":
        b = nr.skew_hermitian_basis(cfg.space)
        mats = [B.to_dict()["entries"] for B in b.basis]
        return ({"dim": b.dim, "constraint_rank": b.constraint_rank, "basis": mats},
                [{"index": i, "entries": m} for i, m in enumerate(mats)])
    if c == "correct":
        return _run_correct(cfg)
    if c == "probe":
        return _run_probe(cfg, seed)
    if c == "counterexample":
        if d["kind"] == "2dim":
            rep = pb.counterexample_2dim(d["n"])
        else:
            inst = pb.build_znorm_instance(d["n"], d.get("theta", 0.9), d.get("delta", 5e-2))
            rep = _instance_report(inst)
        return rep.to_dict(include_timing=False), rep.rows
    raise ConfigError([f"command: unknown command {c!r}"])


def _instance_report(inst):
    checks = {k: bool(v) for k, v in inst.checks.items()}
    rows = [{"m_j": m, "diagonal": float(inst.T.entries[len(inst.z0) + m - 1, m - 1])} for m in inst.m_list]
    return pb.ProbeReport("counterexample_znorm", {"n": len(inst.z0), "N": inst.N},
                          {"norm": inst.norm}, len(rows),
                          [{"z0": sp.vector_to_json(inst.z0), "m_list": inst.m_list, "operator": inst.T.to_dict()}],
                          0.0, rows, checks)


def _run_correct(cfg):
    d = cfg.data
    kind = d["corrector"]
    if kind == "hilbert":
        _need(cfg, "operator", "x")
        r = cr.hilbert_corrector(cfg.operator, sp.vector_from_json(d["x"], cfg.space), cfg.eps,
                                 mode=d.get("mode", "block"))
    elif kind == "linf":
        _need(cfg, "operator", "state")
        r = cr.linf_point_corrector(cfg.operator, _state(cfg), cfg.eps)
    else:
        _need(cfg, "space", "x", "weights", "ystars")
        x0 = sp.vector_from_json(d["x"], cfg.space)
        ys = [sp.vector_from_json(y, sp.dual(cfg.space)) for y in d["ystars"]]
        out = cr.ssd_functional_corrector(cfg.space, x0, np.asarray(d["weights"]), ys, cfg.eps)
        res = {"functionals": [sp.vector_to_json(g) for g in out]}
        return res, [{"index": i, "functional": f} for i, f in enumerate(res["functionals"])]
    res = r.to_dict()
    return res, [{"distance": r.distance, "verified": r.verified, **r.budget_report}]


def _run_probe(cfg, seed):
    d = cfg.data
    kind = d["probe"]
    b = cfg.budget
    if kind == "eta_pp":
        _need(cfg, "space", "state", "eps")
        rep = pb.eta_pp_probe(cfg.space, _state(cfg), cfg.eps, budget=b or 8, seed=seed)
    elif kind == "eta_oo":
        _need(cfg, "operator", "eps")
        rep = pb.eta_oo_probe(cfg.space, cfg.operator, cfg.eps, budget=b or 256, seed=seed)
    elif kind == "ssd_modulus":
        _need(cfg, "space", "x", "eps")
        rep = pb.ssd_modulus_probe(cfg.space, sp.vector_from_json(d["x"], cfg.space), cfg.eps, budget=b or 256,
                                   seed=seed)
    else:
        _need(cfg, "dims")
        rep = pb.znorm_degradation_probe(d["dims"], eps=cfg.eps or 0.25, budget=b or 4, seed=seed,
                                         theta=d.get("theta", 0.9), delta=d.get("delta", 5e-2))
    return rep.to_dict(include_timing=False), rep.rows


# -- report emission ----------------------------------------------------------

def jsonable(obj):
    """Plain-JSON copy of ``obj``: numpy scalars unwrapped, complex as pairs, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, Bracket):
        return jsonable(obj.to_dict())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(float(obj.real)), jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else ("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))
    return obj


def content_hash(body):
    return hashlib.sha256(json.dumps(body, separators=(",", ":"), ensure_ascii=False).encode()).hexdigest()


EXECUTION_KEYS = ("workers", "out", "format")


def build_report(cfg, result, wall_time):
    """Report dict with a trailing ``meta`` block that the hash excludes.

    Execution-only settings (worker count, output path and format) live in
    ``meta`` so they cannot change the hashed content.
    """
    echo = {k: v for k, v in cfg.data.items() if k not in EXECUTION_KEYS}
    body = jsonable({"command": cfg.command, "config": echo, "result": result})
    execution = {k: cfg.data[k] for k in EXECUTION_KEYS if k in cfg.data}
    body["meta"] = {"sha256": content_hash(body), "execution": jsonable(execution), "wall_time": wall_time}
    return body


def render(report, rows, fmt):
    if fmt == "json":
        return json.dumps(report, indent=2, ensure_ascii=False) + "\n"
    if fmt == "csv":
        rows = jsonable(rows)
        header = []
        for r in rows:
            header += [k for k in r if k not in header]
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: json.dumps(v, ensure_ascii=False) if isinstance(v, (list, dict)) else v
                        for k, v in r.items()})
        return buf.getvalue()
    raise ValueError(f"unsupported report format {fmt!r}; expected one of {FORMATS}")


def emit_report(report, rows, fmt, path=None, stream=None):
    """Write atomically to ``path`` (temp file + rename) or to ``stream``."""
    text = render(report, rows, fmt)
    if path is None:
        (stream or sys.stdout).write(text)
        return text
    target = os.path.abspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(target), prefix=".tmp-", suffix="." + fmt)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return text


# -- entry point --------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="numradius", description="numerical radius computations and correction experiments")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--space", help="space descriptor as inline JSON")
    p.add_argument("--operator", help="operator entries as inline JSON")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", help="json or csv")
    p.add_argument("--budget", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--kind", help="counterexample kind: 2dim or znorm")
    p.add_argument("--n", type=int)
    p.add_argument("--deterministic", action="store_true", help="zero the wall-time field")
    return p


def _merge(args):
    data = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError([f"{args.config}: line {e.lineno}, column {e.colno}: {e.msg}"]) from None
        if not isinstance(data, dict):
            raise ConfigError(["<root>: config must be a JSON object"])
    if data.get("command", args.command) != args.command:
        raise ConfigError([f"command: config says {data['command']!r} but {args.command!r} was requested"])
    data["command"] = args.command
    for key in ("space", "operator"):
        val = getattr(args, key)
        if val is not None:
            try:
                data[key] = json.loads(val)
            except json.JSONDecodeError as e:
                raise ConfigError([f"--{key}: {e.msg}"]) from None
    for key in ("seed", "out", "format", "budget", "eps", "workers", "kind", "n"):
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    return data


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(_merge(args))
        t0 = time.perf_counter()
        result, rows = run_experiment(cfg)
        wall = 0.0 if args.deterministic else time.perf_counter() - t0
        emit_report(build_report(cfg, result, wall), rows, cfg.format, cfg.out)
    except ConfigError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE
    except HypothesisFailed as e:
        print(f"hypothesis not met: {e}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except VerificationError as e:
        print(f"assertion failed: {e}", file=sys.stderr)
        return EXIT_ASSERTION
    except (NumRadiusError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
