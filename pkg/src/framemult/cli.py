"""``framemult`` command line: JSON specs in, JSON reports out.

Exit codes: 0 success (certificate fired, necessary conditions hold),
2 a ``none_fired`` certificate or a ``violated`` diagnostics verdict,
1 any error (bad input, schema violation, dimension mismatch).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, fields

import jsonschema
import numpy as np

from framemult import catalogue
from framemult.config import DEFAULT_TOLERANCES, Tolerances, oracle_dim_cap
from framemult.convergence import DEFAULT_SWEEP, Verdict, unconditional_necessary
from framemult.errors import FrameMultError
from framemult.frames import ClassTags, SequenceFamily, Symbol, SymbolTags, frame_bounds, weighted
from framemult.inversion import DEFAULT_ORDER, Rule, certify, parse_rule
from framemult.linop import dense_of
from framemult.multiplier import MultiplierSpec, build, norm_bound

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2
COMMANDS = ("bounds", "diagnose", "certify", "invert", "apply", "catalogue")

# --------------------------------------------------------------------------
# schema

_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_TAG = {"type": ["boolean", "null"]}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {
        "complex": _COMPLEX,
        "generator": {
            "type": "object",
            "required": ["kind", "name"],
            "properties": {
                "kind": {"const": "generator"},
                "name": {"type": "string"},
                "role": {"enum": ["phi", "psi", "m"]},
                "dim": {"type": "integer", "minimum": 1},
                "params": {"type": "object"},
            },
        },
        "family": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["kind", "vectors"],
                    "properties": {
                        "kind": {"const": "explicit"},
                        "dim": {"type": "integer", "minimum": 1},
                        "count": {"type": "integer", "minimum": 1},
                        "label": {"type": "string"},
                        "vectors": {
                            "type": "array",
                            "minItems": 1,
                            "items": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/complex"}},
                        },
                        "tags": {
                            "type": "object",
                            "properties": {
                                k: _TAG for k in ("is_bessel", "is_frame", "is_riesz", "is_nbb", "is_nba", "is_sn")
                            },
                        },
                    },
                },
                {"$ref": "#/$defs/generator"},
            ]
        },
        "symbol": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["kind", "values"],
                    "properties": {
                        "kind": {"const": "explicit"},
                        "count": {"type": "integer", "minimum": 1},
                        "label": {"type": "string"},
                        "values": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/complex"}},
                        "tags": {
                            "type": "object",
                            "properties": {
                                k: _TAG for k in ("is_sn", "is_nbb", "is_ell_infty", "is_positive", "is_negative")
                            },
                        },
                    },
                },
                {"$ref": "#/$defs/generator"},
            ]
        },
    },
    "oneOf": [
        {
            "type": "object",
            "required": ["m", "phi", "psi"],
            "properties": {
                "label": {"type": "string"},
                "m": {"$ref": "#/$defs/symbol"},
                "phi": {"$ref": "#/$defs/family"},
                "psi": {"$ref": "#/$defs/family"},
                "hints": {"type": "object"},
            },
        },
        {
            "type": "object",
            "required": ["fixture"],
            "properties": {
                "fixture": {"type": "string"},
                "dim": {"type": "integer", "minimum": 1},
                "params": {"type": "object"},
            },
        },
    ],
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


class InputError(FrameMultError):
    def __init__(self, message: str, pointer: str = ""):
        super().__init__(message)
        self.pointer = pointer


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path) if path else ""


def validate(doc) -> None:
    """Raise ``InputError`` with the JSON pointer of the deepest violation."""
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: -len(e.absolute_path))
    if not errors:
        return
    err = errors[0]
    # oneOf failures hide the useful message in their context
    while err.context:
        err = max(err.context, key=lambda e: len(e.absolute_path))
    raise InputError(err.message, _pointer(err.absolute_path))


# --------------------------------------------------------------------------
# (de)serialization


def complex_to_json(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [complex_to_json(x) for x in a]


def complex_from_json(x, pointer: str = "") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1:] != (2,):
        raise InputError("complex numbers must be [re, im] pairs", pointer)
    return arr[..., 0] + 1j * arr[..., 1]


def _tags_json(tags) -> dict:
    return {k: v for k, v in tags.as_dict().items() if k != "provenance" and v is not None}


def family_to_json(f: SequenceFamily) -> dict:
    return {
        "kind": "explicit",
        "dim": f.dim,
        "count": f.count,
        "label": f.label,
        "vectors": complex_to_json(f.vectors),
        "tags": _tags_json(f.tags),
    }


def symbol_to_json(m: Symbol) -> dict:
    return {"kind": "explicit", "count": m.count, "label": m.label, "values": complex_to_json(m.values), "tags": _tags_json(m.tags)}


def spec_to_json(spec: MultiplierSpec) -> dict:
    return {
        "label": spec.label,
        "m": symbol_to_json(spec.m),
        "phi": family_to_json(spec.phi),
        "psi": family_to_json(spec.psi),
        "hints": dict(spec.hints),
    }


def _generated(node: dict, role: str, pointer: str, dim_default: int | None):
    d = node.get("dim", dim_default)
    if d is None:
        raise InputError("a generator needs 'dim'", pointer)
    inst = catalogue.instantiate(node["name"], d, node.get("params"))
    role = node.get("role", role)
    return inst.spec.m if role == "m" else getattr(inst.spec, role)


def family_from_json(node: dict, role: str, pointer: str, dim_default=None) -> SequenceFamily:
    if node["kind"] == "generator":
        return _generated(node, role, pointer, dim_default)
    V = complex_from_json(node["vectors"], pointer + "/vectors")
    if V.ndim != 2:
        raise InputError("vectors must all have the same length", pointer + "/vectors")
    if "dim" in node and node["dim"] != V.shape[1]:
        raise InputError(f"dim {node['dim']} but vectors have length {V.shape[1]}", pointer + "/dim")
    if "count" in node and node["count"] != V.shape[0]:
        raise InputError(f"count {node['count']} but {V.shape[0]} vectors given", pointer + "/count")
    try:
        tags = ClassTags(**node.get("tags", {}))
    except ValueError as e:
        raise InputError(str(e), pointer + "/tags") from None
    return SequenceFamily(V, tags, node.get("label", role))


def symbol_from_json(node: dict, pointer: str, dim_default=None) -> Symbol:
    if node["kind"] == "generator":
        return _generated(node, "m", pointer, dim_default)
    v = complex_from_json(node["values"], pointer + "/values")
    if "count" in node and node["count"] != v.size:
        raise InputError(f"count {node['count']} but {v.size} values given", pointer + "/count")
    try:
        tags = SymbolTags(**node.get("tags", {}))
    except ValueError as e:
        raise InputError(str(e), pointer + "/tags") from None
    return Symbol(v, tags, node.get("label", "m"))


def spec_from_json(doc) -> MultiplierSpec:
    validate(doc)
    if "fixture" in doc:
        return catalogue.instantiate(doc["fixture"], doc.get("dim", 32), doc.get("params")).spec
    phi = family_from_json(doc["phi"], "phi", "/phi")
    psi = family_from_json(doc["psi"], "psi", "/psi", phi.dim)
    m = symbol_from_json(doc["m"], "/m", phi.dim)
    if phi.dim != psi.dim:
        raise InputError(f"phi lives in C^{phi.dim} but psi in C^{psi.dim}", "/psi")
    if not (m.count == phi.count == psi.count):
        raise InputError(f"counts differ: m {m.count}, phi {phi.count}, psi {psi.count}", "/m")
    return MultiplierSpec(m, phi, psi, doc.get("hints", {}), doc.get("label", ""), align=False)


# --------------------------------------------------------------------------
# configuration


@dataclass
class JobConfig:
    command: str = "certify"
    input: str | None = None
    output: str | None = None
    fixture: str | None = None
    params: dict = field(default_factory=dict)
    dim: int = 32
    dims: tuple = DEFAULT_SWEEP
    tol: float = 1e-10
    tol_inv: float = DEFAULT_TOLERANCES.tol_inv
    tol_lin: float = DEFAULT_TOLERANCES.tol_lin
    tol_dual: float | None = DEFAULT_TOLERANCES.tol_dual
    order: tuple = tuple(r.value for r in DEFAULT_ORDER)
    oracle: bool = True
    vector: str | None = None
    random: int = 0
    seed: int = 0
    catalogue_action: str = "list"
    catalogue_id: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        for name in ("tol", "tol_inv", "tol_lin"):
            if not float(getattr(self, name)) > 0:
                raise InputError(f"{name} must be positive", f"/{name}")
        if self.tol_dual is not None and not self.tol_dual > 0:
            raise InputError("tol_dual must be positive", "/tol_dual")
        dims = [int(x) for x in self.dims]
        if not dims or any(b <= a for a, b in zip(dims, dims[1:])) or dims[0] < 1:
            raise InputError("sweep dims must be positive and strictly increasing", "/dims")
        self.dims = tuple(dims)
        self.order = tuple(parse_rule(r).value for r in self.order)

    @property
    def tolerances(self) -> Tolerances:
        return Tolerances(
            tol_lin=self.tol_lin,
            tol_inv=self.tol_inv,
            tol_dual=self.tol_dual,
            oracle_dim_cap=oracle_dim_cap(),
        )


def _parse_params(items) -> dict:
    out = {}
    for it in items or []:
        if "=" not in it:
            raise InputError(f"--param expects key=value, got {it!r}")
        k, v = it.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def _csv(s: str) -> list[str]:
    return [x.strip() for x in s.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="framemult", description="Frame multiplier bounds, diagnostics and inversion.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--in", dest="input", help="spec JSON file ('-' for stdin)")
    common.add_argument("--out", dest="output", help="report file (default stdout)")
    common.add_argument("--fixture", help="catalogue fixture id instead of --in")
    common.add_argument("--param", action="append", default=None, help="fixture parameter key=value")
    common.add_argument("--dim", type=int, default=None, help="fixture dimension")
    common.add_argument("--dims", default=None, help="sweep, e.g. 8,16,32,64")
    common.add_argument("--tol", type=float, default=None, help="Neumann truncation tolerance")
    common.add_argument("--tol-inv", type=float, default=None)
    common.add_argument("--tol-lin", type=float, default=None)
    common.add_argument("--tol-dual", type=float, default=None)
    common.add_argument("--order", default=None, help="rule order, e.g. riesz,gphi,p1,cp1,p3,mpos,p4")
    common.add_argument("--no-oracle", action="store_true", default=None, help="skip dense verification")
    common.add_argument("--config", help="JSON file with defaults for any of these options")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("bounds", "diagnose", "certify", "invert"):
        sub.add_parser(name, parents=[common])
    sp = sub.add_parser("apply", parents=[common])
    sp.add_argument("--vector", help="JSON file with a vector or a list of vectors ([re, im] entries)")
    sp.add_argument("--random", type=int, default=None, help="apply to this many random vectors")
    sp.add_argument("--seed", type=int, default=None)
    cp = sub.add_parser("catalogue", parents=[common])
    cp.add_argument("action", choices=("list", "emit"))
    cp.add_argument("id", nargs="?")
    return ap


def config_from_args(argv=None) -> JobConfig:
    ns = build_parser().parse_args(argv)
    file_cfg = {}
    if ns.config:
        with open(ns.config) as fh:
            file_cfg = json.load(fh)
        known = {f.name for f in fields(JobConfig)}
        bad = set(file_cfg) - known
        if bad:
            raise InputError(f"unknown config keys {sorted(bad)}", "/" + sorted(bad)[0])
    flags = {
        "input": ns.input,
        "output": ns.output,
        "fixture": ns.fixture,
        "params": _parse_params(ns.param) if ns.param else None,
        "dim": ns.dim,
        "dims": _csv(ns.dims) if ns.dims else None,
        "tol": ns.tol,
        "tol_inv": ns.tol_inv,
        "tol_lin": ns.tol_lin,
        "tol_dual": ns.tol_dual,
        "order": _csv(ns.order) if ns.order else None,
        "oracle": False if ns.no_oracle else None,
        "vector": getattr(ns, "vector", None),
        "random": getattr(ns, "random", None),
        "seed": getattr(ns, "seed", None),
    }
    merged = dict(file_cfg)
    merged.update({k: v for k, v in flags.items() if v is not None})
    merged["command"] = ns.command
    if ns.command == "catalogue":
        merged["catalogue_action"] = ns.action
        merged["catalogue_id"] = ns.id
    try:
        return JobConfig(**merged)
    except ValueError as e:
        raise InputError(str(e)) from None


# --------------------------------------------------------------------------
# commands


def _load_spec(cfg: JobConfig) -> MultiplierSpec:
    if cfg.fixture:
        return catalogue.instantiate(cfg.fixture, cfg.dim, cfg.params).spec
    if not cfg.input:
        raise InputError("give --in FILE or --fixture ID")
    try:
        if cfg.input == "-":
            doc = json.load(sys.stdin)
        else:
            with open(cfg.input) as fh:
                doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise InputError(f"invalid JSON: {e}") from None
    return spec_from_json(doc)


def _bounds_json(fam: SequenceFamily) -> dict:
    fb = frame_bounds(fam)
    return {"A": [fb.A_lower, fb.A_upper], "B": [fb.B_lower, fb.B_upper], "is_frame": bool(fb.is_frame)}


def cmd_bounds(cfg: JobConfig):
    spec = _load_spec(cfg)
    report = {
        "command": "bounds",
        "dim": spec.dim,
        "count": spec.count,
        "phi": _bounds_json(spec.phi),
        "psi": _bounds_json(spec.psi),
        "m_phi": _bounds_json(weighted(spec.m, spec.phi)),
        "m_psi": _bounds_json(weighted(spec.m, spec.psi)),
        "symbol": {"sup": spec.m.sup(), "inf": spec.m.inf()},
        "norm_bound": norm_bound(spec),
    }
    return report, EXIT_OK


def cmd_diagnose(cfg: JobConfig):
    if cfg.fixture:
        source = catalogue.factory(cfg.fixture, cfg.params)
    else:
        source = _load_spec(cfg)
    rep = unconditional_necessary(source, cfg.dims)
    out = {"command": "diagnose", **rep.to_json()}
    return out, EXIT_NEGATIVE if rep.verdict is Verdict.violated else EXIT_OK


def _certify(cfg: JobConfig):
    spec = _load_spec(cfg)
    cert = certify(spec, order=cfg.order, tol=cfg.tol, tolerances=cfg.tolerances, oracle=cfg.oracle)
    return spec, cert


def cmd_certify(cfg: JobConfig):
    _, cert = _certify(cfg)
    out = {"command": "certify", **cert.to_json()}
    return out, EXIT_OK if cert.fired else EXIT_NEGATIVE


def cmd_invert(cfg: JobConfig):
    spec, cert = _certify(cfg)
    out = {"command": "invert", **cert.to_json()}
    if cert.fired:
        if spec.dim <= oracle_dim_cap():
            out["inverse"] = complex_to_json(dense_of(cert.inverse))
        else:
            out["inverse"] = None
            out["note"] = "dimension above the oracle cap; apply the inverse matrix-free instead"
    return out, EXIT_OK if cert.fired else EXIT_NEGATIVE


def cmd_apply(cfg: JobConfig):
    spec = _load_spec(cfg)
    if cfg.vector:
        with open(cfg.vector) as fh:
            X = complex_from_json(json.load(fh), "/")
    elif cfg.random:
        rng = np.random.default_rng(cfg.seed)
        X = rng.standard_normal((cfg.random, spec.dim)) + 1j * rng.standard_normal((cfg.random, spec.dim))
    else:
        raise InputError("apply needs --vector FILE or --random N")
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != spec.dim:
        raise InputError(f"vectors have length {X.shape[1]}, the spec lives in C^{spec.dim}", "/0")
    Y = build(spec)(X.T).T
    out = {
        "command": "apply",
        "input": complex_to_json(X[0] if single else X),
        "output": complex_to_json(Y[0] if single else Y),
    }
    return out, EXIT_OK


def cmd_catalogue(cfg: JobConfig):
    if cfg.catalogue_action == "list":
        return {"command": "catalogue", "fixtures": catalogue.list_fixtures()}, EXIT_OK
    fid = cfg.catalogue_id or cfg.fixture
    if not fid:
        raise InputError("catalogue emit needs a fixture id")
    inst = catalogue.instantiate(fid, cfg.dim, cfg.params)
    doc = spec_to_json(inst.spec)
    doc["label"] = inst.id
    return doc, EXIT_OK


HANDLERS = {
    "bounds": cmd_bounds,
    "diagnose": cmd_diagnose,
    "certify": cmd_certify,
    "invert": cmd_invert,
    "apply": cmd_apply,
    "catalogue": cmd_catalogue,
}


def run(cfg: JobConfig) -> tuple[dict, int]:
    return HANDLERS[cfg.command](cfg)


def _emit(doc: dict, path: str | None):
    text = json.dumps(doc, indent=2, allow_nan=False, default=_default)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialize {type(o).__name__}")


def main(argv=None) -> int:
    cfg = None
    try:
        cfg = config_from_args(argv)
        report, code = run(cfg)
        _emit(report, cfg.output)
        return code
    except InputError as e:
        err = {"error": type(e).__name__, "message": str(e), "pointer": e.pointer}
    except (FrameMultError, ValueError, OSError, KeyError) as e:
        err = {"error": type(e).__name__, "message": str(e).strip("'\""), "pointer": getattr(e, "pointer", "")}
    sys.stderr.write(json.dumps(err) + "\n")
    return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
