"""Circuit and point-set files, plus the command-line surface.

Circuit files are canonical JSON (sorted keys, two-space indent, term lists
sorted by exponent vector, residues normalized), so load -> save -> load is
byte-stable.  Point files are a provenance header of '#'-prefixed lines
followed by one comma-separated point per line.

Exit codes: 0 success / verdict confirmed / witness found; 1 verdict
failure (a hitting-property miss or a failed campaign); 2 usage, parse, or
invariant errors; 3 capability limits (ceilings, small modulus).
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from .algebra import DEFAULT_MODULUS, Field, MatPoly, ScalarPoly
from .concentrate import (
    invertible_hitting_set,
    width2_hitting_set,
    width2_hitting_set_params,
)
from .depth3 import (
    Depth3Circuit,
    Gate,
    LinearForm,
    decompose_base_sets,
    minimal_distance_order,
    sum_sml_whitebox_test,
)
from .errors import CapabilityError, PreconditionError, StructuralError
from .isolate import roabp_hitting_set
from .roabp import EXPAND_CEILING, PointSet, Roabp
from .verify import run_campaign, verify_hitting_property

FORMAT_VERSION = 1

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_USAGE = 2
EXIT_CAPABILITY = 3


# ---------------------------------------------------------------------------
# circuit files


def _var_names(n: int) -> list[str]:
    return [f"x{i + 1}" for i in range(n)]


def _exponents_to_obj(e: Sequence[int], names: Sequence[str]) -> dict:
    return {names[i]: v for i, v in enumerate(e) if v}


def _obj_to_exponents(obj: dict, index: dict, n: int, where: str) -> tuple:
    e = [0] * n
    for name, v in obj.items():
        if name not in index:
            raise StructuralError(f"{where}: unknown variable {name!r}")
        if not isinstance(v, int) or v < 0:
            raise StructuralError(f"{where}: bad exponent for {name!r}")
        e[index[name]] = v
    return tuple(e)


def roabp_to_obj(r: Roabp) -> dict:
    names = _var_names(r.n)
    layers = []
    for layer in r.layers:
        terms = [
            {"exponents": _exponents_to_obj(e, names), "matrix": [list(row) for row in m]}
            for e, m in sorted(layer.terms.items())
        ]
        layers.append(terms)

    def vec_obj(vec):
        out = []
        for poly in vec:
            out.append(
                [
                    {"exponents": _exponents_to_obj(e, names), "value": c}
                    for e, c in sorted(poly.terms.items())
                ]
            )
        return out

    return {
        "format": FORMAT_VERSION,
        "kind": "roabp",
        "modulus": r.field.p,
        "width": r.width,
        "variables": names,
        "blocks": [[names[v] for v in blk] for blk in r.blocks],
        "left_block": [names[v] for v in r.left_block],
        "right_block": [names[v] for v in r.right_block],
        "layers": layers,
        "left_boundary": vec_obj(r.left_boundary),
        "right_boundary": vec_obj(r.right_boundary),
    }


def depth3_to_obj(c: Depth3Circuit) -> dict:
    names = _var_names(c.n)
    gates = []
    for gate in c.gates:
        forms = [
            {
                "const": f.constant,
                "coeffs": {names[v]: coef for v, coef in sorted(f.coeffs.items())},
            }
            for f in gate.forms
        ]
        gates.append({"scale": gate.scale, "forms": forms})
    return {
        "format": FORMAT_VERSION,
        "kind": "depth3",
        "modulus": c.field.p,
        "variables": names,
        "gates": gates,
    }


def instance_to_obj(instance) -> dict:
    if isinstance(instance, Roabp):
        return roabp_to_obj(instance)
    if isinstance(instance, Depth3Circuit):
        return depth3_to_obj(instance)
    raise StructuralError(f"cannot serialize {type(instance).__name__}")


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise StructuralError(f"{where}: missing field {key!r}")
    return obj[key]


def obj_to_instance(obj: dict, modulus_override: int | None = None):
    where = "circuit file"
    if not isinstance(obj, dict):
        raise StructuralError(f"{where}: top level must be an object")
    version = _require(obj, "format", where)
    if version != FORMAT_VERSION:
        raise StructuralError(f"{where}: unsupported format version {version}")
    modulus = modulus_override or _require(obj, "modulus", where)
    field = Field(modulus)
    names = _require(obj, "variables", where)
    if len(set(names)) != len(names):
        raise StructuralError(f"{where}: variables declared more than once")
    index = {name: i for i, name in enumerate(names)}
    n = len(names)
    kind = _require(obj, "kind", where)
    if kind == "roabp":
        width = _require(obj, "width", where)
        block_names = _require(obj, "blocks", where)
        seen: dict[str, int] = {}
        all_blocks = [obj.get("left_block", [])] + list(block_names) + [obj.get("right_block", [])]
        for b_idx, blk in enumerate(all_blocks):
            for name in blk:
                if name not in index:
                    raise StructuralError(f"{where}: unknown variable {name!r} in blocks")
                if name in seen:
                    raise StructuralError(
                        f"blocks not disjoint: {name} in blocks {seen[name]} and {b_idx}"
                    )
                seen[name] = b_idx
        blocks = [tuple(index[name] for name in blk) for blk in block_names]
        layer_objs = _require(obj, "layers", where)
        if len(layer_objs) != len(blocks):
            raise StructuralError(f"{where}: {len(layer_objs)} layers for {len(blocks)} blocks")
        layers = []
        for li, terms in enumerate(layer_objs):
            term_map = {}
            for t in terms:
                e = _obj_to_exponents(
                    _require(t, "exponents", f"layer {li}"), index, n, f"layer {li}"
                )
                matrix = _require(t, "matrix", f"layer {li}")
                if len(matrix) != width or any(len(row) != width for row in matrix):
                    raise StructuralError(f"layer {li}: matrix is not {width}x{width}")
                term_map[e] = tuple(tuple(v for v in row) for row in matrix)
            layers.append(MatPoly(field, n, width, term_map))

        def vec_from(key: str) -> tuple:
            entries = _require(obj, key, where)
            if len(entries) != width:
                raise StructuralError(f"{where}: {key} must have {width} entries")
            out = []
            for poly_terms in entries:
                term_map = {}
                for t in poly_terms:
                    e = _obj_to_exponents(
                        _require(t, "exponents", key), index, n, key
                    )
                    term_map[e] = _require(t, "value", key)
                out.append(ScalarPoly(field, n, term_map))
            return tuple(out)

        return Roabp(
            field,
            n,
            width,
            tuple(blocks),
            tuple(layers),
            vec_from("left_boundary"),
            vec_from("right_boundary"),
            tuple(index[name] for name in obj.get("left_block", [])),
            tuple(index[name] for name in obj.get("right_block", [])),
        )
    if kind == "depth3":
        gates = []
        for gi, g in enumerate(_require(obj, "gates", where)):
            forms = []
            for f in _require(g, "forms", f"gate {gi}"):
                coeffs_obj = f.get("coeffs", {})
                coeffs = {}
                for name, coef in coeffs_obj.items():
                    if name not in index:
                        raise StructuralError(f"gate {gi}: unknown variable {name!r}")
                    coeffs[index[name]] = coef
                forms.append(LinearForm(f.get("const", 0), coeffs))
            gates.append(Gate(_require(g, "scale", f"gate {gi}"), tuple(forms)))
        return Depth3Circuit(field, n, tuple(gates))
    raise StructuralError(f"{where}: unknown kind {kind!r}")


def dumps_canonical(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def save_instance(instance, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(instance_to_obj(instance)))


def load_instance(path: str, modulus_override: int | None = None):
    """Parse and eagerly validate a circuit file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise StructuralError(
            f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return obj_to_instance(obj, modulus_override)


# ---------------------------------------------------------------------------
# point files


def save_points(points: PointSet, path: str) -> None:
    """Provenance header, then one point per line as comma-separated
    residues."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# pitkit points n={points.n} count={len(points)}\n")
        fh.write(f"# provenance: {json.dumps(points.provenance, sort_keys=True)}\n")
        for pt in points:
            fh.write(",".join(str(v) for v in pt) + "\n")


def load_points(path: str) -> PointSet:
    n = None
    provenance: dict = {}
    pts = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("pitkit points"):
                    for chunk in body.split():
                        if chunk.startswith("n="):
                            n = int(chunk[2:])
                elif body.startswith("provenance:"):
                    provenance = json.loads(body.split(":", 1)[1])
                continue
            try:
                pts.append(tuple(int(v) for v in line.split(",")))
            except ValueError as exc:
                raise StructuralError(f"{path}:{line_no}: bad point line") from exc
    if n is None:
        if not pts:
            raise StructuralError(f"{path}: empty point file without a header")
        n = len(pts[0])
    return PointSet(n, tuple(pts), provenance)


# ---------------------------------------------------------------------------
# CLI


def _cmd_hs(args) -> int:
    instance = load_instance(args.input, args.modulus)
    if not isinstance(instance, Roabp):
        raise PreconditionError("hs expects an roabp circuit file")
    if args.family == "roabp":
        points = roabp_hitting_set(instance, args.mode, expand_ceiling=args.ceiling)
    elif args.family == "invertible":
        points = invertible_hitting_set(instance, args.mode, expand_ceiling=args.ceiling)
    elif args.family == "width2":
        if args.mode == "blackbox":
            points = width2_hitting_set_params(
                instance.n, instance.d, instance.delta,
                max(1, instance.layer_sparsity), instance.layer_support,
                instance.field,
            )
        else:
            points = width2_hitting_set(instance, expand_ceiling=args.ceiling)
    else:  # pragma: no cover - argparse restricts choices
        raise StructuralError(f"unknown family {args.family}")
    if args.out:
        save_points(points, args.out)
        print(f"wrote {len(points)} points to {args.out}")
    else:
        print(f"generated {len(points)} points")
    print(json.dumps(points.provenance, sort_keys=True))
    return EXIT_OK


def _cmd_test(args) -> int:
    instance = load_instance(args.input, args.modulus)
    points = load_points(args.points)
    report = verify_hitting_property(instance, points)
    print(report.line("test"))
    return EXIT_OK if report.passed else EXIT_VERDICT


def _cmd_whitebox(args) -> int:
    instance = load_instance(args.input, args.modulus)
    if not isinstance(instance, Depth3Circuit):
        raise PreconditionError("whitebox sum-sml expects a depth3 circuit file")
    distinct = instance.distinct_partitions()
    decomp = decompose_base_sets(distinct)
    sweep = 1
    for cert in decomp.certificates:
        sweep *= 2 ** len(cert.base_set)
    print(
        f"partitions: {len(distinct)}; base sets: {decomp.m} "
        f"(cap {decomp.cap:.2f}); sweep size: {sweep}"
    )
    verdict, witness = sum_sml_whitebox_test(instance, sweep_ceiling=args.ceiling)
    if verdict == "nonzero":
        print(f"verdict: nonzero at {','.join(str(v) for v in witness)}")
    else:
        print("verdict: zero")
    return EXIT_OK


def _cmd_distance(args) -> int:
    instance = load_instance(args.input, args.modulus)
    if not isinstance(instance, Depth3Circuit):
        raise PreconditionError("distance expects a depth3 circuit file")
    parts = [instance.gate_partition(i) for i in range(instance.k)]
    order, dist = minimal_distance_order(parts)
    print(f"distance: {dist}")
    print(f"gate order: {' '.join(str(i) for i in order)}")
    return EXIT_OK


def _cmd_decompose(args) -> int:
    instance = load_instance(args.input, args.modulus)
    if not isinstance(instance, Depth3Circuit):
        raise PreconditionError("decompose expects a depth3 circuit file")
    decomp = decompose_base_sets(instance.distinct_partitions())
    names = _var_names(instance.n)
    payload = {
        "m": decomp.m,
        "cap": decomp.cap,
        "base_sets": [
            {
                "variables": [names[v] for v in sorted(cert.base_set)],
                "order": list(cert.order),
                "distance": cert.distance,
            }
            for cert in decomp.certificates
        ],
    }
    text = dumps_canonical(payload)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {decomp.m} base sets to {args.out}")
    else:
        print(text, end="")
    return EXIT_OK


def _cmd_expand(args) -> int:
    instance = load_instance(args.input, args.modulus)
    if isinstance(instance, Roabp):
        _, scalar = instance.expand(args.ceiling)
    else:
        scalar = instance.expand()
    names = _var_names(scalar.n)
    print(f"terms: {scalar.sparsity}")
    for e, ccoef in sorted(scalar.terms.items()):
        mono = "*".join(
            f"{names[i]}^{v}" if v > 1 else names[i] for i, v in enumerate(e) if v
        )
        print(f"{ccoef} {mono}" if mono else f"{ccoef}")
    print(f"zero: {'yes' if scalar.is_zero() else 'no'}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    overrides = {}
    for item in args.param or []:
        key, _, value = item.partition("=")
        if not value:
            raise StructuralError(f"bad --param {item!r}; expected key=value")
        overrides[key] = value.lower() == "true" if value.lower() in ("true", "false") else int(value)
    result = run_campaign(
        args.klass, args.samples, seed=args.seed, modulus=args.modulus or DEFAULT_MODULUS,
        **overrides,
    )
    print(result.render(), end="")
    print(json.dumps(result.summary(), sort_keys=True))
    return EXIT_OK if result.all_passed else EXIT_VERDICT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pitkit",
        description="Deterministic polynomial identity testing over prime fields.",
    )
    parser.add_argument("--jobs", type=int, default=1, help="parallel sweep workers (output is identical for any value)")
    sub = parser.add_subparsers(dest="command", required=True)

    hs = sub.add_parser("hs", help="generate a hitting set for an ROABP file")
    hs.add_argument("family", choices=["roabp", "invertible", "width2"])
    hs.add_argument("--input", required=True)
    hs.add_argument("--mode", choices=["whitebox", "blackbox"], default="whitebox")
    hs.add_argument("--out")
    hs.add_argument("--modulus", type=int)
    hs.add_argument("--ceiling", type=int, default=EXPAND_CEILING)
    hs.set_defaults(func=_cmd_hs)

    test = sub.add_parser("test", help="check a point set against an instance")
    test.add_argument("--input", required=True)
    test.add_argument("--points", required=True)
    test.add_argument("--modulus", type=int)
    test.set_defaults(func=_cmd_test)

    wb = sub.add_parser("whitebox", help="whitebox zero tests")
    wb.add_argument("family", choices=["sum-sml"])
    wb.add_argument("--input", required=True)
    wb.add_argument("--modulus", type=int)
    wb.add_argument("--ceiling", type=int, default=10**7)
    wb.set_defaults(func=_cmd_whitebox)

    dist = sub.add_parser("distance", help="partition distance of a depth3 file")
    dist.add_argument("--input", required=True)
    dist.add_argument("--modulus", type=int)
    dist.set_defaults(func=_cmd_distance)

    dec = sub.add_parser("decompose", help="base-set decomposition of a depth3 file")
    dec.add_argument("--input", required=True)
    dec.add_argument("--out")
    dec.add_argument("--modulus", type=int)
    dec.set_defaults(func=_cmd_decompose)

    exp = sub.add_parser("expand", help="expand an instance (oracle)")
    exp.add_argument("--input", required=True)
    exp.add_argument("--modulus", type=int)
    exp.add_argument("--ceiling", type=int, default=EXPAND_CEILING)
    exp.set_defaults(func=_cmd_expand)

    ver = sub.add_parser("verify", help="run a seeded campaign")
    ver.add_argument("--class", dest="klass", required=True,
                     choices=["roabp", "invertible-roabp", "width2-roabp",
                              "depth3-distance", "sum-sml"])
    ver.add_argument("--samples", type=int, required=True)
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--modulus", type=int)
    ver.add_argument("--param", action="append", metavar="KEY=VALUE")
    ver.set_defaults(func=_cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapabilityError as exc:
        print(f"capability error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except (StructuralError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
