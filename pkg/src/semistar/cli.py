"""Command line: decompose, refine, star, retract, contract, homotopy, verify, render.

Exit codes: 0 ok, 1 a verification failed, 2 bad input or usage, 3 unbounded
carrier, 4 a hypothesis of the construction fails.
"""

from __future__ import annotations

import argparse
import json
import sys

from .cells import CellError, cell_from_json
from .decomposition import (
    Decomposition,
    DecompositionError,
    SemiLinearSet,
    check_frontier,
    clip_to_box,
    decompose,
    partition_check,
    refine_special,
    star,
    validate_special,
)
from .retraction import (
    HypothesisError,
    RetractionError,
    UnboundedCarrierError,
    c_retraction,
    canonical_retraction,
    contract,
    glue_star_retraction,
    homotopy_trace,
    loop_homotopy,
    trace,
    verify_homotopy,
    verify_retraction,
)
from .scalar import format_scalar

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_UNBOUNDED, EXIT_HYPOTHESIS = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


def _load(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"malformed JSON in {path}: {e}") from None


def _dump(obj, args, lines=()):
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
        for line in lines:
            print(line)
    else:
        sys.stdout.write(text)
        for line in lines:
            print(line, file=sys.stderr)


def _sets(obj):
    """A SemiLinearSet, or {"n", "sets": [formula, ...]}."""
    n = int(obj["n"])
    if "sets" in obj:
        return n, [SemiLinearSet.from_json({"n": n, "formula": f}) for f in obj["sets"]]
    return n, [SemiLinearSet.from_json(obj)]


def _decomposition(obj):
    if "decomposition" in obj:
        obj = obj["decomposition"]
    return Decomposition.from_json(obj)


def _index(D, i):
    try:
        i = int(i)
    except (TypeError, ValueError):
        raise UsageError(f"cell index must be an integer, got {i!r}") from None
    if not 0 <= i < len(D.cells):
        raise UsageError(f"cell index {i} out of range 0..{len(D.cells) - 1}")
    return i


def _report_lines(report):
    return report.lines()


# ---------------------------------------------------------------- commands

def cmd_decompose(args):
    n, sets = _sets(_load(args.input))
    D = decompose(sets, n)
    if args.special:
        D = refine_special(D)
    _dump(D.to_json(), args, [f"cells\t{len(D.cells)}", f"special\t{D.special}"])
    return EXIT_OK


def cmd_refine(args):
    D = refine_special(_decomposition(_load(args.input)))
    _dump(D.to_json(), args, [f"cells\t{len(D.cells)}"])
    return EXIT_OK


def cmd_star(args):
    D = _decomposition(_load(args.input))
    i = _index(D, args.index)
    members = [D.cells.index(E) for E in star(D, D.cells[i])]
    lines = []
    code = EXIT_OK
    out = {"center": i, "star": members}
    if args.check_frontier:
        rep = check_frontier(D, samples=4, seed=args.seed)
        out["frontier"] = rep.to_json()
        lines = _report_lines(rep)
        code = EXIT_OK if rep.ok else EXIT_VERIFY
    _dump(out, args, lines)
    return code


def _star_cells(obj, D):
    i = _index(D, obj.get("center"))
    if "cells" in obj:
        cells = [D.cells[_index(D, j)] for j in obj["cells"]]
    else:
        cells = star(D, D.cells[i])
    return D.cells[i], cells


def _build_retraction(obj):
    mode = obj.get("mode", "star")
    if mode == "canonical":
        return canonical_retraction(cell_from_json(obj["cell"], validate=True), obj["sigma"]), [obj["cell"]]
    if mode == "corner":
        D = cell_from_json(obj["cell"], validate=True)
        C = cell_from_json(obj["face"], validate=True)
        return c_retraction(D, C, obj["corner"]), [obj["cell"], obj["face"]]
    if mode == "star":
        D = _decomposition(obj)
        C, cells = _star_cells(obj, D)
        return glue_star_retraction(cells, C, obj["corner"]), [c.to_json() for c in cells]
    raise UsageError(f"unknown retraction mode {mode!r}")


def cmd_retract(args):
    obj = _load(args.input)
    H, cells = _build_retraction(obj)
    rep = verify_retraction(H, samples=args.samples, seed=args.seed)
    out = trace(H, seed=args.seed, xs=obj.get("points"))
    out["cells"] = cells
    out["verification"] = rep.to_json()
    _dump(out, args, [f"q\t{format_scalar(H.q)}"] + _report_lines(rep))
    return EXIT_OK if rep.ok else EXIT_VERIFY


def cmd_contract(args):
    obj = _load(args.input)
    D = _decomposition(obj)
    C, cells = _star_cells(obj, D)
    G = contract(cells, C, obj["corner"])
    rep = verify_retraction(G, samples=args.samples, seed=args.seed)
    out = trace(G, seed=args.seed, xs=obj.get("points"))
    out["endpoint"] = [format_scalar(v) for v in G.endpoint]
    out["cells"] = [c.to_json() for c in cells]
    out["verification"] = rep.to_json()
    lines = [f"q\t{format_scalar(G.q)}", "endpoint\t" + " ".join(out["endpoint"])] + _report_lines(rep)
    _dump(out, args, lines)
    return EXIT_OK if rep.ok else EXIT_VERIFY


def cmd_homotopy(args):
    obj = _load(args.input)
    D = _decomposition(obj)
    C, cells = _star_cells(obj, D)
    loop = obj.get("loop")
    if not loop:
        raise UsageError("homotopy input needs a 'loop' vertex list")
    F = loop_homotopy(cells, C, obj["corner"], loop)
    rep = verify_homotopy(F, grid=args.grid)
    if args.check_clip:
        _, clipped = clip_to_box(D, F.box)
        for c in validate_special(clipped).checks:
            rep.checks.append(c)
    out = homotopy_trace(F, grid=args.grid)
    out["box"] = [[format_scalar(a), format_scalar(b)] for a, b in F.box]
    out["verification"] = rep.to_json()
    _dump(out, args, [f"q\t{format_scalar(F.q)}", f"p\t{format_scalar(F.p)}"] + _report_lines(rep))
    return EXIT_OK if rep.ok else EXIT_VERIFY


def cmd_verify(args):
    obj = _load(args.input)
    if "mode" in obj or "corner" in obj:
        H, _ = _build_retraction(obj)
        rep = verify_retraction(H, samples=args.samples, seed=args.seed)
    else:
        D = _decomposition(obj)
        rep = validate_special(D)
        for c in check_frontier(D, seed=args.seed).checks:
            rep.checks.append(c)
        rep.checks.append(partition_check(D, samples=args.samples, seed=args.seed))
    _dump(rep.to_json(), args, _report_lines(rep))
    return EXIT_OK if rep.ok else EXIT_VERIFY


def cmd_render(args):
    from .render import RenderError, render

    obj = _load(args.input)
    if "decomposition" in obj:
        obj = obj["decomposition"]
    if not args.output:
        raise UsageError("render needs -o PATH")
    try:
        render(obj, args.output)
    except RenderError as e:
        raise UsageError(str(e)) from None
    print(f"wrote\t{args.output}")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser():
    p = argparse.ArgumentParser(prog="semistar", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, samples=500):
        sp.add_argument("input")
        sp.add_argument("-o", "--output")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--samples", type=int, default=samples)

    sp = sub.add_parser("decompose", help="linear decomposition of R^n adapted to the input sets")
    common(sp)
    sp.add_argument("--special", action="store_true", help="refine to a special decomposition")
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("refine", help="special refinement of a decomposition")
    common(sp)
    sp.set_defaults(func=cmd_refine)

    sp = sub.add_parser("star", help="indices of the star of a cell")
    sp.add_argument("input")
    sp.add_argument("index")
    sp.add_argument("-o", "--output")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--check-frontier", action="store_true")
    sp.set_defaults(func=cmd_star)

    sp = sub.add_parser("retract", help="build and verify a retraction, write a trace")
    common(sp)
    sp.set_defaults(func=cmd_retract)

    sp = sub.add_parser("contract", help="contract a bounded star to a point")
    common(sp)
    sp.set_defaults(func=cmd_contract)

    sp = sub.add_parser("homotopy", help="null-homotopy of a PL loop in a star")
    common(sp)
    sp.add_argument("--grid", type=int, default=20)
    sp.add_argument("--check-clip", action="store_true", help="also validate the clipped decomposition")
    sp.set_defaults(func=cmd_homotopy)

    sp = sub.add_parser("verify", help="check a decomposition or a retraction job")
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("render", help="SVG of a decomposition or trace (n <= 2)")
    sp.add_argument("input")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except UnboundedCarrierError as e:
        print(f"error: {e} (an unbounded set has no definable contraction: no poles)", file=sys.stderr)
        return EXIT_UNBOUNDED
    except HypothesisError as e:
        print(f"error: hypothesis violated: {e}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (KeyError, TypeError, ValueError, CellError, DecompositionError, RetractionError) as e:
        print(f"error: invalid input: {e!r}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
