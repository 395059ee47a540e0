"""Exact polyhedral decisions by Fourier-Motzkin elimination over the rationals.

A constraint ``coeffs . x + const REL 0`` is stored with REL one of ``>``,
``>=`` or ``=``.  Strictness is carried through elimination: a combination is
strict as soon as one parent is.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

from .scalar import NEG_INF, POS_INF, AffineMap, Q, format_scalar, is_infinite

_FLIP = {"<": ">", "<=": ">=", "≤": ">=", "≥": ">="}


class Constraint(NamedTuple):
    coeffs: tuple
    const: Q
    rel: str  # ">", ">=", "="

    def holds(self, x) -> bool:
        v = self.const + sum(c * xi for c, xi in zip(self.coeffs, x) if c)
        if self.rel == ">":
            return v > 0
        if self.rel == ">=":
            return v >= 0
        return v == 0


def constraint(f: AffineMap, rel: str, n: Optional[int] = None) -> Constraint:
    """Build ``f REL 0``; ``<`` and ``<=`` are flipped to ``>``/``>=``."""
    if n is not None and f.arity < n:
        f = f.pad(n)
    if rel in ("<", "<="):
        f = -f
        rel = _FLIP[rel]
    elif rel in ("≥",):
        rel = ">="
    elif rel == "==":
        rel = "="
    if rel not in (">", ">=", "="):
        raise ValueError(f"unknown relation {rel!r}")
    return Constraint(f.coeffs, f.const, rel)


@dataclass
class LinearSystem:
    n: int
    constraints: list = field(default_factory=list)

    def add(self, f: AffineMap, rel: str) -> "LinearSystem":
        if f.arity > self.n:
            raise ValueError(f"constraint arity {f.arity} exceeds system dimension {self.n}")
        self.constraints.append(constraint(f, rel, self.n))
        return self

    def extended(self, more: Sequence[Constraint]) -> "LinearSystem":
        return LinearSystem(self.n, list(self.constraints) + list(more))

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "constraints": [
                {"coeffs": [format_scalar(c) for c in con.coeffs], "const": format_scalar(con.const), "rel": con.rel}
                for con in self.constraints
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _normalize(coeffs, const, rel):
    """Canonical scaling; returns True/False for constant constraints."""
    lead = next((c for c in coeffs if c), None)
    if lead is None:
        if rel == ">":
            return const > 0
        if rel == ">=":
            return const >= 0
        return const == 0
    k = 1 / abs(lead)
    if rel == "=" and lead < 0:
        k = -k
    if k != 1:
        coeffs = tuple(c * k for c in coeffs)
        const = const * k
    return Constraint(tuple(coeffs), const, rel)


def _prune(cons):
    """Drop duplicates and parallel constraints implied by a tighter one.

    Returns None when a constant constraint is violated.
    """
    best = {}
    eqs = {}
    for c in cons:
        if c.rel == "=":
            prev = eqs.get(c.coeffs)
            if prev is not None and prev.const != c.const:
                return None
            eqs[c.coeffs] = c
            continue
        prev = best.get(c.coeffs)
        if prev is None or c.const < prev.const or (c.const == prev.const and c.rel == ">"):
            best[c.coeffs] = c
    out = list(eqs.values())
    for coeffs, c in best.items():
        e = eqs.get(coeffs)
        if e is not None:
            # on the hyperplane coeffs.x = -e.const the inequality is constant
            val = c.const - e.const
            if (c.rel == ">" and val <= 0) or (c.rel == ">=" and val < 0):
                return None
            continue
        out.append(c)
    return out


def _eliminate(cons, k):
    """Eliminate variable k from constraints involving only x_0..x_k."""
    eq = next((c for c in cons if c.rel == "=" and c.coeffs[k]), None)
    out = []
    if eq is not None:
        ak = eq.coeffs[k]
        for c in cons:
            if c is eq:
                continue
            ck = c.coeffs[k]
            if not ck:
                out.append(c)
                continue
            r = ck / ak
            nc = _normalize(
                tuple(a - r * b for a, b in zip(c.coeffs, eq.coeffs)), c.const - r * eq.const, c.rel
            )
            if nc is False:
                return None, None
            if nc is not True:
                out.append(nc)
        return _prune(out), ("eq", eq)
    lowers, uppers = [], []
    for c in cons:
        ck = c.coeffs[k]
        if ck > 0:
            lowers.append(c)
        elif ck < 0:
            uppers.append(c)
        else:
            out.append(c)
    for lo in lowers:
        for up in uppers:
            a, b = -up.coeffs[k], lo.coeffs[k]
            rel = ">" if (lo.rel == ">" or up.rel == ">") else ">="
            nc = _normalize(
                tuple(a * x + b * y for x, y in zip(lo.coeffs, up.coeffs)), a * lo.const + b * up.const, rel
            )
            if nc is False:
                return None, None
            if nc is not True:
                out.append(nc)
    return _prune(out), ("bounds", lowers, uppers)


def _bound_value(c, k, x):
    s = c.const + sum(a * v for a, v in zip(c.coeffs[:k], x) if a)
    return -s / c.coeffs[k]


def _interval(record, k, x):
    """Exact (lo, lo_strict, hi, hi_strict) admissible for x_k given x_0..x_{k-1}."""
    kind = record[0]
    if kind == "eq":
        v = _bound_value(record[1], k, x)
        return v, False, v, False
    _, lowers, uppers = record
    lo = hi = None
    lo_s = hi_s = False
    for c in lowers:
        v = _bound_value(c, k, x)
        if lo is None or v > lo or (v == lo and c.rel == ">"):
            lo, lo_s = v, c.rel == ">"
    for c in uppers:
        v = _bound_value(c, k, x)
        if hi is None or v < hi or (v == hi and c.rel == ">"):
            hi, hi_s = v, c.rel == ">"
    return lo, lo_s, hi, hi_s


def _pick(lo, lo_s, hi, hi_s):
    if lo is None and hi is None:
        return Q(0)
    if lo is None:
        return hi - 1
    if hi is None:
        return lo + 1
    if lo == hi:
        return lo
    return (lo + hi) / 2


def _run(system: LinearSystem, keep: int = 0):
    """Eliminate x_{n-1} .. x_keep.  Returns (remaining constraints, records) or None."""
    cons = []
    for c in system.constraints:
        nc = _normalize(tuple(c.coeffs), c.const, c.rel)
        if nc is False:
            return None
        if nc is not True:
            cons.append(nc)
    cons = _prune(cons)
    if cons is None:
        return None
    records = {}
    for k in range(system.n - 1, keep - 1, -1):
        involved = [c for c in cons if c.coeffs[k]]
        rest = [c for c in cons if not c.coeffs[k]]
        new, rec = _eliminate(involved, k)
        if new is None:
            return None
        records[k] = rec
        cons = _prune(rest + new)
        if cons is None:
            return None
    return cons, records


def is_feasible(system: LinearSystem):
    """Decide feasibility exactly.  Returns ``(True, witness)`` or ``(False, None)``."""
    res = _run(system, 0)
    if res is None:
        return False, None
    _, records = res
    x = []
    for k in range(system.n):
        x.append(_pick(*_interval(records[k], k, x)))
    witness = tuple(x)
    assert all(c.holds(witness) for c in system.constraints), "witness fails its own system"
    return True, witness


def feasible(system: LinearSystem) -> bool:
    return is_feasible(system)[0]


def extrema(f: AffineMap, system: LinearSystem):
    """(inf, sup) of f over the solution set; None marks an infinite side.

    The returned values are the bounds of the projection onto the value
    coordinate, so for closed systems they are attained.
    """
    n = system.n
    f = f.pad(n) if f.arity < n else f
    # value coordinate t goes first, the original variables shift by one
    cons = [Constraint((Q(0),) + c.coeffs, c.const, c.rel) for c in system.constraints]
    cons.append(Constraint((Q(-1),) + f.coeffs, f.const, "="))
    res = _run(LinearSystem(n + 1, cons), keep=1)
    if res is None:
        raise ValueError("extrema over an empty set")
    remaining, _ = res
    lo = hi = None
    for c in remaining:
        a = c.coeffs[0]
        v = -c.const / a
        if c.rel == "=":
            return v, v
        if a > 0:
            lo = v if lo is None else max(lo, v)
        else:
            hi = v if hi is None else min(hi, v)
    return lo, hi


# ---------------------------------------------------------------- cells

def cell_system(cell, closed: bool = False) -> LinearSystem:
    return LinearSystem(cell.dim, list(cell.constraints(closed=closed)))


def sup_over_closure(f: AffineMap, cell) -> Q:
    """Exact maximum of f on cl(cell); cell must be bounded and non-empty."""
    if not cell.is_bounded():
        raise ValueError("sup over an unbounded cell")
    _, hi = extrema(f, cell_system(cell, closed=True))
    if hi is None:
        raise ValueError("sup over an unbounded cell")
    return hi


def inf_over_closure(f: AffineMap, cell) -> Q:
    if not cell.is_bounded():
        raise ValueError("inf over an unbounded cell")
    lo, _ = extrema(f, cell_system(cell, closed=True))
    return lo


def compare_on_cell(f, g, V) -> Optional[str]:
    """Uniform sign of f - g on V as "<", "=", ">", or None if mixed."""
    inf_f, inf_g = is_infinite(f), is_infinite(g)
    if inf_f or inf_g:
        if not feasible(cell_system(V)):
            raise ValueError("comparison on an empty cell")
        sf = f.sign if inf_f else 0
        sg = g.sign if inf_g else 0
        if sf == sg:
            return "="
        return "<" if sf < sg else ">"
    base = cell_system(V)
    if not feasible(base):
        raise ValueError("comparison on an empty cell")
    d = f - g
    pos = feasible(base.extended([constraint(d, ">", V.dim)]))
    neg = feasible(base.extended([constraint(d, "<", V.dim)]))
    if pos and neg:
        return None
    if pos:
        return ">"
    if neg:
        return "<"
    return "="


def _fraction_in_open_unit(rng: random.Random) -> Q:
    den = rng.choice((2, 3, 4, 5, 7, 8, 16))
    return Q(rng.randrange(1, den), den)


def _fraction_in_closed_unit(rng: random.Random) -> Q:
    r = rng.random()
    if r < 0.15:
        return Q(0)
    if r < 0.3:
        return Q(1)
    return _fraction_in_open_unit(rng)


def _sample_one(cell, rng, closed):
    pt = []
    for stage in cell.stages():
        lo = stage.lower if is_infinite(stage.lower) else stage.lower(pt)
        if stage.is_graph:
            pt.append(lo)
            continue
        hi = stage.upper if is_infinite(stage.upper) else stage.upper(pt)
        u = _fraction_in_closed_unit(rng) if closed else _fraction_in_open_unit(rng)
        if lo is NEG_INF and hi is POS_INF:
            pt.append(Q(rng.randrange(-6, 7), rng.choice((1, 2, 3))))
        elif lo is NEG_INF:
            pt.append(hi - 1 - Q(rng.randrange(0, 5)) - u)
        elif hi is POS_INF:
            pt.append(lo + 1 + Q(rng.randrange(0, 5)) + u)
        else:
            pt.append(lo + u * (hi - lo))
    return tuple(pt)


def sample_points(cell, k: int, seed=0) -> list:
    """k exact points of the cell; deterministic for a given seed."""
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    pts = [_sample_one(cell, rng, closed=False) for _ in range(k)]
    for p in pts:
        assert cell.contains(p)
    return pts


def sample_closure_points(cell, k: int, seed=0) -> list:
    """k exact points of cl(cell), biased towards the boundary."""
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    return [_sample_one(cell, rng, closed=True) for _ in range(k)]


def bounding_box(X):
    """Per-coordinate exact (inf, sup) of X, or the string "unbounded".

    Accepts a cell, a SemiLinearSet (decomposed on the fly) or a sequence of cells.
    """
    if hasattr(X, "atoms"):
        from .decomposition import decompose

        dec = decompose([X], X.n)
        cells = [c for c in dec.cells if X.contains(c.center())]
        if not cells:
            raise ValueError("bounding box of an empty set")
        return _union_box([bounding_box(c) for c in cells])
    if isinstance(X, (list, tuple)):
        return _union_box([bounding_box(c) for c in X])
    if X.has_infinite_map():
        return "unbounded"
    system = cell_system(X, closed=True)
    box = []
    for i in range(X.dim):
        lo, hi = extrema(AffineMap.coordinate(i, X.dim), system)
        if lo is None or hi is None:
            return "unbounded"
        box.append((lo, hi))
    return tuple(box)


def _union_box(boxes):
    if any(b == "unbounded" for b in boxes):
        return "unbounded"
    n = len(boxes[0])
    return tuple((min(b[i][0] for b in boxes), max(b[i][1] for b in boxes)) for i in range(n))
