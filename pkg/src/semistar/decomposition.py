"""Semi-linear sets, linear cell decompositions and their special refinement.

Construction is the usual cylindrical one.  Every atom ``f(x) REL 0`` gives a
section ``x_j = theta(x_1..x_{j-1})`` at the level of its last variable; for
each level, the pairwise differences of its sections are pushed down as
sections of lower levels.  Stacking *all* sections of a level over every base
cell then yields cells on which every difference has constant sign, which is
exactly what makes the result special.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .cells import Band, Interval, Point, cell_from_json, make_cell
from .oracle import (
    Constraint,
    LinearSystem,
    compare_on_cell,
    constraint,
    extrema,
    is_feasible,
    sample_points,
)
from .scalar import NEG_INF, POS_INF, AffineMap, Q, format_scalar, is_infinite, scalar

RELATIONS = (">=", ">", "=")


# ---------------------------------------------------------------- formulas

@dataclass(frozen=True)
class Atom:
    f: AffineMap
    rel: str = ">="

    def __post_init__(self):
        if self.rel not in RELATIONS:
            raise ValueError(f"atom relation must be one of {RELATIONS}, got {self.rel!r}")

    def holds(self, x) -> bool:
        v = self.f(x)
        return v >= 0 if self.rel == ">=" else v > 0 if self.rel == ">" else v == 0

    def atoms(self):
        yield self

    def to_json(self):
        return {"atom": self.f.to_json(), "rel": self.rel}


@dataclass(frozen=True)
class And:
    parts: tuple

    def holds(self, x) -> bool:
        return all(p.holds(x) for p in self.parts)

    def atoms(self):
        for p in self.parts:
            yield from p.atoms()

    def to_json(self):
        return {"and": [p.to_json() for p in self.parts]}


@dataclass(frozen=True)
class Or:
    parts: tuple

    def holds(self, x) -> bool:
        return any(p.holds(x) for p in self.parts)

    def atoms(self):
        for p in self.parts:
            yield from p.atoms()

    def to_json(self):
        return {"or": [p.to_json() for p in self.parts]}


@dataclass(frozen=True)
class Not:
    part: object

    def holds(self, x) -> bool:
        return not self.part.holds(x)

    def atoms(self):
        yield from self.part.atoms()

    def to_json(self):
        return {"not": self.part.to_json()}


def _node_from_json(obj):
    if "atom" in obj:
        return Atom(AffineMap.from_json(obj["atom"]), obj.get("rel", ">="))
    if "and" in obj:
        return And(tuple(_node_from_json(p) for p in obj["and"]))
    if "or" in obj:
        return Or(tuple(_node_from_json(p) for p in obj["or"]))
    if "not" in obj:
        return Not(_node_from_json(obj["not"]))
    if obj.get("true") is True:
        return And(())
    raise ValueError(f"unrecognised formula node: {sorted(obj)}")


@dataclass(frozen=True)
class SemiLinearSet:
    """Boolean combination of affine sign conditions in n variables."""

    n: int
    formula: object = field(default_factory=lambda: And(()))

    def __post_init__(self):
        for a in self.formula.atoms():
            if a.f.arity != self.n:
                raise ValueError(f"atom of arity {a.f.arity} in a set of R^{self.n}")

    def contains(self, x) -> bool:
        if len(x) != self.n:
            raise ValueError("dimension mismatch")
        return self.formula.holds(x)

    def atoms(self) -> list:
        return list(self.formula.atoms())

    def __and__(self, other):
        return SemiLinearSet(self.n, And((self.formula, other.formula)))

    def to_json(self):
        return {"n": self.n, "formula": self.formula.to_json()}

    @classmethod
    def from_json(cls, obj):
        return cls(int(obj["n"]), _node_from_json(obj["formula"]))

    @classmethod
    def box(cls, box, closed: bool = False):
        rel = ">=" if closed else ">"
        n = len(box)
        parts = []
        for i, (lo, hi) in enumerate(box):
            x = AffineMap.coordinate(i, n)
            parts.append(Atom(x - scalar(lo), rel))
            parts.append(Atom(-x + scalar(hi), rel))
        return cls(n, And(tuple(parts)))


def whole_space(n: int) -> SemiLinearSet:
    return SemiLinearSet(n, And(()))


# ---------------------------------------------------------------- decomposition

@dataclass
class Decomposition:
    n: int
    cells: list
    carrier: Optional[SemiLinearSet] = None  # None means all of R^n
    special: bool = False

    def __len__(self):
        return len(self.cells)

    def in_carrier(self, x) -> bool:
        return self.carrier is None or self.carrier.contains(x)

    def locate(self, x):
        """Index of the cell containing x, or None."""
        for i, c in enumerate(self.cells):
            if c.contains(x):
                return i
        return None

    def to_json(self):
        return {
            "n": self.n,
            "carrier": None if self.carrier is None else self.carrier.to_json(),
            "special": self.special,
            "cells": [c.to_json() for c in self.cells],
        }

    @classmethod
    def from_json(cls, obj, validate: bool = False):
        carrier = obj.get("carrier")
        return cls(
            int(obj["n"]),
            [cell_from_json(c, validate=validate) for c in obj["cells"]],
            None if carrier is None else SemiLinearSet.from_json(carrier),
            bool(obj.get("special", False)),
        )


class DecompositionError(ValueError):
    pass


def _section(f: AffineMap):
    """Solve f = 0 for its last variable; returns (level, map) or None if f is constant."""
    j = max((i for i, c in enumerate(f.coeffs) if c), default=None)
    if j is None:
        return None
    a = f.coeffs[j]
    theta = AffineMap(f.coeffs[:j], f.const).scale(-1 / a)
    return j + 1, theta


def _map_key(f):
    return (f.coeffs, f.const)


def _close_sections(sections: dict, n: int) -> dict:
    for k in range(n, 1, -1):
        maps = sorted(sections[k], key=_map_key)
        for i in range(len(maps)):
            for j in range(i + 1, len(maps)):
                sec = _section(maps[i] - maps[j])
                if sec is not None:
                    sections[sec[0]].add(sec[1])
    return sections


def _stack(sections: dict, n: int) -> list:
    """Cells of every level, stacking all sections of the level over every base cell."""
    consts = sorted({f.const for f in sections[1]})
    level = []
    prev = NEG_INF
    for c in consts:
        level.append(Interval(prev, c))
        level.append(Point(c))
        prev = c
    level.append(Interval(prev, POS_INF))
    for k in range(2, n + 1):
        maps = sorted(sections[k], key=_map_key)
        nxt = []
        for V in level:
            p = V.center()
            by_value = {}
            for f in maps:
                by_value.setdefault(f(p), f)  # first in key order represents equal maps
            ordered = [by_value[v] for v in sorted(by_value)]
            lo = NEG_INF
            for f in ordered:
                nxt.append(Band(V, lo, f))
                nxt.append(make_cell(V, f, f, True))
                lo = f
            nxt.append(Band(V, lo, POS_INF))
        level = nxt
    return level


def _empty_sections(n):
    return {k: set() for k in range(1, n + 1)}


def decompose(sets: Sequence[SemiLinearSet], n: int) -> Decomposition:
    """A linear decomposition of R^n partitioning each input set."""
    sections = _empty_sections(n)
    for s in sets:
        if s.n != n:
            raise DecompositionError(f"set of R^{s.n} given for a decomposition of R^{n}")
        for a in s.atoms():
            sec = _section(a.f)
            if sec is not None:
                sections[sec[0]].add(sec[1])
    cells = _stack(_close_sections(sections, n), n)
    return Decomposition(n, cells, None, special=False)


def refine_special(D: Decomposition) -> Decomposition:
    """A special decomposition refining D: every cell of D is a union of output cells."""
    if D.n == 1:
        return Decomposition(D.n, list(D.cells), D.carrier, special=True)
    sections = _empty_sections(D.n)
    for cell in D.cells:
        for m, s in enumerate(cell.stages(), start=1):
            for f in (s.lower, s.upper):
                if not is_infinite(f):
                    sections[m].add(f)
    cells = _stack(_close_sections(sections, D.n), D.n)
    if D.carrier is not None:
        cells = [c for c in cells if _inside_some(c, D.cells)]
    return Decomposition(D.n, cells, D.carrier, special=True)


def _inside_some(cell, cells) -> bool:
    p = cell.center()
    return any(c.contains(p) for c in cells)


def restrict(D: Decomposition, Y: SemiLinearSet, samples: int = 8, seed=0) -> Decomposition:
    """Keep the cells of D lying in Y.  Each cell must be inside Y or disjoint from it."""
    if Y.n != D.n:
        raise DecompositionError("dimension mismatch")
    rng = random.Random(seed)
    kept = []
    for c in D.cells:
        verdict = Y.contains(c.center())
        for p in sample_points(c, samples, rng):
            if Y.contains(p) != verdict:
                raise DecompositionError(f"decomposition does not partition the set: {c} straddles it")
        if verdict:
            kept.append(c)
    carrier = Y if D.carrier is None else D.carrier & Y
    return Decomposition(D.n, kept, carrier, D.special)


# ---------------------------------------------------------------- reports

@dataclass
class Check:
    name: str
    exact: bool
    checked: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass
class Report:
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def add(self, name, exact=True) -> Check:
        c = Check(name, exact)
        self.checks.append(c)
        return c

    def violations(self) -> list:
        return [v for c in self.checks for v in c.violations]

    def lines(self) -> list:
        return [
            f"{'PASS' if c.ok else 'FAIL'}\t{c.name}\t{'exact' if c.exact else 'sampled'}\t{c.checked}\t{len(c.violations)}"
            for c in self.checks
        ]

    def to_json(self):
        return {
            "ok": self.ok,
            "checks": [
                {"name": c.name, "exact": c.exact, "checked": c.checked, "ok": c.ok,
                 "violations": [str(v) for v in c.violations[:20]]}
                for c in self.checks
            ],
        }


# ---------------------------------------------------------------- level structure

def levels(cells) -> list:
    """levels[m-1] = distinct projections onto R^m, in first-seen order."""
    if not cells:
        return []
    n = cells[0].dim
    out = [None] * n
    top = list(dict.fromkeys(cells))
    out[n - 1] = top
    for m in range(n - 1, 0, -1):
        out[m - 1] = list(dict.fromkeys(c.base for c in out[m]))
    return out


def _closure_box(cell):
    system = LinearSystem(cell.dim, cell.constraints(closed=True))
    return [extrema(AffineMap.coordinate(i, cell.dim), system) for i in range(cell.dim)]


def _boxes_meet(a, b) -> bool:
    for (alo, ahi), (blo, bhi) in zip(a, b):
        if ahi is not None and blo is not None and ahi < blo:
            return False
        if bhi is not None and alo is not None and bhi < alo:
            return False
    return True


class _Geometry:
    """Per-decomposition caches: levels, closure boxes and meeting relations."""

    def __init__(self, cells):
        self.levels = levels(cells)
        self._boxes = {}
        self._rel = {}

    def box(self, cell):
        b = self._boxes.get(cell)
        if b is None:
            b = self._boxes[cell] = _closure_box(cell)
        return b

    def relation(self, m: int, closed_left: bool) -> set:
        """Pairs (A, B) of level-m cells with A ∩ cl(B) (or cl(A) ∩ cl(B)) non-empty."""
        key = (m, closed_left)
        if key in self._rel:
            return self._rel[key]
        cells = self.levels[m - 1]
        if m == 1:
            candidates = [(a, b) for a in cells for b in cells]
        else:
            below = self.relation(m - 1, closed_left)
            by_base = {}
            for c in cells:
                by_base.setdefault(c.base, []).append(c)
            candidates = [
                (a, b)
                for (pa, pb) in below
                for a in by_base.get(pa, ())
                for b in by_base.get(pb, ())
            ]
        rel = set()
        for a, b in candidates:
            if a is b or a == b:
                rel.add((a, b))
                continue
            if not _boxes_meet(self.box(a), self.box(b)):
                continue
            system = LinearSystem(m, a.constraints(closed=closed_left) + b.constraints(closed=True))
            if is_feasible(system)[0]:
                rel.add((a, b))
        self._rel[key] = rel
        return rel


def validate_special(D: Decomposition) -> Report:
    """Exact check of the recursive specialness clauses, plus the stacking partition."""
    report = Report()
    part = report.add("partition: fibers over each base cell tile the line", exact=True)
    order = report.add("clause (2): graph maps uniformly ordered over base cells", exact=True)
    sandwich = report.add("clause (3): no graph strictly inside a band at a shared closure point", exact=True)
    if not D.cells:
        return report
    geo = _Geometry(D.cells)
    whole = D.carrier is None
    if whole:
        _check_tiling(geo, part)
    for m in range(2, D.n + 1):
        cells = geo.levels[m - 1]
        bases = geo.levels[m - 2]
        graph_maps = sorted({c.stage.lower for c in cells if c.stage.is_graph}, key=_map_key)
        for V in bases:
            for i in range(len(graph_maps)):
                for j in range(i + 1, len(graph_maps)):
                    order.checked += 1
                    if compare_on_cell(graph_maps[i], graph_maps[j], V) is None:
                        order.violations.append((m, graph_maps[i], graph_maps[j], V))
        cc = {}
        for s1, T in geo.relation(m - 1, closed_left=True):
            cc.setdefault(s1, []).append(T)
        graphs = [c for c in cells if c.stage.is_graph]
        bands = [c for c in cells if not c.stage.is_graph]
        bands_by_base = {}
        for b in bands:
            bands_by_base.setdefault(b.base, []).append(b)
        for g in graphs:
            S, h = g.base, g.stage.lower
            for T in cc.get(S, ()):
                for band in bands_by_base.get(T, ()):
                    sandwich.checked += 1
                    witness = _sandwich_witness(S, T, h, band.stage.lower, band.stage.upper)
                    if witness is not None:
                        sandwich.violations.append((str(g), str(band), witness))
    return report


def _sandwich_witness(S, T, h, f, g):
    m = S.dim
    cons = S.constraints(closed=True) + T.constraints(closed=True)
    if not is_infinite(f):
        cons.append(constraint(h - f, ">", m))
    if not is_infinite(g):
        cons.append(constraint(g - h, ">", m))
    ok, w = is_feasible(LinearSystem(m, cons))
    return w if ok else None


def _check_tiling(geo, check):
    # level 1 must read (-inf, c1), {c1}, (c1, c2), ..., (ck, +inf)
    for m, cells in enumerate(geo.levels, start=1):
        groups = {}
        for c in cells:
            groups.setdefault(c.base, []).append(c)
        for base, fiber in groups.items():
            check.checked += 1
            problem = _fiber_problem(base, fiber)
            if problem:
                check.violations.append((m, str(base), problem))


def _fiber_problem(base, fiber):
    bands = [c for c in fiber if not c.stage.is_graph]
    graphs = [c for c in fiber if c.stage.is_graph]
    if len(bands) != len(graphs) + 1:
        return "wrong number of bands and graphs"
    # order graphs by value at a base point, then each consecutive pair must bound a band
    p = () if base is None else base.center()
    graphs.sort(key=lambda c: c.stage.lower(p))
    bounds = [NEG_INF] + [c.stage.lower for c in graphs] + [POS_INF]
    for lo, hi in zip(bounds, bounds[1:]):
        if not any(_same_map(b.stage.lower, lo, base) and _same_map(b.stage.upper, hi, base) for b in bands):
            return f"no band between {lo!r} and {hi!r}"
    for a, b in zip(graphs, graphs[1:]):
        if base is None:
            if not a.stage.lower.const < b.stage.lower.const:
                return "graphs not strictly ordered"
        elif compare_on_cell(a.stage.lower, b.stage.lower, base) != "<":
            return "graphs not strictly ordered"
    return None


def _same_map(f, g, base):
    if is_infinite(f) or is_infinite(g):
        return f is g
    if base is None:
        return f.const == g.const
    return f == g or compare_on_cell(f, g, base) == "="


def check_frontier(D: Decomposition, samples: int = 4, seed=0) -> Report:
    """For every pair with A ∩ cl(B) non-empty, verify A ⊆ cl(B) exactly and by sampling."""
    report = Report()
    exact = report.add("frontier: A meets cl(B) implies A inside cl(B)", exact=True)
    sampled = report.add("frontier: sampled points of A lie in cl(B)", exact=False)
    if not D.cells:
        return report
    geo = _Geometry(D.cells)
    rel = geo.relation(D.n, closed_left=False)
    rng = random.Random(seed)
    for A, B in sorted(rel, key=lambda ab: (str(ab[0]), str(ab[1]))):
        exact.checked += 1
        w = escape_witness(A, B)
        if w is not None:
            exact.violations.append((str(A), str(B), w))
        for p in sample_points(A, samples, rng):
            sampled.checked += 1
            if not B.closure_contains(p):
                sampled.violations.append((str(A), str(B), p))
    return report


def escape_witness(A, B):
    """A point of A outside cl(B), or None when A ⊆ cl(B)."""
    base = A.constraints(closed=False)
    for c in B.constraints(closed=True):
        negs = []
        if c.rel == "=":
            negs = [Constraint(c.coeffs, c.const, ">"), Constraint(tuple(-a for a in c.coeffs), -c.const, ">")]
        else:
            negs = [Constraint(tuple(-a for a in c.coeffs), -c.const, ">")]
        for neg in negs:
            ok, w = is_feasible(LinearSystem(A.dim, base + [neg]))
            if ok:
                return w
    return None


def meets_closure(A, B) -> bool:
    return is_feasible(LinearSystem(A.dim, A.constraints() + B.constraints(closed=True)))[0]


def star(D: Decomposition, C) -> list:
    """Cells E of D with C ∩ cl(E) non-empty."""
    if C not in D.cells:
        raise DecompositionError("the cell is not in the decomposition")
    return [E for E in D.cells if E == C or meets_closure(C, E)]


# ---------------------------------------------------------------- box clipping

def clip_to_box(D: Decomposition, box):
    """Enlarge the open box and intersect every cell with it.

    Returns ``(B, D')`` with B a tuple of (lo, hi) pairs containing the given
    box, and D' = {B ∩ E : E in D} (empty pieces dropped).
    """
    B, clipped = clip_map(D, box)
    carrier = SemiLinearSet.box(B)
    if D.carrier is not None:
        carrier = D.carrier & carrier
    out = Decomposition(D.n, [clipped[c] for c in D.cells if c in clipped], carrier, D.special)
    return tuple(B), out


def clip_map(D: Decomposition, box):
    """Like clip_to_box but returns ``(B, {E: B ∩ E})`` keyed by the original cells."""
    box = [(scalar(lo), scalar(hi)) for lo, hi in box]
    if len(box) != D.n:
        raise DecompositionError("box dimension mismatch")
    B, clipped = _clip(list(dict.fromkeys(D.cells)), box)
    return tuple(B), clipped


def _clip(cells, box):
    """Returns (box, {cell: clipped cell}) for cells of one dimension."""
    n = len(box)
    if n == 1:
        a, b = box[0]
        out = {}
        for c in cells:
            if isinstance(c, Point):
                if a < c.c < b:
                    out[c] = c
                continue
            lo = a if is_infinite(c.lo) else max(a, c.lo)
            hi = b if is_infinite(c.hi) else min(b, c.hi)
            if lo < hi:
                out[c] = Interval(lo, hi)
        return [(a, b)], out
    bases = list(dict.fromkeys(c.base for c in cells))
    A, base_map = _clip(bases, box[:-1])
    d, e = box[-1]
    maps = {f for c in cells for f in (c.stage.lower, c.stage.upper) if not is_infinite(f)}
    A_system = LinearSystem(n - 1, [])
    for i, (lo, hi) in enumerate(A):
        x = AffineMap.coordinate(i, n - 1)
        A_system.add(x - lo, ">=").add(-x + hi, ">=")
    lows, highs = [d], [e]
    for f in sorted(maps, key=_map_key):
        lo, hi = extrema(f, A_system)
        lows.append(lo)
        highs.append(hi)
    d2 = min(lows) - 1
    e2 = max(highs) + 1
    out = {}
    for c in cells:
        V = base_map.get(c.base)
        if V is None:
            continue
        s = c.stage
        if s.is_graph:
            out[c] = make_cell(V, s.lower, s.upper, True)
        else:
            lo = AffineMap.constant(d2, n - 1) if s.lower is NEG_INF else s.lower
            hi = AffineMap.constant(e2, n - 1) if s.upper is POS_INF else s.upper
            out[c] = Band(V, lo, hi)
    return A + [(d2, e2)], out


# ---------------------------------------------------------------- sampled checks

def _tree(cells):
    """Prefix tree over projections, so membership counting only descends into hits."""
    children = {}
    roots = []
    for c in dict.fromkeys(cells):
        node = c
        chain = []
        while node is not None:
            chain.append(node)
            node = node.base
        chain.reverse()
        if chain[0] not in roots:
            roots.append(chain[0])
        for parent, child in zip(chain, chain[1:]):
            kids = children.setdefault(parent, [])
            if child not in kids:
                kids.append(child)
    return roots, children


def _stage_holds(cell, x) -> bool:
    m = cell.dim - 1
    s = cell.stage
    y, pre = x[m], x[:m]
    if s.is_graph:
        return y == s.lower(pre)
    if s.lower is not NEG_INF and not y > s.lower(pre):
        return False
    if s.upper is not POS_INF and not y < s.upper(pre):
        return False
    return True


def count_containing(cells, x, tree=None) -> int:
    roots, children = tree or _tree(cells)
    n = len(x)
    top = set(cells)
    count = 0
    stack = [c for c in roots if _stage_holds(c, x)]
    while stack:
        c = stack.pop()
        if c.dim == n:
            if c in top:
                count += 1
            continue
        stack.extend(k for k in children.get(c, ()) if _stage_holds(k, x))
    return count


def partition_check(D: Decomposition, samples: int = 500, seed=0, box=None) -> Check:
    """Sampled points of the carrier lie in exactly one cell."""
    check = Check("partition: carrier samples lie in exactly one cell", exact=False)
    rng = random.Random(seed)
    tree = _tree(D.cells)
    box = box or [(-6, 6)] * D.n
    # half the samples uniform in a box, half drawn from the cells themselves
    pts = []
    for _ in range(samples // 2):
        pts.append(tuple(Q(rng.randrange(int(lo) * 8, int(hi) * 8 + 1), 8) for lo, hi in box))
    while len(pts) < samples and D.cells:
        pts.extend(sample_points(rng.choice(D.cells), 1, rng))
    for p in pts:
        if not D.in_carrier(p):
            continue
        check.checked += 1
        k = count_containing(D.cells, p, tree)
        if k != 1:
            check.violations.append((p, k))
    return check


def refinement_check(coarse: Decomposition, fine: Decomposition, samples: int = 500, seed=0) -> Report:
    """Every coarse cell is the union of the fine cells inside it."""
    report = Report()
    exact = report.add("refinement: every output cell lies inside one input cell", exact=True)
    sampled = report.add("refinement: samples of input cells land in output cells inside them", exact=False)
    parent = {}
    for c in fine.cells:
        exact.checked += 1
        p = c.center()
        owners = [A for A in coarse.cells if A.contains(p)]
        if len(owners) != 1:
            exact.violations.append((str(c), f"{len(owners)} owners"))
            continue
        A = owners[0]
        if not _inside(c, A):
            exact.violations.append((str(c), str(A)))
        parent[c] = A
    rng = random.Random(seed)
    per = max(1, samples // max(1, len(coarse.cells)))
    drawn = 0
    while drawn < samples and coarse.cells:
        for A in coarse.cells:
            for p in sample_points(A, per, rng):
                drawn += 1
                sampled.checked += 1
                hits = [c for c in fine.cells if c.contains(p)]
                if len(hits) != 1 or parent.get(hits[0]) != A:
                    sampled.violations.append((p, str(A)))
            if drawn >= samples:
                break
    return report


def _inside(c, A) -> bool:
    """Exact c ⊆ A: no constraint of A can be violated on c."""
    base = c.constraints()
    for con in A.constraints():
        if con.rel == "=":
            negs = [Constraint(con.coeffs, con.const, ">"), Constraint(tuple(-a for a in con.coeffs), -con.const, ">")]
        else:
            rel = ">=" if con.rel == ">" else ">"
            negs = [Constraint(tuple(-a for a in con.coeffs), -con.const, rel)]
        for neg in negs:
            if is_feasible(LinearSystem(c.dim, base + [neg]))[0]:
                return False
    return True


def format_box(B) -> list:
    return [[format_scalar(lo), format_scalar(hi)] for lo, hi in B]
