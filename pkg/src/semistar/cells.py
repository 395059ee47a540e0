"""Recursive linear cells: points and intervals in R, graphs and bands above.

Every cell exposes the same stage view: ``stages()`` lists, for each
coordinate m, the pair of bounding maps of arity m-1 (for m = 1 these are
arity-0 constants) and whether that coordinate is a graph or a band.  Most
algorithms only ever walk that view.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import NamedTuple, Optional

from .scalar import (
    NEG_INF,
    POS_INF,
    AffineMap,
    Q,
    ext_from_json,
    format_scalar,
    half_map,
    is_infinite,
    scalar,
)


class Stage(NamedTuple):
    lower: object  # ExtAffine of arity m-1
    upper: object
    is_graph: bool


class CellError(ValueError):
    pass


class _Cell:
    """Shared behaviour; concrete cells are frozen dataclasses below."""

    # --- structure -----------------------------------------------------
    @property
    def stage(self) -> Stage:
        raise NotImplementedError

    @property
    def base(self):
        return None

    def stages(self) -> list:
        cached = self.__dict__.get("_stages")
        if cached is not None:
            return cached
        out = []
        c = self
        while c is not None:
            out.append(c.stage)
            c = c.base
        out.reverse()
        object.__setattr__(self, "_stages", out)
        return out

    @property
    def dim(self) -> int:
        d, c = 0, self
        while c is not None:
            d += 1
            c = c.base
        return d

    @property
    def index(self) -> tuple:
        return tuple(0 if s.is_graph else 1 for s in self.stages())

    def projection(self, m: int):
        if not 1 <= m <= self.dim:
            raise CellError(f"projection index {m} out of range 1..{self.dim}")
        c = self
        for _ in range(self.dim - m):
            c = c.base
        return c

    # --- membership ----------------------------------------------------
    def _check_dim(self, x):
        if len(x) != self.dim:
            raise CellError(f"dimension mismatch: cell in R^{self.dim}, point has {len(x)} coordinates")

    def contains(self, x) -> bool:
        self._check_dim(x)
        for m, s in enumerate(self.stages()):
            y, pre = x[m], x[:m]
            lo = s.lower if is_infinite(s.lower) else s.lower(pre)
            if s.is_graph:
                if y != lo:
                    return False
                continue
            if lo is not NEG_INF and not y > lo:
                return False
            if s.upper is not POS_INF and not y < s.upper(pre):
                return False
        return True

    def closure_contains(self, x) -> bool:
        self._check_dim(x)
        for m, s in enumerate(self.stages()):
            y, pre = x[m], x[:m]
            if s.is_graph:
                if y != s.lower(pre):
                    return False
                continue
            if s.lower is not NEG_INF and y < s.lower(pre):
                return False
            if s.upper is not POS_INF and y > s.upper(pre):
                return False
        return True

    def constraints(self, closed: bool = False, n: Optional[int] = None):
        """Linear constraints (oracle format) cutting out the cell or its closure."""
        from .oracle import Constraint

        n = n or self.dim
        key = ("_cons", closed, n)
        cached = self.__dict__.get(key)
        if cached is not None:
            return list(cached)
        strict = ">=" if closed else ">"
        out = []
        for m, s in enumerate(self.stages()):
            coord = AffineMap.coordinate(m, n)
            if s.is_graph:
                f = coord - s.lower.pad(n)
                out.append(Constraint(f.coeffs, f.const, "="))
                continue
            if s.lower is not NEG_INF:
                f = coord - s.lower.pad(n)
                out.append(Constraint(f.coeffs, f.const, strict))
            if s.upper is not POS_INF:
                f = s.upper.pad(n) - coord
                out.append(Constraint(f.coeffs, f.const, strict))
        self.__dict__[key] = tuple(out)
        return out

    def center(self) -> tuple:
        """A deterministic exact point of the cell (fiber midpoints)."""
        pt = []
        for s in self.stages():
            lo = s.lower if is_infinite(s.lower) else s.lower(pt)
            if s.is_graph:
                pt.append(lo)
                continue
            hi = s.upper if is_infinite(s.upper) else s.upper(pt)
            if lo is NEG_INF and hi is POS_INF:
                pt.append(Q(0))
            elif lo is NEG_INF:
                pt.append(hi - 1)
            elif hi is POS_INF:
                pt.append(lo + 1)
            else:
                pt.append((lo + hi) / 2)
        return tuple(pt)

    # --- shape ---------------------------------------------------------
    def has_infinite_map(self) -> bool:
        return any(is_infinite(s.lower) or is_infinite(s.upper) for s in self.stages())

    def is_bounded(self) -> bool:
        if self.has_infinite_map():
            return False
        from .oracle import bounding_box

        return bounding_box(self) != "unbounded"

    def is_canonical(self) -> bool:
        if self.has_infinite_map():
            return False
        for s in self.stages():
            if s.is_graph:
                if not s.lower.is_zero():
                    return False
            elif not s.lower.is_zero():
                return False
        return True

    def validate(self) -> None:
        """Check every band is non-degenerate over its base (exact)."""
        from .oracle import compare_on_cell

        c = self
        while c is not None:
            s = c.stage
            if not s.is_graph and c.base is not None:
                if compare_on_cell(s.lower, s.upper, c.base) != "<":
                    raise CellError(f"band bounds are not strictly ordered over the base: {c!r}")
            c = c.base

    def to_json(self) -> dict:
        raise NotImplementedError

    def __str__(self):
        return _describe(self)


def _describe(c, top="<") -> str:
    parts = []
    for m, s in enumerate(c.stages()):
        if s.is_graph:
            parts.append(f"x{m + 1}={s.lower!r}")
        else:
            parts.append(f"{s.lower!r}<x{m + 1}{top}{s.upper!r}")
    return "{" + ", ".join(parts) + "}"


def _ext_scalar(v):
    if v is NEG_INF or v is POS_INF:
        return v
    if isinstance(v, str) and v.strip() in ("-inf", "+inf", "inf"):
        return NEG_INF if v.strip() == "-inf" else POS_INF
    return scalar(v)


@dataclass(frozen=True)
class Point(_Cell):
    c: Q

    def __post_init__(self):
        object.__setattr__(self, "c", scalar(self.c))

    @property
    def stage(self):
        f = AffineMap.constant(self.c)
        return Stage(f, f, True)

    def to_json(self):
        return {"type": "point", "c": format_scalar(self.c)}

    def __repr__(self):
        return f"Point({format_scalar(self.c)})"


@dataclass(frozen=True)
class Interval(_Cell):
    lo: object
    hi: object

    def __post_init__(self):
        lo, hi = _ext_scalar(self.lo), _ext_scalar(self.hi)
        if lo is POS_INF or hi is NEG_INF:
            raise CellError("interval endpoints out of order")
        if not is_infinite(lo) and not is_infinite(hi) and not lo < hi:
            raise CellError(f"empty interval ({lo}, {hi})")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def stage(self):
        lo = self.lo if is_infinite(self.lo) else AffineMap.constant(self.lo)
        hi = self.hi if is_infinite(self.hi) else AffineMap.constant(self.hi)
        return Stage(lo, hi, False)

    def to_json(self):
        f = lambda v: v.to_json() if is_infinite(v) else format_scalar(v)  # noqa: E731
        return {"type": "interval", "lo": f(self.lo), "hi": f(self.hi)}

    def __repr__(self):
        f = lambda v: repr(v) if is_infinite(v) else format_scalar(v)  # noqa: E731
        return f"Interval({f(self.lo)}, {f(self.hi)})"


@dataclass(frozen=True)
class Graph(_Cell):
    base_cell: object
    f: AffineMap

    def __post_init__(self):
        if self.f.arity != self.base_cell.dim:
            raise CellError("graph map arity must equal the base dimension")

    @property
    def base(self):
        return self.base_cell

    @property
    def stage(self):
        return Stage(self.f, self.f, True)

    def to_json(self):
        return {"type": "graph", "base": self.base_cell.to_json(), "f": self.f.to_json()}

    def __repr__(self):
        return f"Graph({self.base_cell!r}, {self.f!r})"


@dataclass(frozen=True)
class Band(_Cell):
    base_cell: object
    lo: object
    hi: object

    def __post_init__(self):
        if self.lo is POS_INF or self.hi is NEG_INF:
            raise CellError("band bounds out of order")
        for g in (self.lo, self.hi):
            if not is_infinite(g) and g.arity != self.base_cell.dim:
                raise CellError("band map arity must equal the base dimension")

    @property
    def base(self):
        return self.base_cell

    @property
    def stage(self):
        return Stage(self.lo, self.hi, False)

    def to_json(self):
        return {"type": "band", "base": self.base_cell.to_json(), "lo": self.lo.to_json(), "hi": self.hi.to_json()}

    def __repr__(self):
        return f"Band({self.base_cell!r}, {self.lo!r}, {self.hi!r})"


LinearCell = _Cell


def make_cell(base, lower, upper, is_graph: bool):
    """Build the right constructor from a stage description."""
    if base is None:
        if is_graph:
            return Point(lower.const)
        lo = lower if is_infinite(lower) else lower.const
        hi = upper if is_infinite(upper) else upper.const
        return Interval(lo, hi)
    if is_graph:
        return Graph(base, lower)
    return Band(base, lower, upper)


def cell_from_json(obj, validate: bool = False):
    kind = obj.get("type")
    if kind == "point":
        cell = Point(scalar(obj["c"]))
    elif kind == "interval":
        cell = Interval(_ext_scalar(obj["lo"]), _ext_scalar(obj["hi"]))
    elif kind == "graph":
        cell = Graph(cell_from_json(obj["base"]), ext_from_json(obj["f"]))
    elif kind == "band":
        cell = Band(cell_from_json(obj["base"]), ext_from_json(obj["lo"]), ext_from_json(obj["hi"]))
    else:
        raise CellError(f"unknown cell constructor {kind!r}")
    if validate:
        cell.validate()
    return cell


# ------------------------------------------------------------ predicates

def contains(C, x) -> bool:
    return C.contains(x)


def closure_contains(C, x) -> bool:
    return C.closure_contains(x)


def projection(C, m: int):
    return C.projection(m)


def is_bounded(C) -> bool:
    return C.is_bounded()


def is_canonical(C) -> bool:
    return C.is_canonical()


def same_set(A, B) -> bool:
    """Set equality of two cells: equal index and stage maps agreeing on the base."""
    from .oracle import compare_on_cell

    if A.dim != B.dim or A.index != B.index:
        return False
    if A.base is not None and not same_set(A.base, B.base):
        return False
    sa, sb = A.stage, B.stage
    pairs = [(sa.lower, sb.lower)] if sa.is_graph else [(sa.lower, sb.lower), (sa.upper, sb.upper)]
    for f, g in pairs:
        if is_infinite(f) or is_infinite(g):
            if f is not g:
                return False
        elif A.base is None:
            if f.const != g.const:
                return False
        elif compare_on_cell(f, g, A.base) != "=":
            return False
    return True


def _labels_below(index):
    return list(product(*[(0, 1) if i else (0,) for i in index]))


def _check_label(label, index, what="label"):
    if len(label) != len(index) or any(l not in (0, 1) or l > i for l, i in zip(label, index)):
        raise CellError(f"{what} {tuple(label)} is not <= cell index {index}")


# ------------------------------------------------------------ faces

def sigma_face(D, sigma):
    """The sigma-face of a canonical cell: band stages with sigma_m = 0 collapse to 0."""
    if not D.is_canonical():
        raise CellError("faces are defined for canonical cells only")
    sigma = tuple(sigma)
    _check_label(sigma, D.index, "sigma")
    return _face(D, sigma)


def _face(D, sigma):
    base = None if D.base is None else _face(D.base, sigma[:-1])
    s = D.stage
    arity = D.dim - 1
    if s.is_graph or sigma[-1] == 0:
        return make_cell(base, AffineMap.zero(arity), AffineMap.zero(arity), True)
    return make_cell(base, s.lower, s.upper, False)


def faces(D) -> list:
    return [(sigma, _face(D, sigma)) for sigma in _labels_below(D.index)]


def is_face_of(C, D) -> bool:
    if not (C.is_canonical() and D.is_canonical()):
        raise CellError("is_face_of takes canonical cells")
    if C.dim != D.dim:
        return False
    for sigma, F in faces(D):
        if sigma == C.index and same_set(F, C):
            return True
    return False


# ------------------------------------------------------------ half-cells

@dataclass(frozen=True)
class HalfCell(_Cell):
    """A cell whose band stages have a weak upper bound: lower < y <= upper."""

    base_cell: object
    lower: object
    upper: object
    graph: bool

    @property
    def base(self):
        return self.base_cell

    @property
    def stage(self):
        return Stage(self.lower, self.upper, self.graph)

    def contains(self, x) -> bool:
        self._check_dim(x)
        for m, s in enumerate(self.stages()):
            y, pre = x[m], x[:m]
            if s.is_graph:
                if y != s.lower(pre):
                    return False
            elif not (s.lower(pre) < y <= s.upper(pre)):
                return False
        return True

    def constraints(self, closed: bool = False, n: Optional[int] = None):
        from .oracle import Constraint

        n = n or self.dim
        out = []
        for m, s in enumerate(self.stages()):
            coord = AffineMap.coordinate(m, n)
            if s.is_graph:
                f = coord - s.lower.pad(n)
                out.append(Constraint(f.coeffs, f.const, "="))
                continue
            f = coord - s.lower.pad(n)
            out.append(Constraint(f.coeffs, f.const, ">=" if closed else ">"))
            f = s.upper.pad(n) - coord
            out.append(Constraint(f.coeffs, f.const, ">="))
        return out

    def top(self) -> tuple:
        """The point reached by taking every band stage at its (closed) upper bound."""
        pt = []
        for s in self.stages():
            pt.append((s.lower if s.is_graph else s.upper)(pt))
        return tuple(pt)

    def to_json(self):
        return {
            "type": "halfcell",
            "base": None if self.base_cell is None else self.base_cell.to_json(),
            "lower": self.lower.to_json(),
            "upper": self.upper.to_json(),
            "graph": self.graph,
        }

    def __repr__(self):
        return "HalfCell" + _describe(self, top="<=")


def half_cell(C) -> HalfCell:
    """C' : every band (0, g) becomes (0, g/2]; singletons stay."""
    if C.dim == 1 and isinstance(C, Point):
        f = AffineMap.constant(C.c)
        return HalfCell(None, f, f, True)
    if not C.is_canonical():
        raise CellError("half-cells are defined for canonical cells only")
    return _half(C)


def _half(C):
    base = None if C.base is None else _half(C.base)
    s = C.stage
    if s.is_graph:
        return HalfCell(base, s.lower, s.lower, True)
    return HalfCell(base, s.lower, half_map(s.upper), False)


# ------------------------------------------------------------ corners

def corner(D, label) -> tuple:
    label = tuple(label)
    _check_label(label, D.index)
    pt = []
    for s, l in zip(D.stages(), label):
        f = s.lower if (s.is_graph or l == 0) else s.upper
        if is_infinite(f):
            raise CellError("corners of unbounded cells are not finite")
        pt.append(f(pt))
    return tuple(pt)


def corners(D) -> list:
    """All (label, point) pairs; coinciding corners are listed once per label."""
    if D.has_infinite_map():
        raise CellError("corners require a bounded cell")
    return [(label, corner(D, label)) for label in _labels_below(D.index)]
