"""Deformation retractions and contractions of cells and stars, evaluated exactly.

Everything here is stored structurally: a canonical retraction keeps its base
retraction, half-map and time bound, and evaluation replays the recursion.
Nice retractions also expose ``trajectory(x)``, the exact PL path
``t -> H(t, x)``, which serves as an independent oracle for the closed-form
fixing point.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import product

from .cells import CellError, HalfCell, Point, corners, half_cell, make_cell, sigma_face
from .decomposition import Decomposition, Report, clip_map, escape_witness, meets_closure
from .oracle import LinearSystem, compare_on_cell, is_feasible, sample_closure_points, sample_points, sup_over_closure
from .pl import PLFunction, PLPath, combine, pl_min, splice
from .scalar import AffineMap, Q, format_scalar, half_map, point, scalar


class RetractionError(ValueError):
    pass


class UnboundedCarrierError(RetractionError):
    """Unbounded sets admit no definable contraction (no poles), so we refuse them."""


class HypothesisError(RetractionError):
    pass


def _rand_unit(rng, closed=True):
    if closed:
        r = rng.random()
        if r < 0.1:
            return Q(0)
        if r < 0.2:
            return Q(1)
    den = rng.choice((2, 3, 4, 5, 7, 8, 16))
    return Q(rng.randrange(1, den), den)


def _rand_between(rng, a, b):
    return a + (b - a) * _rand_unit(rng)


def sample_half_cell(H: HalfCell, k: int, rng, closed: bool = False) -> list:
    """Points of a half-cell, with the weak top hit about a third of the time."""
    out = []
    for _ in range(k):
        pt = []
        for s in H.stages():
            lo = s.lower(pt)
            if s.is_graph:
                pt.append(lo)
                continue
            hi = s.upper(pt)
            if rng.random() < 1 / 3:
                pt.append(hi)
            else:
                pt.append(lo + (hi - lo) * _rand_unit(rng, closed=closed))
        out.append(tuple(pt))
    return out


# ------------------------------------------------------------------ base class

class Retraction:
    """H : [0, q] x X -> X with target A.  Subclasses set ``q`` and ``nice``."""

    q = Q(0)
    nice = False

    def __call__(self, t, x):
        t = scalar(t)
        x = point(x)
        if not 0 <= t <= self.q:
            raise RetractionError(f"t={format_scalar(t)} outside [0, {format_scalar(self.q)}]")
        if not self.in_domain(x):
            raise RetractionError(f"point {_fmt(x)} outside the domain")
        return self._eval(t, x)

    def fixing_point(self, x):
        """Least t with H(t, x) = x (closed form)."""
        if not self.nice:
            raise RetractionError("fixing points are only computed for nice retractions")
        x = point(x)
        if not self.in_domain(x):
            raise RetractionError(f"point {_fmt(x)} outside the domain")
        return self._alpha(x)

    def scan_fixing_point(self, x):
        """Least t with H(t, x) = x, found by scanning the affine pieces of the trajectory."""
        x = point(x)
        return self.trajectory(x).first_time_at(x)

    def trajectory(self, x) -> PLPath:
        raise NotImplementedError

    def _eval(self, t, x):
        raise NotImplementedError

    def _alpha(self, x):
        raise NotImplementedError

    def in_domain(self, x) -> bool:
        raise NotImplementedError

    def in_target(self, x) -> bool:
        raise NotImplementedError

    def domain_samples(self, k, rng) -> list:
        raise NotImplementedError

    def target_samples(self, k, rng) -> list:
        raise NotImplementedError


def _fmt(x):
    return "(" + ", ".join(format_scalar(v) for v in x) + ")"


# ------------------------------------------------------------------ canonical retraction

class CanonicalRetraction(Retraction):
    """The canonical retraction of cl(D) onto the closed half-cell of the sigma-face.

    Per coordinate, with (x, y) split into base and last coordinate and
    f = g/2 the half-map of the band (0, g):
      graph stage:              (H'(t, x), y)
      band collapsed (s = 0):   (H'(t, x), min{y, t, f H'(t, x)})          for t < a_x
                                (H'(t, x), min{y, t, t - a_x + f H'(t, x)}) for t >= a_x
      band kept (s = 1):        the same without the bare t term,
    where H' is the base retraction (extended by the identity beyond its own
    time bound) and a_x its fixing point.  In R it is min{t, y} on a collapsed
    interval (0, a), min{y, t + a/2} on a kept one and the identity on a point.
    """

    nice = True

    def __init__(self, D, sigma):
        if not D.is_canonical():
            raise RetractionError(f"not a canonical cell: {D!r}")
        sigma = tuple(int(s) for s in sigma)
        try:
            self.face = sigma_face(D, sigma)
        except CellError as e:
            raise RetractionError(str(e)) from None
        self.cell = D
        self.sigma = sigma
        self.half = half_cell(self.face)
        s = D.stage
        n = D.dim
        if n == 1:
            self.base = None
            self.f = None
            if s.is_graph:
                self.case = "point"
                self.q = Q(0)
            else:
                # a kept interval (0, a) retracts onto (0, a/2] by min{y, t + a/2}:
                # Case III read over R^0, where the identity would miss the target
                self.case = "min" if sigma[0] == 0 else "top"
                self.q = s.upper(())
                self.f = self.q / 2
            return
        self.base = type(self)(D.base, sigma[:-1])
        if s.is_graph:
            self.case = "I"
            self.f = None
            self.q = self.base.q
        else:
            self.case = "II" if sigma[-1] == 0 else "III"
            self.f = half_map(s.upper)
            self.q = self.base.q + sup_over_closure(s.upper, D.base)

    # evaluation -------------------------------------------------------
    def _eval(self, t, x):
        y = x[-1]
        if self.base is None:
            if self.case == "point":
                return (y,)
            return (self._fiber(self.case, t, y, self.f, Q(0)),)
        xb = x[:-1]
        z = self.base._eval(min(t, self.base.q), xb)
        if self.case == "I":
            return z + (y,)
        alpha = self.base._alpha(xb)
        return z + (self._fiber(self.case, t, y, self.f(z), alpha),)

    def _fiber(self, case, t, y, fz, alpha):
        if case == "min":
            return min(t, y)
        if case == "top":
            return min(y, t + fz)
        if case == "II":
            return min(y, t, fz) if t < alpha else min(y, t, t - alpha + fz)
        return min(y, fz) if t < alpha else min(y, t - alpha + fz)

    def _alpha(self, x):
        y = x[-1]
        if self.base is None:
            if self.case == "min":
                return y
            return max(Q(0), y - self.f) if self.case == "top" else Q(0)
        ax = self.base._alpha(x[:-1])
        if self.case == "I":
            return ax
        fx = self.f(x[:-1])
        if self.case == "II":
            return max(ax, y, y + ax - fx)
        return max(ax, y + ax - fx)

    # oracle -----------------------------------------------------------
    def trajectory(self, x) -> PLPath:
        x = point(x)
        return self._trajectory(x, self.q)

    def _trajectory(self, x, span) -> PLPath:
        y = x[-1]
        if self.base is None:
            if self.case == "min":
                last = pl_min(PLFunction.identity(0, self.q), PLFunction.constant(y, 0, self.q))
            elif self.case == "top":
                shifted = combine([PLFunction.identity(0, self.q)], [1], self.f)
                last = pl_min(PLFunction.constant(y, 0, self.q), shifted)
            else:
                last = PLFunction.constant(y, 0, self.q)
            return PLPath((last,)).extend_to(span)
        xb = x[:-1]
        bp = self.base._trajectory(xb, span)
        if self.case == "I":
            return PLPath(bp.coords + (PLFunction.constant(y, 0, span),))
        alpha = bp.first_time_at(xb)
        if alpha is None:
            raise RetractionError("base trajectory never reaches its start point")
        ident = PLFunction.identity(0, span)
        const_y = PLFunction.constant(y, 0, span)
        fz = bp.affine_image([self.f]).coords[0]
        late = combine([ident, fz], [1, 1], -alpha)
        if self.case == "II":
            before, after = pl_min(const_y, ident, fz), pl_min(const_y, ident, late)
        else:
            before, after = pl_min(const_y, fz), pl_min(const_y, late)
        last = splice(before.restrict(0, alpha), after.restrict(alpha, span))
        return PLPath(bp.coords + (last,))

    def last_coordinate_monotone(self, x) -> bool:
        """After the base fixes x, the last coordinate is non-decreasing in t."""
        if self.base is None or self.case == "I":
            return True
        x = point(x)
        alpha = self.base._alpha(x[:-1])
        last = self.trajectory(x).coords[-1].restrict(alpha, self.q)
        return all(a <= b for a, b in zip(last.vs, last.vs[1:]))

    # sets -------------------------------------------------------------
    def in_domain(self, x) -> bool:
        return self.cell.closure_contains(x)

    def in_target(self, x) -> bool:
        return self.half.closure_contains(x)

    def domain_samples(self, k, rng) -> list:
        return sample_closure_points(self.cell, k, rng)

    def target_samples(self, k, rng) -> list:
        return sample_half_cell(self.half, k, rng, closed=True)

    # C ∪ D, with C the face: H restricts to a retraction onto the open half-cell
    def inner_contains(self, x) -> bool:
        return self.cell.contains(x) or self.face.contains(x)

    def inner_target(self, x) -> bool:
        return self.half.contains(x)

    def inner_samples(self, k, rng) -> list:
        out = []
        for _ in range(k):
            out += sample_points(self.cell if rng.random() < 0.5 else self.face, 1, rng)
        return out


def canonical_retraction(D, sigma) -> CanonicalRetraction:
    return CanonicalRetraction(D, sigma)


# ------------------------------------------------------------------ corner transforms

@dataclass(frozen=True)
class CornerTransform:
    """Triangular affine change of coordinates taking the corner of D to 0 and D to a canonical cell.

    Coordinate m becomes x_m - f(x_<m) on graph stages and on bands taken at
    their lower map, and g(x_<m) - x_m on bands taken at their upper map.
    """

    cell: object
    label: tuple
    forward_maps: tuple
    inverse_maps: tuple
    image: object

    def forward(self, x) -> tuple:
        return tuple(m(x) for m in self.forward_maps)

    def inverse(self, u) -> tuple:
        return tuple(m(u) for m in self.inverse_maps)

    __call__ = forward

    @property
    def corner(self) -> tuple:
        return self.inverse((Q(0),) * self.cell.dim)


def corner_transform(D, label) -> CornerTransform:
    if D.has_infinite_map():
        raise UnboundedCarrierError(f"corner transforms need a bounded cell: {D!r}")
    label = tuple(int(l) for l in label)
    if len(label) != D.dim or any(l not in (0, 1) or l > i for l, i in zip(label, D.index)):
        raise RetractionError(f"label {label} is not <= cell index {D.index}")
    n = D.dim
    fwd, inv = [], []
    image = None
    for m, (s, l) in enumerate(zip(D.stages(), label)):
        upper_side = not s.is_graph and l == 1
        phi = s.upper if upper_side else s.lower
        sign = -1 if upper_side else 1
        coord = AffineMap.coordinate(m, n)
        fwd.append((coord - phi.pad(n)).scale(sign))
        inv.append(coord.scale(sign) + (phi.compose(inv[:m]) if m else phi.pad(n)))
        low_inv = [AffineMap(g.coeffs[:m], g.const) for g in inv[:m]]
        zero = AffineMap.zero(m)
        if s.is_graph:
            image = make_cell(image, zero, zero, True)
        else:
            width = s.upper - s.lower
            image = make_cell(image, zero, width.compose(low_inv) if m else width, False)
    return CornerTransform(D, label, tuple(fwd), tuple(inv), image)


# ------------------------------------------------------------------ common corners

@dataclass(frozen=True)
class CommonCorner:
    point: tuple
    label_c: tuple
    label_d: tuple
    # every label of D naming the same point; more than one when a band of D
    # pinches (lower = upper) over the corner
    labels_d: tuple = ()


def _maps_agree(f, g, base) -> bool:
    if base is None:
        return f.const == g.const
    return compare_on_cell(f, g, base) == "="


def common_corner(C, D, decomposition=None) -> list:
    """Corners of C read as corners of D, each with both labels."""
    if decomposition is not None:
        cells = decomposition.cells if isinstance(decomposition, Decomposition) else list(decomposition)
        if C not in cells or D not in cells:
            raise HypothesisError("both cells must belong to the decomposition")
    if C.dim != D.dim:
        raise HypothesisError("cells live in different dimensions")
    if not meets_closure(C, D):
        raise HypothesisError("C does not meet the closure of D")
    if C.has_infinite_map() or D.has_infinite_map():
        raise UnboundedCarrierError("corners of unbounded cells are not finite")
    out = []
    cstages, dstages = C.stages(), D.stages()
    for label_c, pt in corners(C):
        options = []
        for m, (sc, sd, l) in enumerate(zip(cstages, dstages, label_c)):
            h = sc.upper if (not sc.is_graph and l == 1) else sc.lower
            base = C.projection(m) if m else None
            if sd.is_graph:
                opts = [0] if _maps_agree(h, sd.lower, base) else []
            else:
                opts = [k for k, g in ((0, sd.lower), (1, sd.upper)) if _maps_agree(h, g, base)]
            if not opts:
                raise HypothesisError(f"corner {_fmt(pt)} of C is not a corner of D (decomposition not special?)")
            options.append(opts)
        labels = tuple(product(*options))
        out.append(CommonCorner(pt, tuple(label_c), labels[0], labels))
    return out


def _resolve_corner(C, D, c) -> CommonCorner:
    shared = common_corner(C, D)
    c = tuple(c)
    for cc in shared:
        if cc.label_c == c:
            return cc
    for cc in shared:
        if cc.point == point(c):
            return cc
    raise HypothesisError(f"{c} is not a corner of C")


# ------------------------------------------------------------------ c-retractions

class CRetraction(Retraction):
    """T^-1 o H o T for the corner transform T of D and the canonical H of D_c towards the face C_c."""

    nice = True

    def __init__(self, D, C, c, canonical_cls=CanonicalRetraction, label_d=None):
        if D.has_infinite_map():
            raise UnboundedCarrierError(f"c-retractions need a bounded cell: {D!r}")
        self.cell = D
        self.face_cell = C
        cc = _resolve_corner(C, D, c)
        if label_d is not None:
            if tuple(label_d) not in cc.labels_d:
                raise HypothesisError(f"{tuple(label_d)} does not name the corner {_fmt(cc.point)} of D")
            cc = CommonCorner(cc.point, cc.label_c, tuple(label_d), cc.labels_d)
        self.common = cc
        self.T = corner_transform(D, cc.label_d)
        self.T_face = corner_transform(C, cc.label_c)
        self.canonical = canonical_cls(self.T.image, C.index)
        self.q = self.canonical.q

    def _eval(self, t, x):
        return self.T.inverse(self.canonical._eval(t, self.T.forward(x)))

    def _alpha(self, x):
        return self.canonical._alpha(self.T.forward(x))

    def trajectory(self, x) -> PLPath:
        return self.canonical.trajectory(self.T.forward(point(x))).affine_image(self.T.inverse_maps)

    def last_coordinate_monotone(self, x) -> bool:
        return self.canonical.last_coordinate_monotone(self.T.forward(point(x)))

    def in_domain(self, x) -> bool:
        return self.cell.closure_contains(x)

    def in_target(self, x) -> bool:
        return self.canonical.in_target(self.T.forward(x))

    def domain_samples(self, k, rng) -> list:
        return sample_closure_points(self.cell, k, rng)

    def target_samples(self, k, rng) -> list:
        return [self.T.inverse(u) for u in self.canonical.target_samples(k, rng)]

    def inner_contains(self, x) -> bool:
        return self.cell.contains(x) or self.face_cell.contains(x)

    def inner_target(self, x) -> bool:
        return self.canonical.inner_target(self.T.forward(x))

    def inner_samples(self, k, rng) -> list:
        out = []
        for _ in range(k):
            out += sample_points(self.cell if rng.random() < 0.5 else self.face_cell, 1, rng)
        return out


def c_retraction(D, C, c, canonical_cls=CanonicalRetraction) -> CRetraction:
    return CRetraction(D, C, c, canonical_cls)


# ------------------------------------------------------------------ glued star retraction

def _cells_of(D_list):
    if isinstance(D_list, Decomposition):
        return list(D_list.cells)
    return list(D_list)


class GluedRetraction(Retraction):
    """H(t, x) = H_i(min{t, q_i}, x) for x in D_i, onto the c-half-cell of C."""

    nice = True

    def __init__(self, D_list, C, c, canonical_cls=CanonicalRetraction):
        cells = list(dict.fromkeys(_cells_of(D_list)))
        for E in cells:
            if E.has_infinite_map():
                raise UnboundedCarrierError(f"unbounded cell {E!r}: unbounded sets are not definably contractible")
        if C not in cells:
            raise HypothesisError("C is not one of the cells")
        for E in cells:
            if E != C and not meets_closure(C, E):
                raise HypothesisError(f"the closure of {E!r} misses C")
        self.cells = cells
        self.C = C
        label = tuple(c)
        self.pieces = [CRetraction(E, C, label, canonical_cls) for E in cells]
        self._nested = None
        labels = self._choose_labels()
        self.pieces = [
            p if p.common.label_d == l else CRetraction(E, C, label, canonical_cls, label_d=l)
            for p, E, l in zip(self.pieces, cells, labels)
        ]
        self.label = self.pieces[cells.index(C)].common.label_c
        self.T = corner_transform(C, self.label)
        self.half = half_cell(self.T.image)
        self.q = max(p.q for p in self.pieces)

    def locate(self, x):
        for i, E in enumerate(self.cells):
            if E.contains(x):
                return i
        return None

    def _piece(self, x):
        i = self.locate(x)
        if i is None:
            raise RetractionError(f"point {_fmt(x)} outside the carrier")
        return self.pieces[i]

    def _eval(self, t, x):
        p = self._piece(x)
        return p._eval(min(t, p.q), x)

    def _alpha(self, x):
        return self._piece(x)._alpha(x)

    def trajectory(self, x) -> PLPath:
        x = point(x)
        return self._piece(x).trajectory(x).extend_to(self.q)

    def last_coordinate_monotone(self, x) -> bool:
        return self._piece(point(x)).last_coordinate_monotone(x)

    def in_domain(self, x) -> bool:
        return self.locate(x) is not None

    def in_target(self, x) -> bool:
        return self.half.contains(self.T.forward(x))

    def domain_samples(self, k, rng) -> list:
        return [sample_points(rng.choice(self.cells), 1, rng)[0] for _ in range(k)]

    def target_samples(self, k, rng) -> list:
        return [self.T.inverse(u) for u in sample_half_cell(self.half, k, rng)]

    def nested_pairs(self) -> list:
        """Index pairs (i, j), i != j, with D_i inside cl(D_j)."""
        if self._nested is None:
            self._nested = [
                (i, j)
                for i, A in enumerate(self.cells)
                for j, B in enumerate(self.cells)
                if i != j and meets_closure(A, B) and escape_witness(A, B) is None
            ]
        return self._nested

    def _choose_labels(self, limit: int = 4096) -> list:
        """Pick, where a corner has several D-labels, the ones whose transforms agree most.

        The labels are ambiguous only over pinched bands.  We search the
        (small) product of choices for the fewest disagreeing nested pairs.
        """
        options = [p.common.labels_d for p in self.pieces]
        free = [i for i, o in enumerate(options) if len(o) > 1]
        default = [p.common.label_d for p in self.pieces]
        if not free:
            return default
        transforms = {}

        def T(i, l):
            if (i, l) not in transforms:
                transforms[i, l] = corner_transform(self.cells[i], l)
            return transforms[i, l]

        agree = {}

        def cost(choice):
            bad = 0
            for i, j in self.nested_pairs():
                key = (i, choice[i], j, choice[j])
                if key not in agree:
                    Ti, Tj = T(i, choice[i]), T(j, choice[j])
                    agree[key] = all(_agree_on_closure(a, b, self.cells[i]) for a, b in zip(Ti.forward_maps, Tj.forward_maps))
                bad += not agree[key]
            return bad

        total = 1
        for i in free:
            total *= len(options[i])
        best, best_cost = default, cost(default)
        if total <= limit:
            for combo in product(*[options[i] for i in free]):
                choice = list(default)
                for i, l in zip(free, combo):
                    choice[i] = l
                c = cost(choice)
                if c < best_cost:
                    best, best_cost = choice, c
                    if c == 0:
                        break
        return best


    def transform_conflicts(self) -> list:
        """Nested pairs (i, j) on which T_{D_j,c} and T_{D_i,c} disagree over cl(D_i).

        Gluing is coherent when the transforms agree; they cannot when a band
        pinches at the corner, since then both of its edge graphs are in the
        star but the band's transform can anchor at only one of them.
        """
        out = []
        for i, j in self.nested_pairs():
            Ti, Tj = self.pieces[i].T, self.pieces[j].T
            E = self.cells[i]
            for a, b in zip(Ti.forward_maps, Tj.forward_maps):
                if not _agree_on_closure(a, b, E):
                    out.append((i, j))
                    break
        return out


def _agree_on_closure(f, g, E) -> bool:
    d = f - g
    hi = sup_over_closure(d, E)
    lo = -sup_over_closure(-d, E)
    return lo == 0 and hi == 0


def glue_star_retraction(D_list, C, c, canonical_cls=CanonicalRetraction) -> GluedRetraction:
    return GluedRetraction(D_list, C, c, canonical_cls)


# ------------------------------------------------------------------ contractions

class HalfCellContraction(Retraction):
    """Contraction of the half-cell C' of a canonical cell to a point.

    In R: max{a/2 - t, x} on (0, a/2].  Above: run the base contraction while
    riding the top F = g/2 of the fiber, then slide down from F(x) to y.
    """

    def __init__(self, C):
        if not (C.is_canonical() or (C.dim == 1 and isinstance(C, Point))):
            raise RetractionError(f"not a canonical cell: {C!r}")
        self.cell = C
        self.half = half_cell(C)
        s = C.stage
        if C.dim == 1:
            self.base = None
            self.F = None
            if s.is_graph:
                self.q = Q(0)
                self.endpoint = (s.lower(()),)
            else:
                self.q = s.upper(()) / 2
                self.endpoint = (self.q,)
            return
        self.base = HalfCellContraction(C.base)
        if s.is_graph:
            self.F = None
            self.q = self.base.q
            self.endpoint = self.base.endpoint + (s.lower(self.base.endpoint),)
        else:
            self.F = half_map(s.upper)
            self.q = self.base.q + sup_over_closure(self.F, C.base)
            self.endpoint = self.base.endpoint + (self.F(self.base.endpoint),)

    def _eval(self, t, x):
        y = x[-1]
        if self.base is None:
            return x if self.cell.stage.is_graph else (max(self.q - t, y),)
        xb = x[:-1]
        q1 = self.base.q
        if self.F is None:
            return self.base._eval(min(t, q1), xb) + (y,)
        if t < q1:
            z = self.base._eval(t, xb)
            return z + (self.F(z),)
        return xb + (max(self.F(xb) - (t - q1), y),)

    def in_domain(self, x) -> bool:
        return self.half.contains(x)

    def in_target(self, x) -> bool:
        return tuple(x) == self.endpoint

    def domain_samples(self, k, rng) -> list:
        return sample_half_cell(self.half, k, rng)

    def target_samples(self, k, rng) -> list:
        return [self.endpoint]


def half_cell_contraction(C) -> HalfCellContraction:
    return HalfCellContraction(C)


class Contraction(Retraction):
    """Contract the half-cell first (pulled back through T_C), then run the glued retraction."""

    def __init__(self, glued: GluedRetraction):
        self.glued = glued
        self.T = glued.T
        self.K = HalfCellContraction(self.T.image)
        self.q0 = self.K.q
        self.q = self.q0 + glued.q
        self.endpoint = self.T.inverse(self.K.endpoint)

    def _eval(self, t, x):
        if t <= self.q0:
            z = self.glued._eval(Q(0), x)
            return self.T.inverse(self.K._eval(t, self.T.forward(z)))
        return self.glued._eval(t - self.q0, x)

    def in_domain(self, x) -> bool:
        return self.glued.in_domain(x)

    def in_target(self, x) -> bool:
        return tuple(x) == self.endpoint

    def domain_samples(self, k, rng) -> list:
        return self.glued.domain_samples(k, rng)

    def target_samples(self, k, rng) -> list:
        return [self.endpoint]


def contract(D_list, C, c, canonical_cls=CanonicalRetraction) -> Contraction:
    return Contraction(GluedRetraction(D_list, C, c, canonical_cls))


# ------------------------------------------------------------------ loops

def _segment_params(cell, u, v):
    """The set of s in [0, 1] with u + s(v - u) in the cell, as (lo, lo_closed, hi, hi_closed) or None."""
    lo, lo_c, hi, hi_c = Q(0), True, Q(1), True
    d = tuple(b - a for a, b in zip(u, v))
    for con in cell.constraints():
        a = sum(c * di for c, di in zip(con.coeffs, d))
        b = con.const + sum(c * ui for c, ui in zip(con.coeffs, u))
        if a == 0:
            if not (b == 0 if con.rel == "=" else (b >= 0 if con.rel == ">=" else b > 0)):
                return None
            continue
        r = -b / a
        strict = con.rel == ">"
        if con.rel == "=":
            if r > lo or (r == lo and lo_c):
                lo, lo_c = r, True
            if r < hi or (r == hi and hi_c):
                hi, hi_c = r, True
            if not (lo <= r <= hi):
                return None
        elif a > 0:
            if r > lo or (r == lo and strict):
                lo, lo_c = r, not strict
        else:
            if r < hi or (r == hi and strict):
                hi, hi_c = r, not strict
        if lo > hi or (lo == hi and not (lo_c and hi_c)):
            return None
    return lo, lo_c, hi, hi_c


def segment_inside(u, v, cells) -> bool:
    """Whether the closed segment [u, v] is covered by the (convex) cells, decided exactly."""
    pieces = [p for p in (_segment_params(E, u, v) for E in cells) if p is not None]
    r, r_in = Q(0), False
    while not (r == 1 and r_in):
        best = None
        for lo, lo_c, hi, hi_c in pieces:
            if r_in:
                useful = lo <= r and hi > r
            else:
                useful = (lo < r or (lo == r and lo_c)) and (hi > r or (hi == r and hi_c))
            if useful and (best is None or (hi, hi_c) > best):
                best = (hi, hi_c)
        if best is None or (best[0] == r and best[1] == r_in):
            return False
        r, r_in = best
    return True


@dataclass(frozen=True)
class Homotopy:
    """F(t, s) = G(t, gamma(s)) for the contraction G of the clipped carrier."""

    q: object
    p: object
    gamma: PLPath
    contraction: Contraction
    box: tuple
    cells: tuple

    def __call__(self, t, s):
        t, s = scalar(t), scalar(s)
        if not 0 <= t <= self.q:
            raise RetractionError("t outside [0, q]")
        return self.contraction._eval(t, self.gamma(self.gamma.start + s))

    def in_carrier(self, x) -> bool:
        return any(E.contains(x) for E in self.cells)


def loop_homotopy(D_list, C, c, gamma, Y=None) -> Homotopy:
    """Null-homotopy of a PL loop through the contraction of a box-clipped star."""
    if not isinstance(gamma, PLPath):
        gamma = PLPath.from_vertices(gamma)
    if not gamma.is_loop():
        raise HypothesisError("the path is not a loop")
    cells = list(dict.fromkeys(_cells_of(D_list)))
    verts = gamma.vertices()
    for v in verts:
        if Y is not None and not Y.contains(v):
            raise HypothesisError(f"loop vertex {_fmt(v)} lies outside Y")
        if not any(E.contains(v) for E in cells):
            raise HypothesisError(f"loop vertex {_fmt(v)} lies outside the carrier")
    for a, b in gamma.segments():
        if not segment_inside(a, b, cells):
            raise HypothesisError(f"loop segment {_fmt(a)}-{_fmt(b)} leaves the carrier")
    if C not in cells:
        raise HypothesisError("C is not one of the cells")
    pts = list(verts)
    for E in cells:
        ok, w = is_feasible(LinearSystem(C.dim, C.constraints() + E.constraints(closed=True)))
        if not ok:
            raise HypothesisError(f"the closure of {E!r} misses C")
        pts.append(tuple(w))
    n = C.dim
    box = [(min(p[i] for p in pts) - 1, max(p[i] for p in pts) + 1) for i in range(n)]
    B, clipped = clip_map(Decomposition(n, cells), box)
    new_cells = tuple(clipped[E] for E in cells if E in clipped)
    G = contract(list(new_cells), clipped[C], c)
    return Homotopy(G.q, gamma.length, gamma, G, B, new_cells)


def verify_homotopy(F: Homotopy, grid: int = 20) -> Report:
    report = Report()
    c_const = report.add("homotopy: F(0, .) is constant")
    c_end = report.add("homotopy: F(q, .) equals the loop")
    c_loop = report.add("homotopy: F(t, 0) = F(t, p)")
    c_img = report.add("homotopy: F(t, s) lies in the clipped carrier")
    ts = [F.q * Q(i, grid - 1) for i in range(grid)]
    ss = [F.p * Q(j, grid - 1) for j in range(grid)]
    first = None
    for t in ts:
        row = [F(t, s) for s in ss]
        for s, v in zip(ss, row):
            c_img.checked += 1
            if not F.in_carrier(v):
                c_img.violations.append((t, s, v))
        c_loop.checked += 1
        if row[0] != row[-1]:
            c_loop.violations.append((t, row[0], row[-1]))
        if t == 0:
            for s, v in zip(ss, row):
                c_const.checked += 1
                if first is None:
                    first = v
                elif v != first:
                    c_const.violations.append((s, v, first))
        if t == F.q:
            for s, v in zip(ss, row):
                c_end.checked += 1
                g = F.gamma(F.gamma.start + s)
                if v != g:
                    c_end.violations.append((s, v, g))
    return report


# ------------------------------------------------------------------ verification

def _times(rng, q, alpha=None):
    ts = [Q(0), q, _rand_between(rng, Q(0), q)]
    if alpha is not None:
        ts += [alpha, _rand_between(rng, alpha, q)]
    else:
        ts += [_rand_between(rng, Q(0), q), _rand_between(rng, Q(0), q)]
    return ts


def verify_retraction(H: Retraction, samples: int = 500, seed=0, extension=None) -> Report:
    """Exact pointwise checks of the retraction axioms on at least ``samples`` (t, x) pairs.

    ``extension`` may be a pair (H_small, H_big) whose domains are nested; then
    H_big(t, x) = H_small(t, x) is checked for sampled x in the smaller domain
    and t <= q of the smaller one.
    """
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    report = Report()
    cod = report.add("codomain: H(t, x) in X")
    ax1 = report.add("axiom 1: H(0, x) in A")
    ax2 = report.add("axiom 2: H(t, a) = a for a in A")
    ax3 = report.add("axiom 3: H(q, x) = x")
    q = H.q
    nx = max(1, -(-samples // 5))
    xs = H.domain_samples(nx, rng)
    if H.nice:
        nice = report.add("nice: H(t, x) = x for t >= fixing point")
        minimal = report.add("fixing point is minimal: H(alpha - eps, x) != x")
        oracle = report.add("fixing point: closed form equals breakpoint scan")
        traj = report.add("structural evaluator equals PL trajectory")
        mono = report.add("last coordinate non-decreasing after the base fixing point")
    evaluation = report.add("evaluation: H defined on [0, q] x X")

    def check_point(x):
        alpha = H.fixing_point(x) if H.nice else None
        for t in _times(rng, q, alpha):
            v = H(t, x)
            cod.checked += 1
            if not H.in_domain(v):
                cod.violations.append((t, x, v))
            if t == 0:
                ax1.checked += 1
                if not H.in_target(v):
                    ax1.violations.append((t, x, v))
            if t == q:
                ax3.checked += 1
                if v != x:
                    ax3.violations.append((t, x, v))
            if H.nice and t >= alpha:
                nice.checked += 1
                if v != x:
                    nice.violations.append((t, x, v, alpha))
        if not H.nice:
            return
        oracle.checked += 1
        try:
            path = H.trajectory(x)
        except ValueError as e:
            oracle.violations.append((x, alpha, str(e)))
            return
        scan = path.first_time_at(x)
        if scan != alpha:
            oracle.violations.append((x, alpha, scan))
        for t in path.knots() + [_rand_between(rng, Q(0), q)]:
            traj.checked += 1
            v = H(t, x)
            if v != path(t):
                traj.violations.append((t, x, v, path(t)))
        if alpha > 0:
            prev = max([k for k in path.knots() if k < alpha], default=Q(0))
            eps = (alpha - prev) / 2
            minimal.checked += 1
            v = H(alpha - eps, x)
            if v == x:
                minimal.violations.append((alpha - eps, x, v, alpha))
        mono.checked += 1
        if not H.last_coordinate_monotone(x):
            mono.violations.append((x,))

    def guarded(fn, *args):
        evaluation.checked += 1
        try:
            fn(*args)
        except ValueError as e:
            evaluation.violations.append((args, repr(e)))

    for x in xs:
        guarded(check_point, x)

    def check_fixed(a):
        for t in _times(rng, q):
            ax2.checked += 1
            v = H(t, a)
            if v != a:
                ax2.violations.append((t, a, v))

    for a in H.target_samples(max(1, samples // 10), rng):
        guarded(check_fixed, a)
    if hasattr(H, "inner_contains"):
        guarded(_check_inside, H, report, max(1, samples // 5), rng)
    if isinstance(H, GluedRetraction):
        guarded(_check_coherence, H, report, rng)
    if extension is not None:
        guarded(_check_extension, extension, report, max(1, samples // 5), rng)
    return report


def _check_inside(H, report, k, rng):
    inside = report.add("interior: x in C ∪ D stays in C ∪ D")
    onto = report.add("interior: H(0, x) in the open half-cell C'")
    for x in H.inner_samples(k, rng):
        for t in _times(rng, H.q, H._alpha(x)):
            v = H._eval(t, x)
            inside.checked += 1
            if not H.inner_contains(v):
                inside.violations.append((t, x, v))
            if t == 0:
                onto.checked += 1
                if not H.inner_target(v):
                    onto.violations.append((t, x, v))


def _check_coherence(H: GluedRetraction, report, rng, per_pair: int = 3):
    ext = report.add("extension coherence: pieces agree on D_i inside cl(D_j)")
    for i, j in H.nested_pairs():
        Pi, Pj = H.pieces[i], H.pieces[j]
        for x in sample_points(H.cells[i], per_pair, rng):
            for t in (Q(0), _rand_between(rng, Q(0), Pi.q), Pi.q):
                ext.checked += 1
                a, b = Pi._eval(t, x), Pj._eval(t, x)
                if a != b:
                    ext.violations.append((i, j, t, x, a, b))
            if Pj.q > Pi.q:
                t = _rand_between(rng, Pi.q, Pj.q)
                ext.checked += 1
                b = Pj._eval(t, x)
                if b != x:
                    ext.violations.append((i, j, t, x, x, b))


def _check_extension(pair, report, k, rng):
    small, big = pair
    ext = report.add("extension: H'(t, x) = H(t, x) on the smaller domain")
    for x in small.domain_samples(k, rng):
        for t in _times(rng, small.q):
            ext.checked += 1
            a, b = small(t, x), big(t, x)
            if a != b:
                ext.violations.append((t, x, a, b))


# ------------------------------------------------------------------ traces

def trace(H: Retraction, points: int = 4, steps: int = 16, seed=0, xs=None) -> dict:
    """JSON-ready samples of t -> H(t, x) for a few x."""
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    xs = [point(x) for x in xs] if xs is not None else H.domain_samples(points, rng)
    out = []
    for x in xs:
        ts = {H.q * Q(i, steps) for i in range(steps + 1)}
        if H.nice:
            ts.add(H.fixing_point(x))
        for t in sorted(ts):
            out.append({
                "t": format_scalar(t),
                "x": [format_scalar(v) for v in x],
                "Hx": [format_scalar(v) for v in H(t, x)],
            })
    return {"q": format_scalar(H.q), "samples": out}


def homotopy_trace(F: Homotopy, grid: int = 20) -> dict:
    out = []
    for i in range(grid):
        t = F.q * Q(i, grid - 1)
        for j in range(grid):
            s = F.p * Q(j, grid - 1)
            out.append({"t": format_scalar(t), "s": format_scalar(s), "F": [format_scalar(v) for v in F(t, s)]})
    return {
        "q": format_scalar(F.q),
        "p": format_scalar(F.p),
        "loop": [[format_scalar(v) for v in p] for p in F.gamma.vertices()],
        "grid": out,
    }
