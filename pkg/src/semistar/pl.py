"""Exact piecewise-linear functions of one rational parameter.

``PLFunction`` is a scalar function given by knots and values with linear
interpolation in between; ``PLPath`` bundles one per coordinate.  They are
used for loops and, independently of the closed-form recursion, to scan the
affine pieces of ``t -> H(t, x)``.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

from .scalar import Q, scalar


@dataclass(frozen=True)
class PLFunction:
    ts: tuple
    vs: tuple

    def __post_init__(self):
        if len(self.ts) != len(self.vs) or not self.ts:
            raise ValueError("knots and values must be non-empty and of equal length")
        if any(a >= b for a, b in zip(self.ts, self.ts[1:])):
            raise ValueError("knots must be strictly increasing")

    @classmethod
    def constant(cls, c, t0, t1) -> PLFunction:
        c, t0, t1 = scalar(c), scalar(t0), scalar(t1)
        return cls((t0,), (c,)) if t0 == t1 else cls((t0, t1), (c, c))

    @classmethod
    def identity(cls, t0, t1) -> PLFunction:
        t0, t1 = scalar(t0), scalar(t1)
        return cls((t0,), (t0,)) if t0 == t1 else cls((t0, t1), (t0, t1))

    @property
    def start(self):
        return self.ts[0]

    @property
    def end(self):
        return self.ts[-1]

    def __call__(self, t):
        if t < self.ts[0] or t > self.ts[-1]:
            raise ValueError(f"t={t} outside [{self.ts[0]}, {self.ts[-1]}]")
        i = bisect_right(self.ts, t) - 1
        if i >= len(self.ts) - 1:
            return self.vs[-1]
        t0, t1 = self.ts[i], self.ts[i + 1]
        v0, v1 = self.vs[i], self.vs[i + 1]
        if t == t0:
            return v0
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0)

    def _on(self, knots):
        return PLFunction(tuple(knots), tuple(self(t) for t in knots))

    def restrict(self, a, b) -> PLFunction:
        knots = [a] + [t for t in self.ts if a < t < b] + ([b] if b != a else [])
        return self._on(knots)

    def extend_to(self, t1) -> PLFunction:
        """Continue constantly up to t1."""
        if t1 <= self.end:
            return self
        return PLFunction(self.ts + (t1,), self.vs + (self.vs[-1],))

    def shift(self, dt) -> PLFunction:
        return PLFunction(tuple(t + dt for t in self.ts), self.vs)

    def simplify(self) -> PLFunction:
        """Drop knots where the slope does not change."""
        if len(self.ts) <= 2:
            return self
        ts, vs = [self.ts[0]], [self.vs[0]]
        for i in range(1, len(self.ts) - 1):
            s0 = (self.vs[i] - vs[-1]) / (self.ts[i] - ts[-1])
            s1 = (self.vs[i + 1] - self.vs[i]) / (self.ts[i + 1] - self.ts[i])
            if s0 != s1:
                ts.append(self.ts[i])
                vs.append(self.vs[i])
        ts.append(self.ts[-1])
        vs.append(self.vs[-1])
        return PLFunction(tuple(ts), tuple(vs))


def _common_knots(funcs):
    t0 = funcs[0].start
    t1 = funcs[0].end
    for f in funcs:
        if f.start != t0 or f.end != t1:
            raise ValueError("PL functions on different parameter intervals")
    return sorted({t for f in funcs for t in f.ts})


def combine(funcs: Sequence[PLFunction], coeffs: Sequence, const=0, span=None) -> PLFunction:
    """sum(coeffs[i] * funcs[i]) + const."""
    const = scalar(const)
    live = [(scalar(c), f) for c, f in zip(coeffs, funcs) if c]
    if not live:
        if span is None:
            span = (funcs[0].start, funcs[0].end) if funcs else (Q(0), Q(0))
        return PLFunction.constant(const, *span)
    knots = _common_knots([f for _, f in live])
    return PLFunction(tuple(knots), tuple(const + sum(c * f(t) for c, f in live) for t in knots))


def _pointwise(a: PLFunction, b: PLFunction, pick) -> PLFunction:
    knots = _common_knots([a, b])
    out = [knots[0]]
    for t0, t1 in zip(knots, knots[1:]):
        d0 = a(t0) - b(t0)
        d1 = a(t1) - b(t1)
        if (d0 < 0 < d1) or (d1 < 0 < d0):
            out.append(t0 + (t1 - t0) * d0 / (d0 - d1))
        out.append(t1)
    return PLFunction(tuple(out), tuple(pick(a(t), b(t)) for t in out))


def pl_min(*fs: PLFunction) -> PLFunction:
    out = fs[0]
    for f in fs[1:]:
        out = _pointwise(out, f, min)
    return out


def pl_max(*fs: PLFunction) -> PLFunction:
    out = fs[0]
    for f in fs[1:]:
        out = _pointwise(out, f, max)
    return out


def splice(left: PLFunction, right: PLFunction) -> PLFunction:
    """Glue left on [a, s] with right on [s, b]; the two must agree at s."""
    if left.end != right.start:
        raise ValueError("splice: intervals do not abut")
    if left.vs[-1] != right.vs[0]:
        raise ValueError(f"splice: discontinuity at t={left.end}")
    return PLFunction(left.ts + right.ts[1:], left.vs + right.vs[1:])


@dataclass(frozen=True)
class PLPath:
    """A PL map from [t0, t1] to R^n, one PLFunction per coordinate."""

    coords: tuple

    @classmethod
    def from_vertices(cls, vertices, times=None) -> PLPath:
        vertices = [tuple(scalar(v) for v in p) for p in vertices]
        if not vertices:
            raise ValueError("a path needs at least one vertex")
        if times is None:
            times = list(range(len(vertices)))
        times = tuple(scalar(t) for t in times)
        n = len(vertices[0])
        if len(times) == 1:
            return cls(tuple(PLFunction(times, (p[i],)) for p in vertices[:1] for i in range(n)))
        return cls(tuple(PLFunction(times, tuple(p[i] for p in vertices)) for i in range(n)))

    @classmethod
    def constant(cls, x, t0, t1) -> PLPath:
        return cls(tuple(PLFunction.constant(v, t0, t1) for v in x))

    @property
    def dim(self):
        return len(self.coords)

    @property
    def start(self):
        return self.coords[0].start

    @property
    def end(self):
        return self.coords[0].end

    @property
    def length(self):
        return self.end - self.start

    def __call__(self, s) -> tuple:
        return tuple(f(s) for f in self.coords)

    def knots(self) -> list:
        return sorted({t for f in self.coords for t in f.ts})

    def vertices(self) -> list:
        return [self(t) for t in self.knots()]

    def is_loop(self) -> bool:
        return self(self.start) == self(self.end)

    def segments(self):
        ks = self.knots()
        for a, b in zip(ks, ks[1:]):
            yield self(a), self(b)

    def restrict(self, a, b) -> PLPath:
        return PLPath(tuple(f.restrict(a, b) for f in self.coords))

    def extend_to(self, t1) -> PLPath:
        return PLPath(tuple(f.extend_to(t1) for f in self.coords))

    def shift(self, dt) -> PLPath:
        return PLPath(tuple(f.shift(dt) for f in self.coords))

    def affine_image(self, maps) -> PLPath:
        """Apply an affine map R^n -> R^k given as k AffineMaps."""
        return PLPath(tuple(combine(self.coords, m.coeffs, m.const, span=(self.start, self.end)) for m in maps))

    def first_time_at(self, x):
        """Least parameter s with path(s) == x, scanning the affine pieces; None if never."""
        ks = self.knots()
        if len(ks) == 1:
            return ks[0] if self(ks[0]) == tuple(x) else None
        for a, b in zip(ks, ks[1:]):
            pa, pb = self(a), self(b)
            lo, hi = a, b
            ok = True
            for va, vb, target in zip(pa, pb, x):
                if va == vb:
                    if va != target:
                        ok = False
                        break
                    continue
                s = a + (b - a) * (target - va) / (vb - va)
                if s < lo or s > hi:
                    ok = False
                    break
                lo = hi = s
            if ok:
                return lo
        return None


def splice_paths(left: PLPath, right: PLPath) -> PLPath:
    return PLPath(tuple(splice(a, b) for a, b in zip(left.coords, right.coords)))
