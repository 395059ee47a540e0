"""Feasibility, extrema and comparisons against independent oracles."""

import random

from hypothesis import given, settings, strategies as st

from semistar.cells import Band, Graph, Interval, Point
from semistar.oracle import (
    LinearSystem,
    cell_system,
    compare_on_cell,
    is_feasible,
    sample_closure_points,
    sample_points,
    sup_over_closure,
)
from semistar.scalar import AffineMap, Q

small = st.integers(min_value=-3, max_value=3)


def _affine(rng, n):
    return AffineMap(tuple(Q(rng.randint(-3, 3)) for _ in range(n)), Q(rng.randint(-4, 4)))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3), st.integers(1, 7))
def test_planted_point_is_feasible(seed, n, k):
    # every constraint holds at a planted point, so the system is feasible
    rng = random.Random(seed)
    x0 = tuple(Q(rng.randint(-6, 6), rng.randint(1, 4)) for _ in range(n))
    sysm = LinearSystem(n)
    for _ in range(k):
        f = _affine(rng, n)
        v = f(x0)
        rel = ">=" if v >= 0 else "<="
        if v != 0 and rng.random() < 0.5:
            rel = rel[0]
        sysm.add(f, rel)
    ok, w = is_feasible(sysm)
    assert ok
    assert all(c.holds(w) for c in sysm.constraints)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3))
def test_contradiction_is_infeasible(seed, n):
    rng = random.Random(seed)
    sysm = LinearSystem(n)
    f = _affine(rng, n)
    while f.is_constant():
        f = _affine(rng, n)
    for _ in range(rng.randint(0, 4)):
        sysm.add(_affine(rng, n), ">=")
    sysm.add(f, ">")
    sysm.add(-f, ">=")
    assert is_feasible(sysm) == (False, None)


def test_strictness_matters():
    x = AffineMap((Q(1),), Q(0))
    assert is_feasible(LinearSystem(1).add(x, ">=").add(-x, ">="))[0]
    assert not is_feasible(LinearSystem(1).add(x, ">").add(-x, ">="))[0]


def _corners(cell):
    pts = [()]
    for s in cell.stages():
        nxt = []
        for p in pts:
            for f in {s.lower, s.upper}:
                nxt.append(p + (f(p),))
        pts = nxt
    return pts


def _triangle():
    return Band(Interval(0, 4), AffineMap((Q(0),), Q(0)), AffineMap((Q(1, 2),), Q(2)))


@given(small, small, small)
def test_sup_is_attained_at_a_corner(a, b, c):
    # the max of an affine map over a closed cylinder polytope sits at a corner
    f = AffineMap((Q(a), Q(b)), Q(c))
    for cell in (_triangle(), Graph(Interval(-1, 3), AffineMap((Q(-2),), Q(1)))):
        assert sup_over_closure(f, cell) == max(f(p) for p in _corners(cell))


@settings(max_examples=40, deadline=None)
@given(small, small, small)
def test_compare_agrees_with_samples(a, b, c):
    V = _triangle()
    f = AffineMap((Q(a), Q(b)), Q(c))
    g = AffineMap((Q(0), Q(0)), Q(0))
    sign = compare_on_cell(f, g, V)
    vals = [f(p) for p in sample_points(V, 40, 1)]
    if sign == ">":
        assert all(v > 0 for v in vals)
    elif sign == "<":
        assert all(v < 0 for v in vals)
    elif sign == "=":
        assert all(v == 0 for v in vals)
    else:
        # mixed: both signs have feasibility witnesses strictly inside
        lo = LinearSystem(2, list(cell_system(V).constraints)).add(f, ">")
        hi = LinearSystem(2, list(cell_system(V).constraints)).add(f, "<")
        assert is_feasible(lo)[0] and is_feasible(hi)[0]


def test_samples_lie_in_cells():
    rng = random.Random(4)
    for cell in (Point(3), Interval(-1, 2), _triangle(), Graph(Point(1), AffineMap((Q(2),), Q(0)))):
        assert all(cell.contains(p) for p in sample_points(cell, 30, rng))
        assert all(cell.closure_contains(p) for p in sample_closure_points(cell, 30, rng))
