import random

import pytest
from hypothesis import given, settings, strategies as st

from instances import box_set, rand_set, special
from semistar.cells import Band, Graph, Interval, Point
from semistar.decomposition import (
    Decomposition,
    DecompositionError,
    SemiLinearSet,
    check_frontier,
    clip_to_box,
    decompose,
    meets_closure,
    partition_check,
    refine_special,
    refinement_check,
    star,
    validate_special,
)
from semistar.oracle import sample_points
from semistar.scalar import NEG_INF, POS_INF, AffineMap, Q

X = AffineMap((Q(1),), Q(0))


def fan():
    """R^2 cut by the ray y = x over x > 0: not special at the origin."""
    L, z, R = Interval(NEG_INF, 0), Point(0), Interval(0, POS_INF)
    cells = [
        Band(L, NEG_INF, POS_INF), Band(z, NEG_INF, POS_INF),
        Band(R, NEG_INF, X), Graph(R, X), Band(R, X, POS_INF),
    ]
    return Decomposition(2, cells)


def test_non_special_is_rejected_with_witnesses():
    rep = validate_special(fan())
    assert not rep.ok
    bad = [c for c in rep.checks if not c.ok]
    assert bad and all(c.violations for c in bad)
    fr = check_frontier(fan())
    assert not fr.ok
    assert any(v[0] == "{x1=0, -inf<x2<+inf}" for v in fr.violations())
    # the partition itself is fine
    assert partition_check(fan()).ok


def test_refining_the_fan_fixes_it():
    R = refine_special(fan())
    assert validate_special(R).ok
    assert check_frontier(R).ok
    assert refinement_check(fan(), R, samples=200).ok


def _adapted(D, sets, rng, k=6):
    # each cell is inside or outside each input set
    for c in D.cells:
        for s in sets:
            vals = {s.contains(p) for p in sample_points(c, k, rng)}
            if len(vals) != 1:
                return False
    return True


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5))
def test_random_plane_inputs(seed, k):
    rng = random.Random(seed)
    sets = [rand_set(2, k, rng)]
    D = decompose(sets, 2)
    R = refine_special(D)
    assert validate_special(R).ok
    assert partition_check(R, samples=100, seed=seed).ok
    assert refinement_check(D, R, samples=100, seed=seed).ok
    assert _adapted(R, sets, rng)


def test_line_decomposition():
    s = SemiLinearSet.from_json({"n": 1, "formula": {"atom": {"coeffs": ["1"], "const": "-2"}, "rel": ">="}})
    D = special([s], 1)
    assert [str(c) for c in D.cells] == ["{-inf<x1<2}", "{x1=2}", "{2<x1<+inf}"]
    assert validate_special(D).ok


def test_star_of_a_vertex():
    D = special([box_set(2, 1)], 2)
    C = next(c for c in D.cells if c.index == (0, 0) and c.center() == (Q(1), Q(1)))
    st_ = star(D, C)
    # the corner of the square touches itself, two edges, the inside and five outer cells
    assert C in st_
    assert all(E == C or meets_closure(C, E) for E in st_)
    assert all(not meets_closure(C, E) for E in D.cells if E not in st_)
    assert len(st_) == 9
    with pytest.raises(DecompositionError):
        star(D, Point(7))


def test_clip_to_box_contains_box_and_stays_special():
    D = special([rand_set(2, 3, random.Random(2)), box_set(2)], 2)
    B, clipped = clip_to_box(D, [(-1, 1), (-2, 2)])
    assert B[0][0] <= -1 and B[0][1] >= 1 and B[1][0] <= -2 and B[1][1] >= 2
    assert validate_special(clipped).ok
    assert partition_check(clipped, samples=200, box=[(int(lo) - 1, int(hi) + 1) for lo, hi in B]).ok
    assert all(c.is_bounded() for c in clipped.cells)


def test_json_round_trip():
    D = special([rand_set(2, 2, random.Random(9))], 2)
    E = Decomposition.from_json(D.to_json(), validate=True)
    assert E.cells == D.cells and E.special


def test_dimension_mismatch():
    with pytest.raises(DecompositionError):
        decompose([rand_set(3, 1, random.Random(0))], 2)
