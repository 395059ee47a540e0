import random

import pytest
from hypothesis import given, strategies as st

from semistar.cells import (
    Band,
    CellError,
    Graph,
    Interval,
    Point,
    cell_from_json,
    corner,
    corners,
    faces,
    half_cell,
    is_face_of,
    same_set,
    sigma_face,
)
from semistar.oracle import sample_points
from semistar.scalar import NEG_INF, POS_INF, AffineMap, Q

ZERO1 = AffineMap((Q(0),), Q(0))


def worked_band():
    # (0, g) over (0, 4) with g = x/2 + 2
    return Band(Interval(0, 4), ZERO1, AffineMap((Q(1, 2),), Q(2)))


def test_index_dim_and_membership():
    D = worked_band()
    assert D.dim == 2 and D.index == (1, 1)
    assert D.contains((Q(2), Q(1)))
    assert not D.contains((Q(2), Q(3)))
    assert D.closure_contains((Q(2), Q(3)))
    assert not D.contains((Q(0), Q(1)))
    assert D.closure_contains((Q(0), Q(1)))
    with pytest.raises(CellError):
        D.contains((Q(1),))


def test_canonical_and_bounded():
    assert worked_band().is_canonical()
    assert worked_band().is_bounded()
    assert not Interval(0, POS_INF).is_bounded()
    assert not Band(Interval(1, 2), ZERO1, POS_INF).is_canonical()
    assert not Graph(Interval(0, 1), AffineMap((Q(1),), Q(0))).is_canonical()


def test_faces_of_worked_band():
    D = worked_band()
    got = dict(faces(D))
    assert set(got) == {(0, 0), (0, 1), (1, 0), (1, 1)}
    assert got[(0, 0)] == Graph(Point(0), AffineMap((Q(0),), Q(0)))
    assert same_set(got[(0, 1)], Band(Point(0), ZERO1, AffineMap((Q(1, 2),), Q(2))))
    assert same_set(got[(1, 1)], D)
    for sigma, F in got.items():
        assert is_face_of(F, D)
    with pytest.raises(CellError):
        sigma_face(D, (0, 2))


def test_half_cell_of_face():
    # C = {0} x (0, g(0)) has half-cell {0} x (0, 1]
    F = sigma_face(worked_band(), (0, 1))
    H = half_cell(F)
    assert H.contains((Q(0), Q(1)))
    assert H.contains((Q(0), Q(1, 3)))
    assert not H.contains((Q(0), Q(0)))
    assert not H.contains((Q(0), Q(3, 2)))
    assert H.top() == (Q(0), Q(1))


@given(st.fractions(min_value=0, max_value=4, max_denominator=16), st.fractions(min_value=0, max_value=1, max_denominator=16))
def test_half_cell_is_lower_half(x, u):
    D = worked_band()
    H = half_cell(D)
    # every band stage halves, the base interval (0, 4) included
    x, u = Q(x), Q(u)
    g = x / 2 + 2
    y = g * u
    assert H.contains((x, y)) == (0 < x <= 2 and 0 < y <= g / 2)


def test_corners():
    D = worked_band()
    pts = dict(corners(D))
    assert pts == {(0, 0): (0, 0), (0, 1): (0, 2), (1, 0): (4, 0), (1, 1): (4, 4)}
    with pytest.raises(CellError):
        corner(Point(1), (1,))
    with pytest.raises(CellError):
        corners(Interval(NEG_INF, 0))


def test_json_round_trip_and_validation():
    D = worked_band()
    assert cell_from_json(D.to_json(), validate=True) == D
    bad = Band(Interval(0, 4), AffineMap((Q(1),), Q(0)), AffineMap((Q(0),), Q(2))).to_json()
    with pytest.raises(CellError):
        cell_from_json(bad, validate=True)
    with pytest.raises(CellError):
        cell_from_json({"type": "blob"})
    with pytest.raises(CellError):
        Interval(2, 1)


def test_samples_respect_strict_bounds():
    rng = random.Random(0)
    D = Band(Graph(Interval(-1, 1), AffineMap((Q(1),), Q(0))), AffineMap((Q(0), Q(0)), Q(0)), AffineMap((Q(1), Q(0)), Q(2)))
    for p in sample_points(D, 50, rng):
        assert -1 < p[0] < 1 and p[1] == p[0] and 0 < p[2] < p[0] + 2
