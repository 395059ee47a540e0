import random

import pytest
from hypothesis import given, settings, strategies as st

from instances import box_set, rng_for, special, star_instance
from mutants import MUTANTS
from semistar import (
    Band,
    Graph,
    Interval,
    Point,
    Q,
    SemiLinearSet,
    c_retraction,
    canonical_retraction,
    common_corner,
    contract,
    corner_transform,
    glue_star_retraction,
    half_cell_contraction,
    loop_homotopy,
    star,
    verify_homotopy,
    verify_retraction,
)
from semistar.decomposition import And, Atom
from semistar.retraction import HypothesisError, RetractionError, UnboundedCarrierError
from semistar.scalar import POS_INF, AffineMap

ZERO1 = AffineMap((Q(0),), Q(0))
G = AffineMap((Q(1, 2),), Q(2))


def worked_band():
    return Band(Interval(0, 4), ZERO1, G)


def f(x):
    return x / 4 + 1


def case_ii(t, x, y):
    if t < x:
        return (t, min(y, t, f(t)))
    return (x, min(y, t, t - x + f(x)))


def case_iii(t, x, y):
    if t < x:
        return (t, min(y, f(t)))
    return (x, min(y, t - x + f(x)))


fracs = st.fractions(min_value=0, max_value=1, max_denominator=24)


@settings(max_examples=80, deadline=None)
@given(fracs, fracs, fracs)
def test_worked_example_matches_hand_formulas(a, b, c):
    H2 = canonical_retraction(worked_band(), (0, 0))
    H3 = canonical_retraction(worked_band(), (0, 1))
    assert H2.q == H3.q == 8
    x = 4 * Q(a)
    y = (x / 2 + 2) * Q(b)
    t = 8 * Q(c)
    assert H2(t, (x, y)) == case_ii(t, x, y)
    assert H3(t, (x, y)) == case_iii(t, x, y)


def test_worked_example_spot_values():
    H3 = canonical_retraction(worked_band(), (0, 1))
    assert H3(1, (2, 1)) == (1, 1)
    assert H3(3, (2, 1)) == (2, 1)
    assert H3.fixing_point((2, 1)) == 2
    assert H3.scan_fixing_point((2, 1)) == 2


def test_line_cases():
    H = canonical_retraction(Interval(0, 4), (0,))
    assert H.q == 4 and H(1, (3,)) == (1,) and H.fixing_point((3,)) == 3
    top = canonical_retraction(Interval(0, 4), (1,))
    assert top(0, (3,)) == (2,) and top(1, (3,)) == (3,) and top.fixing_point((3,)) == 1
    assert top(0, (1,)) == (1,)
    pt = canonical_retraction(Point(0), (0,))
    assert pt.q == 0 and pt(0, (0,)) == (0,)


def test_canonical_input_is_required():
    with pytest.raises(RetractionError):
        canonical_retraction(Interval(1, 4), (0,))
    with pytest.raises(RetractionError):
        canonical_retraction(worked_band(), (0, 2))
    with pytest.raises(RetractionError):
        canonical_retraction(worked_band(), (0, 0))(9, (1, 1))


@pytest.mark.parametrize("sigma", [(0, 0), (0, 1), (1, 0), (1, 1)])
def test_worked_band_all_faces_verify(sigma):
    rep = verify_retraction(canonical_retraction(worked_band(), sigma), samples=300, seed=1)
    assert rep.ok, rep.lines()


def test_three_dimensional_canonical_cell():
    D = Band(Band(Interval(0, 3), ZERO1, AffineMap((Q(-1, 3),), Q(2))), AffineMap((Q(0), Q(0)), Q(0)), AffineMap((Q(1), Q(1)), Q(1)))
    for sigma in ((0, 0, 0), (1, 0, 1), (0, 1, 0), (1, 1, 1)):
        rep = verify_retraction(canonical_retraction(D, sigma), samples=200, seed=2)
        assert rep.ok, rep.lines()


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([(0, 0), (0, 1), (1, 0), (1, 1)]), fracs, fracs)
def test_fixing_point_matches_scan(sigma, a, b):
    H = canonical_retraction(worked_band(), sigma)
    x = 4 * Q(a)
    pt = (x, (x / 2 + 2) * Q(b))
    alpha = H.fixing_point(pt)
    assert alpha == H.scan_fixing_point(pt)
    assert H(alpha, pt) == pt
    if alpha > 0:
        assert H(alpha * Q(99, 100), pt) != pt


def test_corner_transform_of_interval():
    T = corner_transform(Interval(1, 4), (1,))
    assert T((Q(3),)) == (Q(1),)
    assert T.inverse((Q(1),)) == (Q(3),)
    assert T.image == Interval(0, 3)
    with pytest.raises(UnboundedCarrierError):
        corner_transform(Interval(0, POS_INF), (0,))


def test_corner_transform_is_triangular_and_canonical():
    D = Band(Interval(-2, 1), AffineMap((Q(1),), Q(0)), AffineMap((Q(-1),), Q(4)))
    for label in ((0, 0), (0, 1), (1, 0), (1, 1)):
        T = corner_transform(D, label)
        assert T.image.is_canonical()
        for p in random_points(D, 10):
            assert T.inverse(T(p)) == p
            assert T.image.contains(T(p))


def random_points(cell, k, seed=0):
    from semistar.oracle import sample_points

    return sample_points(cell, k, random.Random(seed))


def test_c_retraction_of_interval():
    H = c_retraction(Interval(1, 4), Point(1), (0,))
    assert H.q == 3
    assert H(0, (3,)) == (1,) and H(1, (3,)) == (2,) and H(3, (3,)) == (3,)
    assert verify_retraction(H, samples=100).ok


def test_common_corner_of_edge_and_band():
    C = Graph(Interval(0, 4), ZERO1)
    D = worked_band()
    shared = common_corner(C, D)
    assert {cc.point for cc in shared} == {(0, 0), (4, 0)}


def test_half_cell_contraction():
    K = half_cell_contraction(worked_band())
    assert K.endpoint == (2, Q(3, 2)) and K.q == 4
    assert half_cell_contraction(Interval(0, 4)).q == 2
    assert verify_retraction(K, samples=200).ok


def crossing_lines():
    """y >= -1 and y <= x + 1 inside a box: the two lines cross at (-2, -1)."""
    Y = SemiLinearSet(2, And((
        Atom(AffineMap((Q(0), Q(1)), Q(1)), ">="),
        Atom(AffineMap((Q(1), Q(-1)), Q(1)), ">="),
    )))
    D = special([Y, box_set(2)], 2)
    C = next(c for c in D.cells if c.index == (0, 0) and c.center() == (Q(-2), Q(-1)))
    return D, C


def test_pinched_band_is_reported():
    # at a crossing point a band pinches; both of its edges meet the crossing
    # and no single corner transform of the band agrees with both edges
    D, C = crossing_lines()
    Hg = glue_star_retraction(star(D, C), C, (0, 0))
    conflicts = Hg.transform_conflicts()
    assert conflicts
    rep = verify_retraction(Hg, samples=300, seed=0)
    bad = {c.name for c in rep.checks if not c.ok}
    assert bad == {"extension coherence: pieces agree on D_i inside cl(D_j)"}
    coh = next(c for c in rep.checks if not c.ok)
    assert {(v[0], v[1]) for v in coh.violations} <= set(conflicts)


@pytest.mark.parametrize("seed", range(6))
def test_random_star_retractions(seed):
    rng = rng_for(100 + seed)
    _, C, cells, label = star_instance(rng, n=2)
    Hg = glue_star_retraction(cells, C, label)
    rep = verify_retraction(Hg, samples=200, seed=seed)
    if Hg.transform_conflicts():
        pytest.skip("pinched band: gluing is not coherent")
    assert rep.ok, rep.lines()


def test_contract_and_loop():
    _, C, cells, label = star_instance(rng_for(7), n=2)
    K = contract(cells, C, label)
    hits = {K(0, x) for x in K.domain_samples(50, random.Random(0))}
    assert hits == {K.endpoint}
    F = loop_homotopy(cells, C, label, [C.center(), C.center()])
    assert verify_homotopy(F, grid=5).ok


def test_unbounded_and_bad_hypotheses():
    with pytest.raises(UnboundedCarrierError):
        contract([Point(0), Interval(0, POS_INF)], Point(0), (0,))
    with pytest.raises(HypothesisError):
        glue_star_retraction([Point(0), Interval(1, 2)], Point(0), (0,))
    D = [Point(0), Interval(0, 2)]
    with pytest.raises(HypothesisError):
        loop_homotopy(D, Point(0), (0,), [(0,), (1,)])
    with pytest.raises(HypothesisError):
        loop_homotopy(D, Point(0), (0,), [(0,), (3,), (0,)])


@pytest.mark.parametrize("mutant", MUTANTS, ids=lambda m: m.__name__)
def test_mutants_are_caught(mutant):
    rep = verify_retraction(mutant(worked_band(), (0, 0)), samples=300, seed=0)
    assert not rep.ok
    assert all(c.violations for c in rep.checks if not c.ok)
