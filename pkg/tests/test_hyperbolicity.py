import itertools
from fractions import Fraction

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from coarselab.errors import PreconditionError, ResourceLimitError
from coarselab.graph_core import UNBOUNDED_IN_BALL, graph_from_edges
from coarselab.hyperbolicity import (long_side_check, detour_length, detour_statistics, four_point_delta,
                                     place_balls, projection_defect_check, thin_triangle_delta)
from coarselab.implicit import WordBall
from coarselab.smallcanc import generate_rw_family, presentation_ball, relator_to_bigon


def cycle(n):
    return graph_from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def four_point_bruteforce(g):
    D = [g.distances_from(v) for v in range(len(g))]
    best = 0
    for x, y, z, w in itertools.product(range(len(g)), repeat=4):
        S = sorted((D[x][y] + D[z][w], D[x][z] + D[y][w], D[x][w] + D[y][z]))
        best = max(best, S[2] - S[1])
    return Fraction(best, 2)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_cycles(k):
    g = cycle(4 * k)
    assert thin_triangle_delta(g).delta == k
    assert four_point_delta(g).delta == k == four_point_bruteforce(g)


def test_trees_are_zero_hyperbolic(balls):
    g = balls("free(2)", 3)
    rep = thin_triangle_delta(g)
    assert rep.delta == 0 and not rep.lower_bound
    assert four_point_delta(g, vertices=range(0, len(g), 3)).delta == 0


@pytest.mark.parametrize("spec,radius", [("abelian(2)", 2), ("lamplighter", 2), ("bs(1,2)", 2)])
def test_four_point_matches_bruteforce(balls, spec, radius):
    g = balls(spec, radius)
    assert four_point_delta(g).delta == four_point_bruteforce(g)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(10, 200))
def test_sampled_delta_is_a_lower_bound(balls, seed, samples):
    g = balls("abelian(2)", 3)
    full = thin_triangle_delta(g)
    assert thin_triangle_delta(g, "sampled", samples, seed).delta <= full.delta
    assert four_point_delta(g, "sampled", samples, seed).delta <= four_point_delta(g).delta


def test_grid_delta_grows_with_radius(balls):
    vals = [four_point_delta(balls("abelian(2)", r)).delta for r in (2, 3, 4)]
    assert vals == sorted(vals) and vals[-1] > vals[0]


def test_implicit_needs_sampling():
    W = WordBall("free(2)", 10)
    with pytest.raises(ResourceLimitError):
        thin_triangle_delta(W)
    assert thin_triangle_delta(W, "sampled", 200).delta == 0


def test_projection_check(balls):
    g = balls("abelian(2)", 6)
    delta = max(thin_triangle_delta(g, "sampled", 2000).delta, Fraction(1))
    rep = projection_defect_check(g, delta, 500)
    assert rep.ok and rep.max_defect <= 8 * delta
    with pytest.raises(PreconditionError):
        projection_defect_check(g, Fraction(1, 2))
    W = WordBall("free(2)", 12)
    rep = projection_defect_check(W, 1, 300)
    assert rep.ok and rep.max_defect <= 0


def test_place_balls():
    assert place_balls(20, 2, 3) == [3, 8, 13]
    with pytest.raises(PreconditionError):
        place_balls(10, 2, 3)


def test_detours_against_oracle(balls):
    g = balls("abelian(2)", 12)
    x, y = g.vertex((-1,) * 5), g.vertex((1,) * 5)
    for s in (1, 2, 3):
        geo = g.geodesic(x, y)
        c = geo[place_balls(len(geo) - 1, s, 1)[0]]
        dc = g.distances_from(c)
        G = nx.Graph((u, v) for u in range(len(g)) for v in g.adj[u] if dc[u] > s and dc[v] > s)
        assert detour_length(g, x, y, s) == nx.shortest_path_length(G, x, y)
    assert [d for _, d in detour_statistics(balls("free(2)", 4), (1, 1), (2, 2), [1])] == [UNBOUNDED_IN_BALL]


def test_long_side_on_relator_bigons():
    p = generate_rw_family([(1, 2)], max_exponent=20)
    g = presentation_ball(p, 140)
    w = relator_to_bigon(g, p.relators[0], 10)
    assert long_side_check(g, [w], Fraction(1, 10)) == (1, 0)
    assert long_side_check(g, [w], Fraction(1)) == (0, 0)       # s < 100 delta: not applicable
