import math
from fractions import Fraction

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from coarselab.bigons import verify_bigon
from coarselab.divergence import (DivergenceParams, construct_bigon_from_divergence, divergence_function,
                                  divergence_pair, divergence_rel, linear_fit_through_origin, prop_constant,
                                  separated_rays)
from coarselab.errors import HorizonError, PreconditionError
from coarselab.graph_core import UNBOUNDED_IN_BALL


def bfs_oracle(g, a, b, c, r):
    """Shortest a-b path avoiding the closed r-ball at c, via networkx."""
    dc = g.distances_from(c)
    G = nx.Graph((u, v) for u in range(len(g)) for v in g.adj[u] if dc[u] > r and dc[v] > r)
    try:
        return nx.shortest_path_length(G, a, b)
    except (nx.NetworkXNoPath, nx.NodeNotFound):
        return None


def test_forbidden_radius():
    p = DivergenceParams()
    assert [p.radius(d) for d in range(0, 12)] == [0, 0, 0, 0, 0, 1, 1, 2, 2, 3, 3, 4]
    assert DivergenceParams(Fraction(1, 3), 2).radius(9) == 1
    with pytest.raises(PreconditionError):
        DivergenceParams(Fraction(3, 4))
    with pytest.raises(PreconditionError):
        DivergenceParams(Fraction(1, 2), 1)


@pytest.mark.parametrize("n", [4, 6, 8, 10, 12])
def test_grid_closed_form(balls, n):
    g = balls("abelian(2)", 30)
    a, b, c = g.vertex((-1,) * n), g.vertex((1,) * n), g.vertex(())
    rec = divergence_rel(g, a, b, c)
    r = max(0, n // 2 - 2)
    assert rec.avoided_radius == r
    assert rec.length == 2 * n + 2 * r + 2 == bfs_oracle(g, a, b, c, r)
    assert rec.exact


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_rel_matches_oracle_and_is_monotone_in_delta(balls, data):
    g = balls("lamplighter", 8)
    inner = [v for v in range(len(g)) if g.depth[v] <= 4]
    a, b, c = (data.draw(st.sampled_from(inner)) for _ in range(3))
    if len({a, b, c}) < 3:
        return
    lo, hi = DivergenceParams(Fraction(1, 4)), DivergenceParams(Fraction(1, 2))
    r1, r2 = divergence_rel(g, a, b, c, lo), divergence_rel(g, a, b, c, hi)
    for rec in (r1, r2):
        want = bfs_oracle(g, a, b, c, rec.avoided_radius)
        assert (rec.length is UNBOUNDED_IN_BALL) == (want is None)
        if want is not None:
            assert rec.length == want
    # a larger forbidden ball can only lengthen the detour
    if not r1.unbounded and not r2.unbounded:
        assert r1.length <= r2.length


def test_rel_requires_distinct_centre(balls):
    g = balls("abelian(2)", 6)
    with pytest.raises(PreconditionError):
        divergence_rel(g, 0, 1, 0)


def test_pair_fast_equals_exact(balls):
    g = balls("abelian(2)", 14)
    for b in [(1,) * 6, (1, 1, 1, 2, 2, 2), (1, 2) * 4]:
        fast = divergence_pair(g, (), b, candidate_mode="fast")
        exact = divergence_pair(g, (), b, candidate_mode="exact")
        assert fast.length == exact.length


def test_free_group_is_unbounded(balls):
    g = balls("free(2)", 8)
    rep = divergence_function(g, 6)
    assert rep.values[1] == 1
    assert all(v is UNBOUNDED_IN_BALL for v in rep.values[2:])
    assert rep.D is None and rep.unbounded_ns() == [2, 3, 4, 5, 6]


def test_grid_divergence_is_linear(balls):
    g = balls("abelian(2)", 20)
    rep = divergence_function(g, 10)
    assert rep.values[1:] == [1, 4, 5, 6, 7, 8, 9, 10, 11, 14]
    assert rep.exact and not rep.unbounded_ns()
    assert rep.relative_residual < 0.15
    assert rep.to_csv().splitlines()[0] == "n,DivX_n,status"


def test_sampled_mode_is_a_lower_bound(balls):
    g = balls("abelian(2)", 14)
    full = divergence_function(g, 6)
    samp = divergence_function(g, 6, mode="sampled", samples=3, seed=1)
    assert all(s <= f for s, f in zip(samp.values[1:], full.values[1:]))
    assert samp.seed == 1 and full.seed is None


def test_linear_fit():
    D, rel = linear_fit_through_origin([1, 2, 3], [2, 4, 6])
    assert math.isclose(D, 2) and rel < 1e-12
    assert prop_constant(1.3227) == 27
    assert prop_constant(0.01) == 1


def test_construct_short_branch(balls):
    g = balls("abelian(2)", 12)
    w = construct_bigon_from_divergence(g, (1, 1, 1), 2, 1)
    assert w.notes["branch"] == "short" and verify_bigon(g, w)
    assert w.params.L == 40 and w.params.C == 2


def test_construct_ray_branch():
    from coarselab.graph_core import build_ball
    s, d = 1, 5
    g = build_ball("abelian(2)", 11 * d + 2)
    D = prop_constant(1.33)
    w = construct_bigon_from_divergence(g, (1,) * d, D, s)
    a = w.notes
    assert a["branch"] == "rays" and verify_bigon(g, w)
    assert a["total"] <= 10 * d + 9 * d + a["around"] <= 20 * D * d
    assert d + s <= a["forbidden_radius"]


def test_construct_needs_room(balls):
    g = balls("abelian(2)", 20)
    with pytest.raises(HorizonError):
        construct_bigon_from_divergence(g, (1,) * 6, 27, 1)


def test_separated_rays_leave_the_geodesic(balls):
    g = balls("abelian(2)", 20)
    geo = g.geodesic(0, g.vertex((1,) * 4))
    rays = separated_rays(g, 0, geo, 1, 10)
    assert rays
    for ray in rays:
        assert len(ray) == 11 and g.depth[ray[-1]] == 10


def test_adjacent_pair_has_divergence_one(balls):
    g = balls("abelian(2)", 8)
    assert divergence_pair(g, (), (1,), candidate_mode="exact").length == 1
