import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coarselab.errors import PreconditionError, ResourceLimitError
from coarselab.graph_core import (DISCONNECTED_IN_BALL, build_ball, distance, geodesic, graph_from_edges,
                             growth_counts, is_path, load_ball_json, load_edge_list, neighborhood,
                             sphere_sizes)

from test_group_models import lamplighter_length

SURFACE = 'presentation("<a, b, c, d | a b a^-1 b^-1 c d c^-1 d^-1>")'


def series_coefficients(num, den, n):
    """Power series coefficients of num/den up to degree n."""
    out = []
    for k in range(n + 1):
        c = num[k] if k < len(num) else 0
        c -= sum(den[j] * out[k - j] for j in range(1, min(k, len(den) - 1) + 1))
        out.append(c // den[0])
    return out


def test_free_and_abelian_sphere_sizes(balls):
    assert sphere_sizes(balls("free(2)", 5)) == [1] + [4 * 3 ** (n - 1) for n in range(1, 6)]
    assert sphere_sizes(balls("abelian(2)", 6)) == [1] + [4 * n for n in range(1, 7)]
    assert sphere_sizes(balls("abelian(3)", 3)) == [1, 6, 18, 38]


def test_surface_group_growth_series():
    # rational growth series of the genus-2 surface group
    expected = series_coefficients([1, 2, 2, 2, 1], [1, -6, -6, -6, 1], 4)
    assert sphere_sizes(build_ball(SURFACE, 4)) == expected == [1, 8, 56, 392, 2736]


def test_lamplighter_sphere_sizes_match_state_enumeration(balls):
    R = 6
    counts = [0] * (R + 1)
    span = range(-R, R + 1)
    for cursor in span:
        for k in range(R + 1):
            for lamps in itertools.combinations(span, k):
                n = lamplighter_length(lamps, cursor)
                if n <= R:
                    counts[n] += 1
    assert sphere_sizes(balls("lamplighter", R)) == counts


def test_depth_is_bfs_distance(balls):
    g = balls("bs(1,2)", 5)
    assert list(g.distances_from(g.basepoint)) == g.depth


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_metric_axioms(balls, data):
    g = balls("lamplighter", 5)
    u, v, w = (data.draw(st.integers(0, len(g) - 1)) for _ in range(3))
    duv = distance(g, u, v)
    assert duv == distance(g, v, u)
    assert (duv == 0) == (u == v)
    assert duv <= distance(g, u, w) + distance(g, w, v)
    p = geodesic(g, u, v)
    assert is_path(g, p) and len(p) - 1 == duv and p[0] == u and p[-1] == v


def test_geodesic_is_canonical(balls):
    g = balls("abelian(2)", 4)
    a, b = g.vertex(()), g.vertex((1, 1, 2, 2))
    assert geodesic(g, a, b) == geodesic(g, a, b)
    assert all(p == q for p, q in zip(geodesic(g, a, b), g.geodesic(a, b)))


def test_disconnected_in_ball():
    with pytest.raises(PreconditionError):
        graph_from_edges(4, [(0, 1), (2, 3)])
    g = graph_from_edges(3, [(0, 1), (1, 2)])
    g.adj[1] = []                                 # cut the ball after construction
    g.adj[0] = []
    g._bfs_cache.clear()
    assert distance(g, 0, 2) is DISCONNECTED_IN_BALL


def test_edge_list_and_json_roundtrip(tmp_path, balls):
    f = tmp_path / "cycle.txt"
    f.write_text("# a 6-cycle\n" + "\n".join(f"{i} {(i + 1) % 6}" for i in range(6)) + "\n")
    g = load_edge_list(str(f))
    assert g.radius == 3 and sphere_sizes(g) == [1, 2, 2, 1]
    h = balls("lamplighter", 3)
    h2 = load_ball_json(h.to_json())
    assert h2.depth == h.depth and [sorted(a) for a in h2.adj] == [sorted(a) for a in h.adj]
    assert h2.words == h.words
    assert json.loads(h.to_json())["schema"] == "coarselab.ball/1"


def test_neighborhood(balls):
    g = balls("free(2)", 4)
    assert len(neighborhood(g, [g.basepoint], 2)) == 17
    with pytest.raises(PreconditionError):
        neighborhood(g, [], 1)


def test_vertex_budget():
    with pytest.raises(ResourceLimitError):
        build_ball("free(3)", 8, budget=1000)


def test_growth_rates():
    rep = growth_counts("free(2)", 8)
    assert rep.counts[:4] == [1, 5, 17, 53]
    assert abs(np.exp(rep.rate) - 3) < 0.1
    assert growth_counts("abelian(2)", 8).rate < np.log(2)
