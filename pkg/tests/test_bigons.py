import itertools
import json
from fractions import Fraction

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from coarselab.bigons import (BigonParams, BigonWitness, bigon_exists_exact, bounded_path, classify,
                              count_bigons, find_bigon, trusted_set, verify_bigon)
from coarselab.errors import HorizonError, PreconditionError, ResourceLimitError
from coarselab.graph_core import graph_from_edges


def brute_force_bigon(g, x, p):
    """Enumerate every pair of simple paths x0 -> x inside the trusted region
    and test the separation condition with ball distances."""
    T = trusted_set(g, p.slack)
    if x not in T:
        return False
    G = nx.Graph()
    G.add_nodes_from(T)
    G.add_edges_from((u, v) for u in T for v in g.adj[u] if v in T)
    cap = p.cap(g.depth[x])
    x0 = g.basepoint
    paths = list(nx.all_simple_paths(G, x0, x, cutoff=cap)) if x != x0 else [[x0]]
    if not paths:
        return False
    d0, dx = g.distances_from(x0), g.distances_from(x)
    outside = [[v for v in q if d0[v] > p.C and dx[v] > p.C] for q in paths]
    for A, B in itertools.combinations_with_replacement(outside, 2):
        if all(g.distances_from(u)[v] > p.s for u in A for v in B):
            return True
    return False


def cycle(n):
    return graph_from_edges(n, [(i, (i + 1) % n) for i in range(n)])


GRID = [BigonParams(Fraction(L), s, C) for L, s, C in itertools.product([1, 2, 3], [1, 2], [0, 1])]


@pytest.mark.parametrize("spec,radius", [("abelian(2)", 5), ("lamplighter", 5), ("free(2)", 4), ("bs(1,2)", 4)])
def test_exact_search_matches_brute_force(balls, spec, radius):
    g = balls(spec, radius)
    for p in GRID:
        for x in sorted(trusted_set(g, p.slack)):
            if x == g.basepoint:
                continue
            assert bigon_exists_exact(g, x, p) == brute_force_bigon(g, x, p), (spec, p, x)


def test_cycle_graphs():
    # in a 2m-cycle with the basepoint at 0 the two arcs to the antipode form a
    # bigon as long as the trusted region covers the whole cycle
    g = cycle(12)
    g.radius = 9
    x = 6
    p = BigonParams(Fraction(1), 1, 1)
    assert bigon_exists_exact(g, x, p) == brute_force_bigon(g, x, p) is True
    w = find_bigon(g, x, p)
    assert w is not None and verify_bigon(g, w)
    assert sorted(w.lengths()) == [6, 6]


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_found_witnesses_are_sound_and_monotone(balls, data):
    g = balls("lamplighter", 7)
    p = data.draw(st.sampled_from(GRID))
    T = sorted(trusted_set(g, p.slack))
    x = data.draw(st.sampled_from(T[1:]))
    w = find_bigon(g, x, p)
    if w is None:
        return
    assert verify_bigon(g, w)
    assert bigon_exists_exact(g, x, p)
    # a witness stays a witness for weaker parameters with the same horizon
    q = BigonParams(p.L + data.draw(st.integers(0, 2)), data.draw(st.integers(0, p.s)), p.C)
    assert p.weaker_than(q)
    assert verify_bigon(g, BigonWitness(w.x, w.alpha1, w.alpha2, q))


def test_verify_rejects_bad_witnesses(balls):
    g = balls("abelian(2)", 8)
    x = g.vertex((1, 1, 1, 1))
    geo = g.geodesic(g.basepoint, x)
    p = BigonParams(Fraction(2), 1, 2)
    # with C = 2 every vertex of the doubled geodesic lies in B
    assert verify_bigon(g, BigonWitness(x, geo, geo, p))
    assert not verify_bigon(g, BigonWitness(x, geo, geo, BigonParams(Fraction(2), 1, 1)))
    # the wrong endpoint
    assert not verify_bigon(g, BigonWitness(x, geo[:-1], geo, p))
    # a non-path
    assert not verify_bigon(g, BigonWitness(x, [geo[0], geo[2], geo[3], geo[4]], geo, p))
    # too long: cap is floor(1 * 4) = 4
    around = g.geodesic(g.basepoint, g.vertex((2,))) + g.geodesic(g.vertex((2,)), x)[1:]
    assert not verify_bigon(g, BigonWitness(x, around, geo, BigonParams(Fraction(1), 1, 1)))
    with pytest.raises(HorizonError):
        far = g.vertex((1,) * 8)
        verify_bigon(g, BigonWitness(far, g.geodesic(0, far), g.geodesic(0, far), p))


def test_doubled_geodesic_separation():
    # a doubled geodesic is a bigon exactly when B covers it, since any vertex
    # outside B is at distance 0 from itself
    g = cycle(20)
    x = 5
    geo = g.geodesic(0, x)
    assert not verify_bigon(g, BigonWitness(x, geo, geo, BigonParams(Fraction(1), 0, 1)))
    assert verify_bigon(g, BigonWitness(x, geo, geo, BigonParams(Fraction(1), 0, 3)))


def test_params_validation_and_serialization(balls):
    with pytest.raises(PreconditionError):
        BigonParams(Fraction(1, 2), 1, 1)
    with pytest.raises(PreconditionError):
        BigonParams(Fraction(2), -1, 1)
    g = balls("abelian(2)", 8)
    w = find_bigon(g, g.vertex((1, 1, 2)), BigonParams(Fraction(2), 1, 1))
    assert w is not None
    w2 = BigonWitness.from_dict(json.loads(w.to_json(g)), g)
    assert (w2.x, w2.alpha1, w2.alpha2, w2.params) == (w.x, w.alpha1, w.alpha2, w.params)


def test_bounded_path_is_shortest_in_region(balls):
    g = balls("abelian(2)", 6)
    s, t = g.vertex((-1,) * 3), g.vertex((1,) * 3)
    blocked = set(g.bfs([g.basepoint], max_depth=1))
    path = bounded_path(g, s, t, lambda v: v not in blocked, 100)
    assert path[0] == s and path[-1] == t and not blocked & set(path)
    G = nx.Graph((u, v) for u in range(len(g)) for v in g.adj[u] if not {u, v} & blocked)
    n = nx.shortest_path_length(G, s, t)
    assert len(path) - 1 == n == 10
    assert bounded_path(g, s, t, lambda v: v not in blocked, n - 1) is None


def test_node_budget(balls):
    g = balls("abelian(2)", 12)
    with pytest.raises(ResourceLimitError):
        bigon_exists_exact(g, g.vertex((1,) * 5 + (2,) * 3), BigonParams(Fraction(3), 4, 0), node_budget=10)


def test_classify():
    assert classify([1, 4, 0, 0, 0], [1, 5, 5, 5, 5], 4, 4, 0.05)[2] == "inconclusive"
    assert classify([1, 4, 1, 0, 0, 0, 0], [1, 5, 6, 6, 6, 6, 6], 6, 2, 0.05)[2] == "none-found"
    counts = [2 ** n for n in range(9)]
    slope, ns, verdict = classify(counts, counts, 8, 2, 0.05)
    assert verdict == "exponential-at-horizon" and abs(slope - 0.693) < 0.01 and ns == [4, 5, 6, 7, 8]


def test_count_report_and_csv(balls):
    g = balls("free(2)", 6)
    rep = count_bigons(g, BigonParams(Fraction(2), 1, 1), mode="exact")
    assert rep.n_max == 5 and rep.verdict == "none-found"
    assert all(c == 0 for c in rep.sphere_counts[4:])
    assert rep.counts == list(itertools.accumulate(rep.sphere_counts))
    text = rep.to_csv()
    assert text.splitlines()[0] == "n,count,sphere_count"
    footer = json.loads(text.strip().splitlines()[-1][2:])
    assert footer["schema"] == "coarselab.bigon-count/1" and footer["verdict"] == "none-found"
    with pytest.raises(HorizonError):
        count_bigons(g, BigonParams(Fraction(2), 1, 1), n_max=6)


def test_parallel_counts_match_serial(balls):
    g = balls("lamplighter", 8)
    p = BigonParams(Fraction(2), 1, 2)
    a = count_bigons(g, p, mode="heuristic", workers=1)
    b = count_bigons(g, p, mode="heuristic", workers=2)
    assert a.counts == b.counts


def test_staircase_witness():
    from coarselab.graph_core import build_ball
    s = 1
    m = 2 * s + 2
    g = build_ball("abelian(2)", 2 * m + 1 + 2 * s)
    up = [(1, 2)] * m + [(1, -2)] * m
    down = [(1, -2)] * m + [(1, 2)] * m

    def walk(steps):
        w, out = (), [g.basepoint]
        for pair in steps:
            for x in pair:
                w = g.model.normal_form(w + (x,))
                out.append(g.vertex(w))
        return out

    a1, a2 = walk(up), walk(down)
    x = g.vertex((1,) * (2 * m))
    assert a1[-1] == a2[-1] == x
    assert verify_bigon(g, BigonWitness(x, a1, a2, BigonParams(Fraction(2), s, 2 * s)))


def test_grid_find_and_small_cases(balls):
    g = balls("abelian(2)", 16)
    p = BigonParams(Fraction(2), 2, 4)
    w = find_bigon(g, (1,) * 12, p)
    assert w is not None and verify_bigon(g, w) and bigon_exists_exact(g, (1,) * 12, BigonParams(Fraction(2), 1, 2))
    # next to the basepoint B covers everything
    assert bigon_exists_exact(g, (2,), BigonParams(Fraction(1), 3, 1))
    t = balls("free(2)", 8)
    assert not bigon_exists_exact(t, (1, 2, 1, 2, 2), BigonParams(Fraction(3), 1, 1))


def test_grid_counts_grow(balls):
    rep = count_bigons(balls("abelian(2)", 12), BigonParams(Fraction(2), 2, 4), mode="exact")
    assert rep.verdict != "none-found"
    assert rep.sphere_counts[-1] > 0 and rep.counts == sorted(rep.counts)


@pytest.mark.parametrize("spec", ["product(free(1),free(1))", "abelian(2)"])
def test_oracle_agreement_small_balls(balls, spec):
    g = balls(spec, 6)
    for p in GRID:
        for x in sorted(trusted_set(g, p.slack))[1:]:
            if find_bigon(g, x, p) is not None:
                assert bigon_exists_exact(g, x, p)
