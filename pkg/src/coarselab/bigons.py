"""(L, s, C)-bigons: verification, one-sided search, an exact small-instance
decision procedure, and finite-horizon counting.

A bigon at ``x`` is a pair of paths from the basepoint ``x0`` to ``x``, each
of length at most ``floor(L d(x0, x))``, whose vertices outside
``B = N_C({x0, x})`` are pairwise more than ``s`` apart.

Distances in a stored ball agree with the Cayley graph distance between two
vertices as soon as one of them has depth ``<= radius - t`` and the true
distance is at most ``t``.  Every threshold test made here is of that form
with ``t <= max(s, C)``, so all path vertices must have depth at most
``radius - max(s, C)``; this is the trusted region.  Queries leaving it raise
:class:`HorizonError`.
"""

from __future__ import annotations

import json
import math
import multiprocessing as mp
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import HorizonError, PreconditionError, ResourceLimitError
from .graph_core import BallGraph, loglinear_fit, top_half

DEFAULT_K = 16
DEFAULT_SLOPE_THRESHOLD = 0.05
DEFAULT_NODE_BUDGET = 2_000_000


@dataclass(frozen=True)
class BigonParams:
    L: Fraction
    s: int
    C: int

    def __post_init__(self):
        object.__setattr__(self, "L", Fraction(self.L))
        if self.L < 1:
            raise PreconditionError("bigons", f"L must be >= 1, got {self.L}")
        if self.s < 0 or self.C < 0:
            raise PreconditionError("bigons", "s and C must be >= 0")

    def cap(self, d: int) -> int:
        """Path length bound floor(L d)."""
        return math.floor(self.L * d)

    @property
    def slack(self) -> int:
        return max(self.s, self.C)

    def weaker_than(self, other: "BigonParams") -> bool:
        """True if every witness at ``self`` is also one at ``other``."""
        return other.L >= self.L and other.s <= self.s and other.C >= self.C

    def to_dict(self):
        return {"L": str(self.L), "s": self.s, "C": self.C}


@dataclass
class BigonWitness:
    x: object
    alpha1: list
    alpha2: list
    params: BigonParams
    notes: dict = field(default_factory=dict)

    def lengths(self) -> tuple[int, int]:
        return len(self.alpha1) - 1, len(self.alpha2) - 1

    def to_dict(self, g=None):
        def enc(v):
            if isinstance(g, BallGraph) or g is None:
                return v
            return g.label(v)
        d = {"x": enc(self.x), "alpha1": [enc(v) for v in self.alpha1],
             "alpha2": [enc(v) for v in self.alpha2]}
        d.update(self.params.to_dict())
        if self.notes:
            d["notes"] = self.notes
        return d

    def to_json(self, g=None) -> str:
        return json.dumps(self.to_dict(g), sort_keys=True)

    @classmethod
    def from_dict(cls, data, g=None) -> "BigonWitness":
        def dec(v):
            if isinstance(v, str) and g is not None:
                return g.vertex(g.model.parse(v))
            return v
        params = BigonParams(Fraction(data["L"]), int(data["s"]), int(data["C"]))
        return cls(dec(data["x"]), [dec(v) for v in data["alpha1"]],
                   [dec(v) for v in data["alpha2"]], params, data.get("notes", {}))


def check_horizon(g, vertices, slack: int, what: str = "vertex"):
    for v in vertices:
        if not g.trusted(v, slack):
            need = g.depth_of(v) + slack
            raise HorizonError("bigons", f"{what} {g.label(v)} at depth {g.depth_of(v)} "
                               f"is outside the trusted region (slack {slack})", required_radius=need)


def _unique(seq):
    seen = set()
    out = []
    for v in seq:
        if v not in seen:
            seen.add(v)
            out.append(v)
    return out


def verify_bigon(g, w: BigonWitness, horizon: bool = True, base=None) -> bool:
    """Exact check of both bigon conditions.  Works on explicit balls
    (vertex indices) and on implicit word balls (vertex words).  ``base``
    overrides the graph's basepoint."""
    p = w.params
    x0 = g.basepoint if base is None else base
    for path in (w.alpha1, w.alpha2):
        if not path or not g.same(path[0], x0) or not g.same(path[-1], w.x):
            return False
    if horizon:
        check_horizon(g, _unique([x0] + list(w.alpha1) + list(w.alpha2)), p.slack, "path vertex")
    for path in (w.alpha1, w.alpha2):
        if not all(g.is_adjacent(a, b) for a, b in zip(path, path[1:])):
            return False
    cap = p.cap(_base_distance(g, x0, w.x))
    if len(w.alpha1) - 1 > cap or len(w.alpha2) - 1 > cap:
        return False
    a1 = _unique(w.alpha1)
    a2 = _unique(w.alpha2)
    inB = g.members_within([x0, w.x], p.C, _unique(a1 + a2))
    A1 = [v for v in a1 if v not in inB]
    A2 = [v for v in a2 if v not in inB]
    return g.separated(A1, A2, p.s)


def _base_distance(g, x0, x) -> int:
    if g.same(x0, g.basepoint):
        return g.depth_of(x)
    if not isinstance(g, BallGraph):
        return g.distance(x0, x)
    d = g.distances_from(x0)[x]
    # a path of length d between x0 and x stays within depth
    # (depth x0 + depth x + d) / 2, so the ball distance is the true one
    if d < 0 or g.depth[x0] + g.depth[x] + d > 2 * g.radius:
        raise HorizonError("bigons", "distance from the chosen basepoint is not certified")
    return d


# -- search helpers ---------------------------------------------------------

def _require_ball(g, op):
    if not isinstance(g, BallGraph):
        raise PreconditionError("bigons", f"{op} needs an explicit ball")


def trusted_set(g: BallGraph, slack: int) -> set[int]:
    lim = g.radius - slack
    key = ("trusted", lim)
    T = g._bfs_cache.get(key)
    if T is None:
        T = {v for v, dv in enumerate(g.depth) if dv <= lim}
        g._bfs_cache[key] = T
    return T


class BlockCutTree:
    """Block-cut tree of the subgraph induced on ``T``, rooted at the
    basepoint.  Every simple path between two vertices stays inside the
    blocks on the tree path joining them."""

    def __init__(self, g: BallGraph, T: set):
        import networkx as nx
        H = nx.Graph()
        H.add_nodes_from(T)
        H.add_edges_from((u, v) for u in T for v in g.adj[u] if v in T and u < v)
        self.blocks = [frozenset(b) for b in nx.biconnected_components(H)]
        member: dict[int, list[int]] = {}
        for i, b in enumerate(self.blocks):
            for v in b:
                member.setdefault(v, []).append(i)
        self.member = member
        # tree nodes: ("b", i) for blocks, ("v", v) for cut vertices
        adj: dict = {}
        for v, bs in member.items():
            if len(bs) > 1:
                for i in bs:
                    adj.setdefault(("v", v), []).append(("b", i))
                    adj.setdefault(("b", i), []).append(("v", v))
        root = self.node(g.basepoint)
        self.parent = {root: None}
        q = deque([root])
        while q:
            u = q.popleft()
            for w in adj.get(u, ()):
                if w not in self.parent:
                    self.parent[w] = u
                    q.append(w)

    def node(self, v: int):
        bs = self.member.get(v)
        if bs is None:
            return ("v", v)  # isolated vertex
        return ("b", bs[0]) if len(bs) == 1 else ("v", v)

    def corridor(self, v: int) -> set[int] | None:
        """Union of the blocks between the basepoint and v; None when v is
        not connected to the basepoint inside T."""
        u = self.node(v)
        if u not in self.parent:
            return None
        out: set[int] = {v}
        while u is not None:
            if u[0] == "b":
                out |= self.blocks[u[1]]
            u = self.parent[u]
        return out


def block_cut_tree(g: BallGraph, slack: int) -> BlockCutTree:
    key = ("blocks", g.radius - slack)
    bct = g._bfs_cache.get(key)
    if bct is None:
        bct = BlockCutTree(g, trusted_set(g, slack))
        g._bfs_cache[key] = bct
    return bct


def bounded_path(g: BallGraph, s: int, t: int, ok, cap: int) -> list[int] | None:
    """Some shortest s-t path of length <= cap through vertices with
    ``ok(v)``; bidirectional BFS that always grows the smaller frontier, so a
    small component around either end is exhausted quickly."""
    if not (ok(s) and ok(t)):
        return None
    if s == t:
        return [s]
    par = [{s: None}, {t: None}]
    dist = [{s: 0}, {t: 0}]
    front = [[s], [t]]
    rad = [0, 0]
    adj = g.adj
    while front[0] and front[1] and rad[0] + rad[1] < cap:
        i = 0 if len(front[0]) <= len(front[1]) else 1
        mine, other = dist[i], dist[1 - i]
        best = None
        nxt = []
        for u in front[i]:
            for v in adj[u]:
                if v in mine or not ok(v):
                    continue
                mine[v] = rad[i] + 1
                par[i][v] = u
                nxt.append(v)
                if v in other:
                    tot = rad[i] + 1 + other[v]
                    if best is None or tot < best[0]:
                        best = (tot, v)
        rad[i] += 1
        front[i] = nxt
        if best is not None:
            if best[0] > cap:
                return None
            m = best[1]
            left = []
            v = m
            while v is not None:
                left.append(v)
                v = par[0][v]
            right = []
            v = par[1][m]
            while v is not None:
                right.append(v)
                v = par[1][v]
            return left[::-1] + right
    return None


def _descend(g: BallGraph, v: int, dist: dict) -> list[int]:
    """Walk from v to the source of ``dist`` stepping to the smallest
    neighbor one closer."""
    path = [v]
    while dist[v] > 0:
        dv = dist[v]
        v = next(w for w in g.adj[v] if dist.get(w, -1) == dv - 1)
        path.append(v)
    return path


def _to_basepoint(g: BallGraph, v: int) -> list[int]:
    path = [v]
    while g.depth[v] > 0:
        dv = g.depth[v]
        v = next(w for w in g.adj[v] if g.depth[w] == dv - 1)
        path.append(v)
    return path[::-1]


def _drop_loops(path: list[int]) -> list[int]:
    out: list[int] = []
    pos: dict[int, int] = {}
    for v in path:
        if v in pos:
            i = pos[v]
            for u in out[i + 1:]:
                del pos[u]
            del out[i + 1:]
        else:
            pos[v] = len(out)
            out.append(v)
    return out


def alpha1_candidates(g: BallGraph, x: int, cap: int, T: set, k: int = DEFAULT_K):
    """The canonical geodesic, then paths through waypoints m of the ellipse
    depth(m) + d(m, x) <= cap, farthest from both ends first."""
    geo = _to_basepoint(g, x)
    yield geo
    if k <= 1:
        return
    dx = g.bfs([x], allowed=T, max_depth=cap)
    geo_set = set(geo)
    ell = [m for m, dm in dx.items() if g.depth[m] + dm <= cap and m not in geo_set]
    ell.sort(key=lambda m: (-min(g.depth[m], dx[m]), -(g.depth[m] + dx[m]), m))
    seen = {tuple(geo)}
    made = 1
    for m in ell:
        if made >= k:
            break
        path = _drop_loops(_to_basepoint(g, m) + _descend(g, m, dx)[1:])
        if len(path) - 1 > cap or tuple(path) in seen:
            continue
        seen.add(tuple(path))
        made += 1
        yield path


def _second_path(g: BallGraph, alpha1: Sequence[int], x: int, params: BigonParams,
                 T: set, B: set, cap: int) -> list[int] | None:
    A1 = [v for v in alpha1 if v not in B]
    F = set(g.bfs(A1, max_depth=params.s)) - B if A1 else set()
    return bounded_path(g, g.basepoint, x, lambda v: v in T and v not in F, cap)


def _setup(g: BallGraph, x, params: BigonParams):
    x = g.vertex(x)
    check_horizon(g, [x], params.slack, "endpoint")
    T = trusted_set(g, params.slack)
    B = set(g.bfs([g.basepoint, x], max_depth=params.C))
    return x, T, B, params.cap(g.depth[x])


def find_bigon(g: BallGraph, x, params: BigonParams, strategy: str = "auto",
               k: int = DEFAULT_K, D=None) -> BigonWitness | None:
    """One-sided search.  A returned witness has passed verify_bigon; None
    certifies nothing.  ``strategy`` is "paths" (geodesic plus waypoint
    candidates), "divergence" (ray construction with bound D) or "auto"
    (both when D is given)."""
    _require_ball(g, "find_bigon")
    if strategy not in ("auto", "paths", "divergence"):
        raise PreconditionError("bigons", f"unknown strategy {strategy!r}")
    x, T, B, cap = _setup(g, x, params)
    if strategy in ("auto", "paths"):
        for a1 in alpha1_candidates(g, x, cap, T, k):
            a2 = _second_path(g, a1, x, params, T, B, cap)
            if a2 is not None:
                w = BigonWitness(x, list(a1), a2, params)
                if verify_bigon(g, w):
                    return w
    if strategy in ("auto", "divergence") and D is not None:
        from .divergence import construct_bigon_from_divergence
        s = params.s
        target = BigonParams(20 * Fraction(D), s, 2 * s)
        if target.weaker_than(params):
            try:
                w = construct_bigon_from_divergence(g, x, D, s)
            except HorizonError:
                if strategy == "divergence":
                    raise
                return None
            w = BigonWitness(w.x, w.alpha1, w.alpha2, params, w.notes)
            if verify_bigon(g, w):
                return w
    return None


def bigon_exists_exact(g: BallGraph, x, params: BigonParams,
                       node_budget: int = DEFAULT_NODE_BUDGET) -> bool:
    """Complete decision by depth-first search over simple paths alpha1 in
    the trusted region, pruned by distance to x; for each alpha1 the best
    alpha2 is a shortest path avoiding F = N_s(alpha1 - B) - B.  Restricting
    to simple alpha1 loses nothing: deleting a cycle shortens the path and
    shrinks its vertex set."""
    _require_ball(g, "bigon_exists_exact")
    x, T, B, cap = _setup(g, x, params)
    x0 = g.basepoint
    corridor = block_cut_tree(g, params.slack).corridor(x)
    if corridor is None:
        return False
    dx = g.bfs([x], allowed=corridor, max_depth=cap)
    if x0 not in dx:
        return False
    adj = g.adj
    cache: dict[frozenset, bool] = {}
    path = [x0]
    on = {x0}
    nodes = 0

    def ok_alpha1() -> bool:
        key = frozenset(v for v in path if v not in B)
        hit = cache.get(key)
        if hit is None:
            hit = _second_path(g, path, x, params, T, B, cap) is not None
            cache[key] = hit
        return hit

    def dfs(v: int) -> bool:
        nonlocal nodes
        nodes += 1
        if nodes > node_budget:
            raise ResourceLimitError("bigons", f"instance too large (node budget {node_budget})")
        if v == x:
            return ok_alpha1()
        n = len(path)
        nbrs = sorted((w for w in adj[v] if w not in on and n + dx.get(w, cap + 1) <= cap),
                      key=lambda w: (dx[w], w))
        for w in nbrs:
            path.append(w)
            on.add(w)
            if dfs(w):
                return True
            path.pop()
            on.discard(w)
        return False

    return dfs(x0)


# -- counting ---------------------------------------------------------------

@dataclass
class BigonCountReport:
    params: BigonParams
    mode: str
    n_max: int
    trusted_radius: int
    counts: list[int]           # g(n) = #{x : d(x0, x) <= n admitting a bigon}
    sphere_counts: list[int]    # same, restricted to d(x0, x) = n
    slope: float | None
    fit_range: list[int]
    verdict: str
    none_bound: int
    threshold: float
    spec: str = ""
    generators: tuple = ()

    @property
    def base(self) -> float | None:
        return None if self.slope is None else math.exp(self.slope)

    def to_dict(self):
        return {"schema": "coarselab.bigon-count/1", "spec": self.spec,
                "generators": list(self.generators), "params": self.params.to_dict(),
                "mode": self.mode, "n_max": self.n_max, "trusted_radius": self.trusted_radius,
                "counts": self.counts, "sphere_counts": self.sphere_counts,
                "slope": self.slope, "base": self.base, "fit_range": self.fit_range,
                "verdict": self.verdict, "none_bound": self.none_bound,
                "threshold": self.threshold}

    def to_csv(self) -> str:
        lines = ["n,count,sphere_count"]
        lines += [f"{n},{c},{sc}" for n, (c, sc) in enumerate(zip(self.counts, self.sphere_counts))]
        footer = {k: v for k, v in self.to_dict().items() if k not in ("counts", "sphere_counts")}
        lines.append("# " + json.dumps(footer, sort_keys=True))
        return "\n".join(lines) + "\n"


_POOL_STATE: dict = {}


def _decide(x: int) -> bool:
    g, params, mode, k, D, budget = (_POOL_STATE[key] for key in ("g", "params", "mode", "k", "D", "budget"))
    if mode == "exact":
        return bigon_exists_exact(g, x, params, node_budget=budget)
    return find_bigon(g, x, params, k=k, D=D) is not None


def classify(sphere_counts, counts, n_max, none_bound, threshold):
    ns = top_half(1, n_max) if n_max >= 1 else []
    slope = None
    if ns and all(counts[n] > 0 for n in ns):
        slope, _, _ = loglinear_fit(ns, [counts[n] for n in ns])
    if n_max <= none_bound:
        # every endpoint this close may carry a bigon covered entirely by B
        verdict = "inconclusive"
    elif all(c == 0 for c in sphere_counts[none_bound + 1:]):
        verdict = "none-found"
    elif slope is not None and slope > threshold:
        verdict = "exponential-at-horizon"
    else:
        verdict = "inconclusive"
    return slope, ns, verdict


def count_bigons(g: BallGraph, params: BigonParams, n_max: int | None = None,
                 mode: str = "heuristic", k: int = DEFAULT_K, D=None, workers: int = 1,
                 none_bound: int | None = None, threshold: float = DEFAULT_SLOPE_THRESHOLD,
                 node_budget: int = DEFAULT_NODE_BUDGET) -> BigonCountReport:
    """Counts of bigon endpoints in B_n(x0) for n <= n_max.  Heuristic mode
    counts certified witnesses (lower bounds); exact mode decides every
    vertex."""
    _require_ball(g, "count_bigons")
    if mode not in ("heuristic", "exact"):
        raise PreconditionError("bigons", f"unknown mode {mode!r}")
    limit = g.radius - params.slack
    if n_max is None:
        n_max = limit
    if n_max > limit:
        raise HorizonError("bigons", f"n_max = {n_max} exceeds the trusted radius {limit}",
                           required_radius=n_max + params.slack)
    xs = [v for v in range(len(g)) if g.depth[v] <= n_max]
    _POOL_STATE.update(g=g, params=params, mode=mode, k=k, D=D, budget=node_budget)
    try:
        if workers > 1 and len(xs) > 64 and "fork" in mp.get_all_start_methods():
            with mp.get_context("fork").Pool(workers) as pool:
                flags = pool.map(_decide, xs, chunksize=max(1, len(xs) // (8 * workers)))
        else:
            flags = [_decide(x) for x in xs]
    finally:
        _POOL_STATE.clear()
    sphere = [0] * (n_max + 1)
    for x, f in zip(xs, flags):
        if f:
            sphere[g.depth[x]] += 1
    counts = []
    run = 0
    for c in sphere:
        run += c
        counts.append(run)
    nb = 2 * params.C + 1 if none_bound is None else none_bound
    slope, ns, verdict = classify(sphere, counts, n_max, nb, threshold)
    return BigonCountReport(params, mode, n_max, limit, counts, sphere, slope,
                            [ns[0], ns[-1]] if ns else [], verdict, nb, threshold,
                            g.spec, tuple(g.generators))
