"""Explicit finite balls of Cayley graphs and the queries run on them."""

from __future__ import annotations

import json
import math
import os
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import PreconditionError, ResourceLimitError
from .group_models import GroupModel, make_model
from .words import Word, shortlex_key

DEFAULT_VERTEX_BUDGET = 5_000_000


class Marker(Enum):
    DISCONNECTED_IN_BALL = "DISCONNECTED-IN-BALL"
    UNBOUNDED_IN_BALL = "UNBOUNDED-IN-BALL"

    def __str__(self):
        return self.value


DISCONNECTED_IN_BALL = Marker.DISCONNECTED_IN_BALL
UNBOUNDED_IN_BALL = Marker.UNBOUNDED_IN_BALL


class DisconnectedError(PreconditionError):
    def __init__(self, u, v):
        super().__init__("graph_core", f"vertices {u} and {v} are disconnected in the ball")


def vertex_budget() -> int:
    env = os.environ.get("COARSELAB_VERTEX_BUDGET")
    return int(env) if env else DEFAULT_VERTEX_BUDGET


@dataclass
class BallGraph:
    """Radius-``radius`` ball around vertex 0.

    ``words[i]`` is the canonical word of vertex i (empty for Cayley balls
    loaded from edge lists), ``adj[i]`` its sorted neighbor indices and
    ``depth[i]`` its distance from the basepoint.
    """

    words: list
    adj: list[list[int]]
    depth: list[int]
    radius: int
    spec: str = ""
    generators: tuple[str, ...] = ()
    basepoint: int = 0
    model: GroupModel | None = field(default=None, repr=False, compare=False)
    index: dict = field(default_factory=dict, repr=False, compare=False)
    _bfs_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.index and self.words and self.words[0] is not None:
            self.index = {w: i for i, w in enumerate(self.words)}

    def __len__(self):
        return len(self.adj)

    @property
    def max_degree(self) -> int:
        return max((len(a) for a in self.adj), default=0)

    def vertex(self, w) -> int:
        """Index of the vertex for word ``w`` (normalized through the model)."""
        if isinstance(w, (int, np.integer)):
            return int(w)
        w = tuple(w)
        if w in self.index:
            return self.index[w]
        if self.model is not None:
            nf = self.model.normal_form(w)
            if nf in self.index:
                return self.index[nf]
            if not self.model.exact_normal_form:
                v = self.walk(w)
                if v is not None:
                    return v
        raise KeyError(f"word {w} is not in the ball")

    def walk(self, w: Sequence[int], start: int | None = None) -> int | None:
        """Follow the letters of ``w`` along labelled edges."""
        v = self.basepoint if start is None else start
        for x in w:
            v = self.moves[v].get(x)
            if v is None:
                return None
        return v

    def word(self, v: int) -> Word:
        return self.words[v]

    def label(self, v: int) -> str:
        if self.model is not None and self.words[v] is not None:
            return self.model.format(self.words[v])
        return str(v)

    def is_adjacent(self, u: int, v: int) -> bool:
        return v in self.adj[u]

    def trusted(self, v: int, slack: int) -> bool:
        return self.depth[v] + slack <= self.radius

    def depth_of(self, v: int) -> int:
        return self.depth[v]

    def same(self, u: int, v: int) -> bool:
        return u == v

    def ordering_key(self, v: int):
        return v

    def dist_to_path(self, p: int, path: Sequence[int]) -> int:
        """Distance from p to the vertex set of ``path`` inside the ball."""
        dist = self.bfs(list(path), target=p)
        return dist.get(p, DISCONNECTED_IN_BALL)

    # -- BFS ----------------------------------------------------------------

    def bfs(self, sources: Iterable[int], blocked=None, max_depth: int | None = None,
            allowed=None, target: int | None = None) -> dict[int, int]:
        """Distances from ``sources`` inside the stored ball, avoiding
        ``blocked`` and (if given) staying inside ``allowed``."""
        dist: dict[int, int] = {}
        q = deque()
        for s in sources:
            if s in dist or (blocked is not None and s in blocked):
                continue
            dist[s] = 0
            q.append(s)
        adj = self.adj
        while q:
            u = q.popleft()
            du = dist[u]
            if u == target:
                break
            if max_depth is not None and du >= max_depth:
                continue
            for w in adj[u]:
                if w in dist:
                    continue
                if blocked is not None and w in blocked:
                    continue
                if allowed is not None and w not in allowed:
                    continue
                dist[w] = du + 1
                q.append(w)
        return dist

    def distances_from(self, s: int) -> list[int]:
        """Full single-source distance array (-1 when unreachable); cached."""
        d = self._bfs_cache.get(s)
        if d is not None:
            return d
        d = [-1] * len(self.adj)
        d[s] = 0
        q = deque([s])
        adj = self.adj
        while q:
            u = q.popleft()
            du = d[u] + 1
            for w in adj[u]:
                if d[w] < 0:
                    d[w] = du
                    q.append(w)
        if len(self._bfs_cache) * len(self.adj) > 20_000_000:
            self._bfs_cache.clear()
        self._bfs_cache[s] = d
        return d

    def shortest_path(self, u: int, v: int, blocked=None, allowed=None) -> list[int] | None:
        """Shortest path avoiding ``blocked``; ties go to the smallest parent."""
        if blocked is not None and (u in blocked or v in blocked):
            return None
        if u == v:
            return [u]
        # BFS from v, then walk from u always stepping to the smallest
        # neighbor that is one closer to v
        dist = self.bfs([v], blocked=blocked, allowed=allowed, target=u)
        if u not in dist:
            return None
        path = [u]
        cur = u
        while cur != v:
            dc = dist[cur]
            cur = min(w for w in self.adj[cur] if dist.get(w, -2) == dc - 1)
            path.append(cur)
        return path

    # -- queries used by the bigon machinery --------------------------------

    def members_within(self, centers: Iterable[int], r: int, candidates: Iterable[int]) -> set[int]:
        if r < 0:
            return set()
        near = self.bfs(list(centers), max_depth=r)
        return {v for v in candidates if v in near}

    def separated(self, A: Sequence[int], B: Sequence[int], s: int) -> bool:
        """True iff every vertex of A is more than s from every vertex of B."""
        if not A or not B:
            return True
        near = self.bfs(list(A), max_depth=s)
        return not any(b in near for b in B)

    def distance(self, u: int, v: int):
        return distance(self, u, v)

    def geodesic(self, u: int, v: int) -> list[int]:
        return geodesic(self, u, v)

    # -- serialization ------------------------------------------------------

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i, a in enumerate(self.adj) for j in a if i < j]

    def to_json(self) -> str:
        verts = [self.model.format(w) if self.model is not None else str(i)
                 for i, w in enumerate(self.words)]
        return json.dumps({"schema": "coarselab.ball/1", "spec": self.spec,
                           "generators": list(self.generators), "radius": self.radius,
                           "basepoint": self.basepoint, "vertices": verts,
                           "edges": [list(e) for e in self.edges()]}, separators=(",", ":"))


def _ball_from_layers(model: GroupModel, words: list[Word], depth: list[int],
                      moves: list[dict[int, int]], radius: int) -> BallGraph:
    adj = [sorted(set(m.values()) - {i}) for i, m in enumerate(moves)]
    g = BallGraph(words=words, adj=adj, depth=depth, radius=radius, spec=model.spec,
                  generators=tuple(model.generators), model=model)
    g.moves = moves
    return g


def build_ball(model: GroupModel | str, radius: int, budget: int | None = None) -> BallGraph:
    """BFS ball of the Cayley graph.  Vertices are indexed layer by layer,
    each layer sorted lexicographically by canonical word."""
    model = make_model(model)
    if radius < 0:
        raise PreconditionError("graph_core", "radius must be >= 0")
    budget = vertex_budget() if budget is None else budget
    if not model.exact_normal_form:
        return _build_ball_word_problem(model, radius, budget)
    letters = model.letter_order
    words: list[Word] = [()]
    index: dict[Word, int] = {(): 0}
    depth = [0]
    moves: list[dict[int, int]] = [{}]
    layer = [0]
    for n in range(radius + 1):
        new: dict[Word, list] = {}
        for v in layer:
            g = words[v]
            mv = moves[v]
            for x in letters:
                h = model.multiply_letter(g, x)
                j = index.get(h)
                if j is not None:
                    mv[x] = j
                elif n < radius:
                    new.setdefault(h, []).append((v, x))
        if n == radius:
            break
        layer = []
        for h in sorted(new, key=_lex_key):
            i = len(words)
            if i >= budget:
                raise ResourceLimitError(
                    "graph_core", f"ball of {model.spec} exceeds vertex budget {budget} at radius {n + 1}")
            words.append(h)
            index[h] = i
            depth.append(n + 1)
            moves.append({})
            layer.append(i)
            for v, x in new[h]:
                moves[v][x] = i
    g = _ball_from_layers(model, words, depth, moves, radius)
    g.index = index
    return g


def _lex_key(w: Word):
    return shortlex_key(w)[1]


def _build_ball_word_problem(model, radius: int, budget: int) -> BallGraph:
    """BFS for models whose normal forms are not canonical.

    Layers are expanded in shortlex order, so the first word reaching an
    element is its shortlex-least geodesic.  A new word ``g x`` is compared,
    via the word problem, with the vertices of the current and next layer
    that share its abelian invariant.
    """
    letters = sorted(model.letter_order, key=lambda x: 2 * (abs(x) - 1) + (x < 0))
    inv = {x: -x for x in letters}
    words: list[Word] = [()]
    depth = [0]
    moves: list[dict[int, int]] = [{}]
    buckets: dict[tuple, list[int]] = {(model.bucket_key(()), 0): [0]}
    layer = [0]
    for n in range(radius + 1):
        nxt: list[int] = []
        for v in layer:
            g = words[v]
            for x in letters:
                if x in moves[v]:
                    continue
                h = g + (x,)
                key = model.bucket_key(h)
                hit = None
                # an equal vertex one layer up would already be linked to v
                for d in (n, n + 1):
                    for j in buckets.get((key, d), ()):
                        if j != v and model.equal(h, words[j]):
                            hit = j
                            break
                    if hit is not None:
                        break
                if hit is None and n < radius:
                    hit = len(words)
                    if hit >= budget:
                        raise ResourceLimitError(
                            "graph_core", f"ball of {model.spec} exceeds vertex budget {budget}")
                    words.append(h)
                    depth.append(n + 1)
                    moves.append({})
                    buckets.setdefault((key, n + 1), []).append(hit)
                    nxt.append(hit)
                if hit is not None:
                    moves[v][x] = hit
                    moves[hit][inv[x]] = v
        layer = nxt
    return _ball_from_layers(model, words, depth, moves, radius)


def load_edge_list(path_or_lines, basepoint: int = 0, radius: int | None = None) -> BallGraph:
    """Non-Cayley graph from ``i j`` lines (0-indexed).  Depth is measured
    from ``basepoint``; the radius defaults to the eccentricity of it."""
    if isinstance(path_or_lines, str) and os.path.exists(path_or_lines):
        with open(path_or_lines) as fh:
            lines = fh.read().splitlines()
    elif isinstance(path_or_lines, str):
        lines = path_or_lines.splitlines()
    else:
        lines = list(path_or_lines)
    pairs = []
    n = 0
    for line in lines:
        line = line.split("#")[0].strip()
        if not line:
            continue
        i, j = (int(t) for t in line.split()[:2])
        pairs.append((i, j))
        n = max(n, i + 1, j + 1)
    return graph_from_edges(n, pairs, basepoint=basepoint, radius=radius)


def graph_from_edges(n: int, pairs, basepoint: int = 0, radius: int | None = None,
                     spec: str = "edge-list") -> BallGraph:
    nbrs = [set() for _ in range(n)]
    for i, j in pairs:
        if i != j:
            nbrs[i].add(j)
            nbrs[j].add(i)
    adj = [sorted(s) for s in nbrs]
    g = BallGraph(words=[None] * n, adj=adj, depth=[0] * n, radius=0, spec=spec,
                  basepoint=basepoint)
    d = g.distances_from(basepoint)
    if min(d) < 0:
        raise PreconditionError("graph_core", "graph is not connected")
    g.depth = list(d)
    g.radius = max(d) if radius is None else radius
    g._bfs_cache.clear()
    return g


def load_ball_json(text: str) -> BallGraph:
    data = json.loads(text)
    model = make_model(data["spec"]) if data.get("spec") and data["spec"] != "edge-list" else None
    n = len(data["vertices"])
    g = graph_from_edges(n, data["edges"], basepoint=data.get("basepoint", 0),
                         radius=data["radius"], spec=data.get("spec", ""))
    if model is not None:
        g.model = model
        g.generators = tuple(model.generators)
        g.words = [model.normal_form(model.parse(s)) for s in data["vertices"]]
        g.index = {w: i for i, w in enumerate(g.words)}
    return g


# -- module-level operations ----------------------------------------------

def distance(g: BallGraph, u: int, v: int):
    """BFS distance in the stored ball, or ``DISCONNECTED_IN_BALL``."""
    if u == v:
        return 0
    d = g.distances_from(u)[v]
    return DISCONNECTED_IN_BALL if d < 0 else d


def geodesic(g: BallGraph, u: int, v: int) -> list[int]:
    """Canonical shortest path: from u, step to the smallest-index neighbor
    one closer to v."""
    if u == v:
        return [u]
    d = g.distances_from(v)
    if d[u] < 0:
        raise DisconnectedError(u, v)
    path = [u]
    cur = u
    while cur != v:
        dc = d[cur]
        cur = next(w for w in g.adj[cur] if d[w] == dc - 1)
        path.append(cur)
    return path


def neighborhood(g: BallGraph, S: Iterable[int], r: int) -> set[int]:
    S = list(S)
    if not S:
        raise PreconditionError("graph_core", "neighborhood needs a nonempty set")
    return set(g.bfs(S, max_depth=r))


def is_path(g: BallGraph, path: Sequence[int]) -> bool:
    return all(g.is_adjacent(a, b) for a, b in zip(path, path[1:]))


def sphere_sizes(g: BallGraph) -> list[int]:
    counts = [0] * (g.radius + 1)
    for d in g.depth:
        counts[d] += 1
    return counts


def loglinear_fit(ns: Sequence[int], values: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares line through (n, log value); returns slope, intercept
    and the RMS residual."""
    x = np.asarray(ns, dtype=float)
    y = np.log(np.asarray(values, dtype=float))
    if len(x) < 2:
        return 0.0, float(y[0]) if len(y) else 0.0, 0.0
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - (slope * x + icpt)
    return float(slope), float(icpt), float(math.sqrt(np.mean(res ** 2)))


def top_half(lo: int, hi: int) -> list[int]:
    """The upper half of the integer range [lo, hi]."""
    start = lo + (hi - lo) // 2
    return list(range(start, hi + 1))


@dataclass
class GrowthReport:
    spec: str
    generators: list[str]
    counts: list[int]
    rate: float
    residual: float
    fit_range: list[int]

    def to_dict(self):
        return {"spec": self.spec, "generators": self.generators, "counts": self.counts,
                "rate": self.rate, "base": math.exp(self.rate), "residual": self.residual,
                "fit_range": self.fit_range}


def growth_counts(model: GroupModel | str, max_radius: int, ball: BallGraph | None = None) -> GrowthReport:
    """|B_n(1)| for n <= max_radius with a log-linear rate fitted over the
    top half of the range."""
    if max_radius < 1:
        raise PreconditionError("graph_core", "max_radius must be >= 1")
    model = make_model(model)
    g = ball if ball is not None and ball.radius >= max_radius else build_ball(model, max_radius)
    sph = sphere_sizes(g)[:max_radius + 1]
    counts = list(np.cumsum(sph).tolist())
    ns = top_half(1, max_radius)
    slope, _, res = loglinear_fit(ns, [counts[n] for n in ns])
    return GrowthReport(model.spec, list(model.generators), counts, slope, res, [ns[0], ns[-1]])
