"""Hyperbolicity constants of finite graphs, and executable versions of the
estimates behind the absence of fat bigons in hyperbolic graphs: the
projection bound d(p', q') <= d(p, q) + 8 delta, exponential detours
around balls on a geodesic, and the resulting length bound on bigon sides.

Explicit balls are treated as finite metric spaces in their own right.
Geodesics are the canonical ones (smallest-index next step), so for graphs
with non-unique geodesics the thin-triangle constant is a lower bound.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .bigons import BigonWitness, verify_bigon
from .errors import PreconditionError, ResourceLimitError
from .graph_core import UNBOUNDED_IN_BALL, BallGraph, Marker
from .implicit import WordBall

APSP_LIMIT = 6000


class _Metric:
    """All-pairs distances and canonical geodesics of an explicit ball."""

    def __init__(self, g: BallGraph):
        n = len(g)
        if n > APSP_LIMIT:
            raise ResourceLimitError("hyperbolicity", f"{n} vertices exceed the all-pairs limit {APSP_LIMIT}")
        from scipy.sparse import csr_matrix
        from scipy.sparse.csgraph import shortest_path
        rows = [i for i, a in enumerate(g.adj) for _ in a]
        cols = [j for a in g.adj for j in a]
        A = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        D = shortest_path(A, unweighted=True, directed=False)
        if np.isinf(D).any():
            raise PreconditionError("hyperbolicity", "graph is not connected")
        self.D = D.astype(np.int32)
        self.g = g
        self._geo: dict = {}

    def dist(self, u, v) -> int:
        return int(self.D[u, v])

    def geodesic(self, u: int, v: int) -> list[int]:
        key = (u, v)
        p = self._geo.get(key)
        if p is None:
            D, adj = self.D, self.g.adj
            p = [u]
            cur = u
            while cur != v:
                dc = D[cur, v]
                cur = next(w for w in adj[cur] if D[w, v] == dc - 1)
                p.append(cur)
            self._geo[key] = p
        return p

    def side(self, u, v):
        return self.geodesic(min(u, v), max(u, v))

    def set_dist(self, points: Sequence[int], targets: Sequence[int]) -> np.ndarray:
        return self.D[np.ix_(points, targets)].min(axis=1)


def metric_of(g: BallGraph) -> _Metric:
    m = g._bfs_cache.get("metric")
    if m is None:
        m = _Metric(g)
        g._bfs_cache["metric"] = m
    return m


@dataclass
class DeltaReport:
    method: str
    delta: Fraction
    mode: str
    samples: int
    seed: int | None
    witness: tuple = ()
    lower_bound: bool = True

    def to_dict(self):
        return {"schema": "coarselab.delta/1", "method": self.method, "delta": str(self.delta),
                "mode": self.mode, "samples": self.samples, "seed": self.seed,
                "witness": list(self.witness), "lower_bound": self.lower_bound}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _vertices(g) -> list:
    return list(range(len(g)))


def _triangle_defect_ball(M: _Metric, x, y, z) -> int:
    s1, s2, s3 = M.side(x, y), M.side(y, z), M.side(x, z)
    best = 0
    for a, b, c in ((s1, s2, s3), (s2, s1, s3), (s3, s1, s2)):
        best = max(best, int(M.set_dist(a, b + c).max()))
    return best


def _triangle_defect_words(g: WordBall, x, y, z) -> int:
    s1, s2, s3 = g.geodesic(x, y), g.geodesic(y, z), g.geodesic(x, z)
    best = 0
    for a, b, c in ((s1, s2, s3), (s2, s1, s3), (s3, s1, s2)):
        for p in a:
            best = max(best, min(g.dist_to_path(p, b), g.dist_to_path(p, c)))
    return best


def thin_triangle_delta(g, mode: str = "exhaustive", samples: int = 5000, seed: int = 0,
                        vertices: Sequence | None = None) -> DeltaReport:
    """Largest one-sided Hausdorff defect max_{p in side} d(p, other sides)
    over vertex triples, each side being the canonical geodesic."""
    if mode not in ("exhaustive", "sampled"):
        raise PreconditionError("hyperbolicity", f"unknown mode {mode!r}")
    if isinstance(g, WordBall):
        if mode == "exhaustive":
            raise ResourceLimitError("hyperbolicity", "implicit balls support sampled mode only")
        rng = random.Random(seed)
        pts = g.sample_vertices(rng, 3 * samples)
        best, wit = 0, ()
        for i in range(samples):
            x, y, z = pts[3 * i: 3 * i + 3]
            dfx = _triangle_defect_words(g, x, y, z)
            if dfx > best:
                best, wit = dfx, (g.label(x), g.label(y), g.label(z))
        return DeltaReport("thin-triangle", Fraction(best), mode, samples, seed, wit,
                           lower_bound=not g.tree_regime)
    M = metric_of(g)
    V = list(vertices) if vertices is not None else _vertices(g)
    if mode == "exhaustive":
        triples: Iterable = itertools.combinations(V, 3)
        count = len(V) * (len(V) - 1) * (len(V) - 2) // 6
    else:
        rng = random.Random(seed)
        triples = [tuple(rng.sample(V, 3)) for _ in range(samples)]
        count = samples
    best, wit = 0, ()
    for x, y, z in triples:
        dfx = _triangle_defect_ball(M, x, y, z)
        if dfx > best:
            best, wit = dfx, (x, y, z)
    is_tree = sum(len(a) for a in g.adj) // 2 == len(g) - 1
    return DeltaReport("thin-triangle", Fraction(best), mode, count, seed if mode == "sampled" else None,
                       wit, lower_bound=not is_tree)


def four_point_delta(g: BallGraph, mode: str = "exhaustive", samples: int = 20000, seed: int = 0,
                     vertices: Sequence | None = None) -> DeltaReport:
    """max over 4-tuples of (largest - middle) / 2 among the three pair sums."""
    M = metric_of(g)
    D = M.D.astype(np.int64)
    V = np.array(list(vertices) if vertices is not None else _vertices(g))
    best = 0
    wit = ()
    if mode == "exhaustive":
        W = V
        for x, y, z in itertools.combinations(V.tolist(), 3):
            s1 = D[x, y] + D[z, W]
            s2 = D[x, z] + D[y, W]
            s3 = D[y, z] + D[x, W]
            S = np.sort(np.stack([s1, s2, s3]), axis=0)
            gap = S[2] - S[1]
            i = int(gap.argmax())
            if gap[i] > best:
                best, wit = int(gap[i]), (x, y, z, int(W[i]))
        count = len(V) ** 4
    elif mode == "sampled":
        rng = random.Random(seed)
        Vl = V.tolist()
        for _ in range(samples):
            x, y, z, w = (rng.choice(Vl) for _ in range(4))
            S = sorted((D[x, y] + D[z, w], D[x, z] + D[y, w], D[x, w] + D[y, z]))
            if S[2] - S[1] > best:
                best, wit = int(S[2] - S[1]), (x, y, z, w)
        count = samples
    else:
        raise PreconditionError("hyperbolicity", f"unknown mode {mode!r}")
    return DeltaReport("four-point", Fraction(best, 2), mode, count, seed if mode == "sampled" else None, wit)


# -- projections ---------------------------------------------------------------

@dataclass
class ProjectionReport:
    delta: Fraction
    max_defect: int
    violations: int
    middle_checked: int
    middle_violations: int
    samples: int
    seed: int
    worst: tuple = ()

    @property
    def ok(self) -> bool:
        return self.violations == 0 and self.middle_violations == 0

    def to_dict(self):
        return {"schema": "coarselab.projection/1", "delta": str(self.delta), "bound": str(8 * self.delta),
                "max_defect": self.max_defect, "violations": self.violations,
                "middle_checked": self.middle_checked, "middle_violations": self.middle_violations,
                "samples": self.samples, "seed": self.seed}


class _Ops:
    """Distance, geodesic and nearest-point queries on either ball type."""

    def __init__(self, g):
        self.g = g
        if isinstance(g, WordBall):
            self.dist = g.distance
            self.geodesic = g.geodesic
        else:
            M = metric_of(g)
            self.dist = M.dist
            self.geodesic = M.geodesic
            self.M = M

    def nearest(self, p, path) -> int:
        """Index along ``path`` of a closest point to p (first on ties)."""
        if isinstance(self.g, WordBall):
            ds = [self.dist(p, q) for q in path]
        else:
            ds = self.M.D[p, path].tolist()
        return ds.index(min(ds))

    def to_path(self, p, path) -> int:
        if isinstance(self.g, WordBall):
            return self.g.dist_to_path(p, path)
        return int(self.M.D[p, path].min())


def _sample_points(g, rng, k):
    if isinstance(g, WordBall):
        return g.sample_vertices(rng, k)
    n = len(g)
    return [rng.randrange(n) for _ in range(k)]


def projection_defect_check(g, delta, sample_budget: int = 2000, seed: int = 0) -> ProjectionReport:
    """For sampled x, y, p, q with closest-point projections p', q' of p, q
    onto the canonical [x, y]: the largest d(p', q') - d(p, q), the number of
    samples exceeding 8 delta, and the middle clause: every m on [p', q'] more
    than 2 delta from both p' and q' lies within 2 delta of the canonical
    [p, q]."""
    delta = Fraction(delta)
    if delta < 1:
        raise PreconditionError("hyperbolicity", "the projection estimate assumes delta >= 1")
    ops = _Ops(g)
    rng = random.Random(seed)
    pts = _sample_points(g, rng, 4 * sample_budget)
    worst = None
    max_def = None
    viol = checked = mviol = 0
    for i in range(sample_budget):
        x, y, p, q = pts[4 * i: 4 * i + 4]
        if ops.dist(x, y) == 0:
            continue
        xy = ops.geodesic(x, y)
        ip, iq = ops.nearest(p, xy), ops.nearest(q, xy)
        pp, qq = xy[ip], xy[iq]
        defect = ops.dist(pp, qq) - ops.dist(p, q)
        if max_def is None or defect > max_def:
            max_def, worst = defect, (x, y, p, q)
        if defect > 8 * delta:
            viol += 1
        lo, hi = sorted((ip, iq))
        pq = None
        for j in range(lo, hi + 1):
            m = xy[j]
            # along a geodesic, distance is index difference
            if j - lo > 2 * delta and hi - j > 2 * delta:
                if pq is None:
                    pq = ops.geodesic(p, q)
                checked += 1
                if ops.to_path(m, pq) > 2 * delta:
                    mviol += 1
    return ProjectionReport(delta, 0 if max_def is None else max_def, viol, checked, mviol,
                            sample_budget, seed, worst or ())


# -- detours ------------------------------------------------------------------

def place_balls(length: int, s: int, k: int) -> list[int]:
    """Positions along a geodesic of the given length for k disjoint closed
    s-balls, every 2s+1 steps, centres more than s from both ends."""
    pos = [s + 1 + j * (2 * s + 1) for j in range(k)]
    if k < 1 or pos[-1] > length - s - 1:
        raise PreconditionError("hyperbolicity", f"cannot place {k} balls of radius {s} on a geodesic of length {length}")
    return pos


def detour_length(g: BallGraph, x, y, s: int, k: int = 1):
    """Length of a shortest x-y path avoiding k radius-s balls centred on the
    canonical [x, y], or UNBOUNDED-IN-BALL."""
    from .bigons import bounded_path
    x, y = g.vertex(x), g.vertex(y)
    geo = g.geodesic(x, y)
    centres = [geo[i] for i in place_balls(len(geo) - 1, s, k)]
    ball = set(g.bfs(centres, max_depth=s))
    path = bounded_path(g, x, y, lambda v: v not in ball, len(g))
    return UNBOUNDED_IN_BALL if path is None else len(path) - 1


def detour_statistics(g: BallGraph, x, y, s, k: int = 1) -> list[tuple[int, int | Marker]]:
    """(s, detour length) for each requested ball radius."""
    radii = [s] if isinstance(s, int) else list(s)
    return [(r, detour_length(g, x, y, r, k)) for r in radii]


def long_side_check(g, witnesses: Iterable[BigonWitness], delta) -> tuple[int, int]:
    """For verified witnesses with s >= 100 delta, one side must have length
    >= L d(x0, x).  Returns (witnesses checked, violations)."""
    delta = Fraction(delta)
    checked = bad = 0
    for w in witnesses:
        if w.params.s < 100 * delta or not verify_bigon(g, w):
            continue
        checked += 1
        need = w.params.L * g.depth_of(w.x)
        if max(w.lengths()) < need:
            bad += 1
    return checked, bad
