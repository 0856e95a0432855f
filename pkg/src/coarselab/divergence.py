"""Divergence of a graph and the construction of bigons from a linear
divergence bound.

``Div(a, b | c)`` is the length of a shortest a-b path avoiding the ball of
radius ``r = max(0, ceil(delta * d(c, {a, b}) - gamma))`` around ``c``;
``Div(a, b)`` is its supremum over ``c`` and ``Div_X(n)`` the maximum of
``Div(a, b)`` over pairs with ``d(a, b) <= n``.  The radius is clamped at 0,
so the forbidden set always contains ``c`` itself.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .bigons import BigonParams, BigonWitness, bounded_path, trusted_set, verify_bigon, _to_basepoint
from .errors import CoarseLabError, HorizonError, PreconditionError
from .graph_core import UNBOUNDED_IN_BALL, BallGraph, Marker, top_half


@dataclass(frozen=True)
class DivergenceParams:
    delta: Fraction = Fraction(1, 2)
    gamma: Fraction = Fraction(2)

    def __post_init__(self):
        object.__setattr__(self, "delta", Fraction(self.delta))
        object.__setattr__(self, "gamma", Fraction(self.gamma))
        if not (0 < self.delta <= Fraction(1, 2)):
            raise PreconditionError("divergence", "delta must lie in (0, 1/2]")
        if self.gamma < 2:
            raise PreconditionError("divergence", "gamma must be >= 2")

    def radius(self, dist: int) -> int:
        return max(0, math.ceil(self.delta * dist - self.gamma))

    def to_dict(self):
        return {"delta": str(self.delta), "gamma": str(self.gamma)}


@dataclass
class DivergenceRecord:
    a: int
    b: int
    c: int | None
    avoided_radius: int
    length: int | Marker
    exact: bool = True          # ball truncation provably did not matter
    path: list | None = field(default=None, repr=False)

    @property
    def unbounded(self) -> bool:
        return self.length is UNBOUNDED_IN_BALL

    def value(self):
        return str(self.length) if self.unbounded else self.length


def _path_certified(g: BallGraph, a: int, b: int, length: int) -> bool:
    # every vertex of an a-b path of this length has depth at most
    # (depth a + depth b + length) / 2, so shorter paths cannot leave the ball
    return g.depth[a] + g.depth[b] + length <= 2 * g.radius


def avoiding_path(g: BallGraph, a: int, b: int, c: int, r: int, allowed=None) -> list[int] | None:
    ball = set(g.bfs([c], max_depth=r))
    if allowed is None:
        ok = lambda v: v not in ball  # noqa: E731
    else:
        ok = lambda v: v in allowed and v not in ball  # noqa: E731
    return bounded_path(g, a, b, ok, len(g))


def divergence_rel(g: BallGraph, a, b, c, params: DivergenceParams | None = None,
                   keep_path: bool = False) -> DivergenceRecord:
    params = params or DivergenceParams()
    a, b, c = g.vertex(a), g.vertex(b), g.vertex(c)
    if c in (a, b):
        raise PreconditionError("divergence", "the centre c must differ from a and b")
    dc = g.distances_from(c)
    if dc[a] < 0 or dc[b] < 0:
        raise PreconditionError("divergence", "a, b and c must be connected in the ball")
    return _relative(g, a, b, c, params.radius(min(dc[a], dc[b])), keep_path)


def _relative(g: BallGraph, a: int, b: int, c: int, r: int, keep_path: bool = False) -> DivergenceRecord:
    path = avoiding_path(g, a, b, c, r)
    if path is None:
        return DivergenceRecord(a, b, c, r, UNBOUNDED_IN_BALL, exact=False)
    n = len(path) - 1
    exact = _path_certified(g, a, b, n) and g.depth[c] + r <= g.radius
    return DivergenceRecord(a, b, c, r, n, exact, path if keep_path else None)


def divergence_pair(g: BallGraph, a, b, params: DivergenceParams | None = None,
                    candidate_mode: str = "fast") -> DivergenceRecord:
    """Sup of divergence_rel over centres c.  Fast mode only tries centres
    whose forbidden ball meets the canonical a-b geodesic; any other centre
    leaves that geodesic available and yields d(a, b)."""
    params = params or DivergenceParams()
    a, b = g.vertex(a), g.vertex(b)
    if a == b:
        raise PreconditionError("divergence", "a and b must differ")
    da, db = g.distances_from(a), g.distances_from(b)
    if da[b] < 0:
        raise PreconditionError("divergence", "a and b are disconnected in the ball")
    base = DivergenceRecord(a, b, None, 0, da[b], _path_certified(g, a, b, da[b]))
    if candidate_mode == "exact":
        cands = [c for c in range(len(g)) if c not in (a, b) and da[c] >= 0]
    elif candidate_mode == "fast":
        geo = g.geodesic(a, b)
        near = g.bfs(geo)
        cands = [c for c in sorted(near) if c not in (a, b)
                 and near[c] <= params.radius(min(da[c], db[c]))]
    else:
        raise PreconditionError("divergence", f"unknown candidate mode {candidate_mode!r}")
    best = base
    for c in cands:
        rec = _relative(g, a, b, c, params.radius(min(da[c], db[c])))
        if rec.unbounded:
            return rec
        if rec.length > best.length:
            best = rec
        elif not rec.exact and rec.length == best.length:
            best.exact = False
    return best


@dataclass
class DivergenceReport:
    values: list                 # index n -> Div_X(n) (int or marker); index 0 unused
    records: list
    mode: str
    params: DivergenceParams
    seed: int | None
    D: float | None
    relative_residual: float | None
    fit_range: list[int]
    exact: bool
    spec: str = ""
    generators: tuple = ()
    notes: list = field(default_factory=list)

    @property
    def n_max(self) -> int:
        return len(self.values) - 1

    def unbounded_ns(self) -> list[int]:
        return [n for n in range(1, len(self.values)) if self.values[n] is UNBOUNDED_IN_BALL]

    def to_dict(self):
        return {"schema": "coarselab.divergence/1", "spec": self.spec,
                "generators": list(self.generators), "params": self.params.to_dict(),
                "mode": self.mode, "seed": self.seed,
                "values": {str(n): (str(v) if isinstance(v, Marker) else v)
                           for n, v in enumerate(self.values) if n > 0},
                "D": self.D, "relative_residual": self.relative_residual,
                "fit_range": self.fit_range, "certified": self.exact, "notes": self.notes}

    def to_csv(self) -> str:
        lines = ["n,DivX_n,status"]
        for n in range(1, len(self.values)):
            v = self.values[n]
            if isinstance(v, Marker):
                lines.append(f"{n},,{v}")
            else:
                lines.append(f"{n},{v},{'exact' if self.records[n].exact else 'lower-bound'}")
        footer = {k: v for k, v in self.to_dict().items() if k != "values"}
        lines.append("# " + json.dumps(footer, sort_keys=True))
        return "\n".join(lines) + "\n"


def linear_fit_through_origin(ns: Sequence[int], ys: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope of y = D n and the relative residual |y - Dn| / |y|."""
    x = np.asarray(ns, dtype=float)
    y = np.asarray(ys, dtype=float)
    D = float(x @ y / (x @ x))
    rel = float(np.linalg.norm(y - D * x) / np.linalg.norm(y))
    return D, rel


def divergence_function(g: BallGraph, n_max: int, params: DivergenceParams | None = None,
                        mode: str = "exhaustive", samples: int = 64, seed: int = 0,
                        candidate_mode: str = "fast") -> DivergenceReport:
    """Div_X(n) for 1 <= n <= n_max.  On Cayley balls the first point is
    pinned at the identity (the graph is vertex-transitive and the identity
    has the most room around it); on other graphs all pairs are scanned."""
    params = params or DivergenceParams()
    if n_max < 1:
        raise PreconditionError("divergence", "n_max must be >= 1")
    if n_max > g.radius:
        raise HorizonError("divergence", f"n_max = {n_max} exceeds the ball radius", required_radius=n_max)
    if mode not in ("exhaustive", "sampled"):
        raise PreconditionError("divergence", f"unknown mode {mode!r}")
    cayley = g.model is not None
    notes = []
    if cayley:
        notes.append("first point fixed at the identity by translation invariance")
        sources = [g.basepoint]
    else:
        sources = list(range(len(g)))
    rng = random.Random(seed)
    # pairs at each exact distance
    by_dist: dict[int, list[tuple[int, int]]] = {}
    for a in sources:
        da = g.distances_from(a)
        for b, dab in enumerate(da):
            if 1 <= dab <= n_max and (cayley or a < b):
                by_dist.setdefault(dab, []).append((a, b))
    values: list = [None]
    records: list = [None]
    best: DivergenceRecord | None = None
    for n in range(1, n_max + 1):
        pairs = by_dist.get(n, [])
        if mode == "sampled" and len(pairs) > samples:
            pairs = sorted(rng.sample(pairs, samples))
        if best is None or not best.unbounded:
            for a, b in pairs:
                rec = divergence_pair(g, a, b, params, candidate_mode)
                if best is None or rec.unbounded or rec.length > best.length:
                    best = rec
                if rec.unbounded:
                    break
        values.append(best.length if best is not None else 0)
        records.append(best)
    ns = top_half(1, n_max)
    D = rel = None
    if all(not isinstance(values[n], Marker) for n in ns):
        D, rel = linear_fit_through_origin(ns, [values[n] for n in ns])
    exact = all(r is not None and r.exact for r in records[1:])
    return DivergenceReport(values, records, mode, params, seed if mode == "sampled" else None,
                            D, rel, [ns[0], ns[-1]], exact, g.spec, tuple(g.generators), notes)


def prop_constant(D_fit: float) -> int:
    """Integer D with Div_X(20 m) <= D m predicted by a fit Div_X(n) ~ D_fit n."""
    return max(1, math.ceil(20 * D_fit - 1e-9))


# -- rays ------------------------------------------------------------------

def _translate(g: BallGraph, p: int, w) -> int | None:
    if p == g.basepoint:
        try:
            return g.vertex(w)
        except KeyError:
            return None
    if g.model is None:
        return None
    try:
        return g.vertex(g.model.normal_form(g.words[p] + tuple(w)))
    except KeyError:
        return None


def ray_words(g: BallGraph, length: int, limit: int = 64) -> list[tuple]:
    """Geodesic words of the given length read from the identity: powers of
    each generator that stay geodesic, then canonical geodesics to sphere
    vertices (in index order)."""
    out = []
    if g.model is not None:
        for x in g.model.letter_order:
            w = (x,) * length
            vs = [_translate(g, g.basepoint, w[:i]) for i in range(length + 1)]
            if all(v is not None for v in vs) and all(g.depth[v] == i for i, v in enumerate(vs)):
                out.append(w)
    seen = set(out)
    for v in range(len(g)):
        if len(out) >= limit:
            break
        if g.depth[v] == length:
            path = _to_basepoint(g, v)
            w = _path_word(g, path)
            if w is not None and w not in seen:
                seen.add(w)
                out.append(w)
    return out


def _path_word(g: BallGraph, path: Sequence[int]):
    if not hasattr(g, "moves"):
        return None
    w = []
    for u, v in zip(path, path[1:]):
        x = next((x for x, t in g.moves[u].items() if t == v), None)
        if x is None:
            return None
        w.append(x)
    return tuple(w)


def _rays_from(g: BallGraph, p: int, length: int, limit: int = 64) -> list[list[int]]:
    if g.model is None:
        dp = g.distances_from(p)
        rays = []
        for v in range(len(g)):
            if dp[v] == length:
                rays.append(g.geodesic(p, v))
                if len(rays) >= limit:
                    break
        return rays
    rays = []
    for w in ray_words(g, length, limit):
        vs = [_translate(g, p, w[:i]) for i in range(length + 1)]
        if any(v is None for v in vs):
            continue
        rays.append(vs)
    return rays


def ray_is_separated(g: BallGraph, ray: Sequence[int], geod: Sequence[int], s: int) -> bool:
    """Every w on the ray has d(w, p) <= 2s or d(w, geod) > s (p = ray[0])."""
    near = g.bfs(list(geod), max_depth=s)
    dp = g.bfs([ray[0]], max_depth=2 * s)
    return all(w in dp or w not in near for w in ray)


def _ray_is_geodesic(g: BallGraph, ray: Sequence[int]) -> bool:
    d = g.bfs([ray[0]], max_depth=len(ray))
    return all(d.get(v) == i for i, v in enumerate(ray))


def separated_rays(g: BallGraph, p, geod: Sequence[int], s: int, length: int | None = None,
                   limit: int = 64) -> list[list[int]]:
    p = g.vertex(p)
    if geod and p not in (geod[0], geod[-1]):
        raise PreconditionError("divergence", "p must be an endpoint of the geodesic")
    if length is None:
        length = g.radius - s - g.depth[p]
    if length < 0 or g.depth[p] + length + s > g.radius:
        raise HorizonError("divergence", f"a ray of length {length} from depth {g.depth[p]} "
                           "leaves the trusted region", required_radius=g.depth[p] + length + s)
    out = []
    for ray in _rays_from(g, p, length, limit):
        if all(g.depth[v] + s <= g.radius for v in ray) and _ray_is_geodesic(g, ray) \
                and ray_is_separated(g, ray, geod, s):
            out.append(ray)
    return out


def find_separated_ray(g: BallGraph, p, geod: Sequence[int], s: int, length: int | None = None) -> list[int]:
    """A geodesic segment from p (default: to the trusted boundary) each of
    whose vertices w has d(w, p) <= 2s or d(w, geod) > s."""
    rays = separated_rays(g, p, geod, s, length)
    if not rays:
        raise CoarseLabError(f"[divergence] no separated ray of the requested length found from {g.label(g.vertex(p))}")
    return rays[0]


# -- bigons from divergence ---------------------------------------------------

def construct_bigon_from_divergence(g: BallGraph, x, D, s: int,
                                    params: DivergenceParams | None = None) -> BigonWitness:
    """A (20D, s, 2s)-bigon at x.  alpha1 is the canonical geodesic; alpha2
    runs out along a separated ray to depth 10 d, around the identity along a
    path avoiding the forbidden ball, and back to x along a separated ray
    from x of length 9 d.  The divergence bound (avoiding path of length
    <= D d), the containment N_s([1, x]) in the forbidden ball and the length
    budget are all checked on the way."""
    params = params or DivergenceParams()
    D = Fraction(D)
    if D < 1 or s < 1:
        raise PreconditionError("divergence", "need D >= 1 and s >= 1")
    x = g.vertex(x)
    d = g.depth[x]
    bp = BigonParams(20 * D, s, 2 * s)
    alpha1 = _to_basepoint(g, x)
    if d <= 4 * s:
        w = BigonWitness(x, alpha1, list(alpha1), bp, {"branch": "short", "d": d})
        if not verify_bigon(g, w):
            raise CoarseLabError("[divergence] doubled geodesic failed verification")
        return w
    slack = bp.slack
    need = 10 * d + slack
    if g.radius < need:
        raise HorizonError("divergence", f"construction reaches depth {10 * d}", required_radius=need)
    betas = separated_rays(g, g.basepoint, alpha1, s, 10 * d)
    primes = separated_rays(g, x, alpha1, s, 9 * d)
    if not betas or not primes:
        raise CoarseLabError("[divergence] no separated ray found within the horizon")
    T = trusted_set(g, slack)
    geo_ball = d + s  # N_s([1, x]) lies in this ball around the identity
    best = None
    for beta in betas:
        y = beta[-1]
        for bprime in primes:
            y2 = bprime[-1]
            if y2 == y:
                continue
            dy2 = g.depth[y2]
            r = params.radius(min(g.depth[y], dy2))
            if geo_ball > r:
                continue
            path = avoiding_path(g, y, y2, g.basepoint, r, allowed=T)
            if path is None:
                continue
            if best is None or len(path) < len(best[0]):
                best = (path, beta, bprime, r)
    if best is None:
        raise HorizonError("divergence", "no avoiding path found inside the trusted region",
                           required_radius=11 * d + slack)
    path, beta, bprime, r = best
    mid = len(path) - 1
    if mid > D * d:
        raise PreconditionError("divergence", f"divergence bound fails: avoiding path of length {mid} > D d = {D * d}")
    alpha2 = list(beta) + path[1:] + list(reversed(bprime))[1:]
    total = len(alpha2) - 1
    audit = {"branch": "rays", "d": d, "out": 10 * d, "back": 9 * d, "around": mid,
             "total": total, "budget": str(20 * D * d), "forbidden_radius": r,
             "containment": f"{d} + {s} <= {r}"}
    if not (total <= 10 * d + 9 * d + D * d <= 20 * D * d):
        raise CoarseLabError(f"[divergence] length audit failed: {audit}")
    w = BigonWitness(x, alpha1, alpha2, bp, audit)
    if not verify_bigon(g, w):
        raise CoarseLabError("[divergence] constructed witness failed verification")
    return w
