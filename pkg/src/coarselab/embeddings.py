"""Coarse maps between balls and the two ways of transporting bigons:
changing the basepoint, and pushing through a coarse embedding

    rho(d_X(x, y)) <= d_Y(f x, f y) <= K d_X(x, y).
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .bigons import BigonParams, BigonWitness, _base_distance, check_horizon, verify_bigon
from .errors import CoarseLabError, HorizonError, PreconditionError
from .graph_core import BallGraph
from .group_models import ProductModel
from .words import Word


@dataclass
class CoarseMap:
    source: BallGraph
    target: BallGraph
    f: dict[int, int]
    K: int = 1
    rho: dict[int, int] = field(default_factory=dict)
    name: str = ""

    def __call__(self, v: int) -> int:
        try:
            return self.f[v]
        except KeyError:
            raise PreconditionError("embeddings", f"map undefined at source vertex {v}") from None

    def rho_at(self, n: int) -> int:
        """Monotone lower control: min of the measured rho over lengths >= n."""
        vals = [r for m, r in self.rho.items() if m >= n]
        if not vals:
            raise PreconditionError("embeddings", f"rho not measured at {n}; run verify_coarse first")
        return min(vals)

    def to_json(self) -> str:
        return json.dumps({"schema": "coarselab.map/1", "source_spec": self.source.spec,
                           "target_spec": self.target.spec, "K": self.K, "name": self.name,
                           "pairs": sorted([u, v] for u, v in self.f.items())})


def _domain(g: BallGraph) -> list[int]:
    # pairs inside half the radius have certified ball distances
    return [v for v in range(len(g)) if 2 * g.depth[v] <= g.radius]


def homomorphism_map(source: BallGraph, target: BallGraph, images: dict[int, Word], K: int | None = None,
                     name: str = "") -> CoarseMap:
    """Map induced by sending each source generator (letter i > 0) to a
    target word; defined on the certified half of the source ball."""
    if source.model is None or target.model is None:
        raise PreconditionError("embeddings", "homomorphism maps need Cayley balls")
    imgs = dict(images)
    for i, w in list(imgs.items()):
        imgs[-i] = tuple(-x for x in reversed(w))
    f = {}
    for v in _domain(source):
        w = tuple(y for x in source.words[v] for y in imgs[x])
        try:
            f[v] = target.vertex(target.model.normal_form(w))
        except KeyError:
            raise HorizonError("embeddings", f"image of {source.label(v)} lies outside the target ball") from None
    if K is None:
        K = max((len(w) for w in images.values()), default=1)
    return CoarseMap(source, target, f, K, name=name)


def identity_map(g: BallGraph) -> CoarseMap:
    return CoarseMap(g, g, {v: v for v in _domain(g)}, 1, name="identity")


def factor_inclusion(source: BallGraph, target: BallGraph, factor: int = 0) -> CoarseMap:
    """Inclusion of a factor into a product ball."""
    tm = target.model
    if not isinstance(tm, ProductModel):
        raise PreconditionError("embeddings", "factor inclusion needs a product target")
    part = tm.left if factor == 0 else tm.right
    if part.spec != source.model.spec:
        raise PreconditionError("embeddings", f"source {source.spec} is not factor {factor} of {target.spec}")
    f = {}
    for v in _domain(source):
        w = source.words[v]
        tw = tm.join(w, ()) if factor == 0 else tm.join((), w)
        try:
            f[v] = target.vertex(tm.normal_form(tw))
        except KeyError:
            raise HorizonError("embeddings", "factor image outside the target ball") from None
    return CoarseMap(source, target, f, 1, name=f"factor-inclusion-{factor}")


def builtin_map(name: str, source: BallGraph, target: BallGraph | None = None) -> CoarseMap:
    if name == "identity":
        return identity_map(source)
    if name == "factor-inclusion":
        return factor_inclusion(source, target, 0)
    if name == "factor-inclusion-2":
        return factor_inclusion(source, target, 1)
    if name == "axis":
        # Z -> Z^k, n -> (n, 0, ..., 0)
        return homomorphism_map(source, target, {1: (1,)}, 1, name="axis")
    raise PreconditionError("embeddings", f"unknown builtin map {name!r}")


def load_map(text: str, source: BallGraph, target: BallGraph) -> CoarseMap:
    data = json.loads(text)
    if data.get("source_spec", source.spec) != source.spec or data.get("target_spec", target.spec) != target.spec:
        raise PreconditionError("embeddings", "map file specs do not match the balls")
    f = {int(u): int(v) for u, v in data["pairs"]}
    return CoarseMap(source, target, f, int(data.get("K", 1)), name=data.get("name", "file"))


@dataclass
class CoarseReport:
    K_measured: int
    rho: dict[int, int]
    envelope: dict[int, int]
    pairs: int
    proper_flag: bool   # False when the envelope stagnates
    seed: int | None

    def to_dict(self):
        return {"K_measured": self.K_measured, "rho": {str(k): v for k, v in sorted(self.rho.items())},
                "envelope": {str(k): v for k, v in sorted(self.envelope.items())},
                "pairs": self.pairs, "proper": self.proper_flag, "seed": self.seed}


def verify_coarse(m: CoarseMap, pair_budget: int | None = None, seed: int = 0) -> CoarseReport:
    """Measured Lipschitz constant over adjacent pairs and the lower
    envelope rho[n] = min d_Y(f x, f y) over pairs with d_X(x, y) = n.
    All pairs are used when they fit in ``pair_budget``, else a seeded
    sample.  Stores rho on the map."""
    X, Y = m.source, m.target
    dom = sorted(m.f)
    for v in dom:
        y = m.f[v]
        if 2 * Y.depth[y] > Y.radius:
            raise HorizonError("embeddings", f"image {Y.label(y)} lies outside the target's certified region",
                               required_radius=2 * Y.depth[y])
    pairs = [(u, v) for i, u in enumerate(dom) for v in dom[i + 1:]]
    sampled = pair_budget is not None and len(pairs) > pair_budget
    if sampled:
        rng = random.Random(seed)
        pairs = sorted(rng.sample(pairs, pair_budget))
    # adjacent pairs always enter the Lipschitz estimate
    adj_pairs = [(u, v) for u in dom for v in X.adj[u] if u < v and v in m.f]
    K = 0
    for u, v in adj_pairs:
        K = max(K, Y.distances_from(m.f[u])[m.f[v]])
    rho: dict[int, int] = {}
    for u, v in pairs:
        dx = X.distances_from(u)[v]
        dy = Y.distances_from(m.f[u])[m.f[v]]
        if dx not in rho or dy < rho[dx]:
            rho[dx] = dy
    env = {}
    run = math.inf
    for n in sorted(rho, reverse=True):
        run = min(run, rho[n])
        env[n] = run
    proper = True
    if env:
        top = max(env)
        half = min((n for n in env if 2 * n >= top), default=top)
        proper = top < 2 or env[top] > env[half]
    m.rho = rho
    return CoarseReport(K, rho, env, len(pairs), proper, seed if sampled else None)


def _geodesic_path(g: BallGraph, a: int, b: int) -> list[int]:
    return g.geodesic(a, b)


def rebase_bigon(g: BallGraph, w: BigonWitness, new_base) -> BigonWitness:
    """``w`` is a bigon at x based at x0' = its first vertex; the result is a
    (2L+1, s, C+d) bigon at x based at ``new_base`` (d = d(new_base, x0')),
    obtained by prefixing both paths with the canonical geodesic from
    new_base to x0'."""
    x0 = g.vertex(new_base)
    x0p = w.alpha1[0]
    p = w.params
    if not verify_bigon(g, w, base=x0p):
        raise PreconditionError("embeddings", "input witness does not verify at its own basepoint")
    d = _base_distance(g, x0, x0p)
    dx = _base_distance(g, x0, w.x)
    if dx < d:
        raise PreconditionError("embeddings", f"need d(x0, x) >= d(x0', x0): {dx} < {d}")
    out = BigonParams(2 * p.L + 1, p.s, p.C + d)
    check_horizon(g, [x0], out.slack, "basepoint")
    pre = _geodesic_path(g, x0, x0p)
    a1 = pre + list(w.alpha1[1:])
    a2 = pre + list(w.alpha2[1:])
    nw = BigonWitness(w.x, a1, a2, out, {"rebased_from": x0p, "d": d})
    if not verify_bigon(g, nw, base=x0):
        raise CoarseLabError("[embeddings] rebased witness failed verification")
    return nw


def translate_witness(g: BallGraph, w: BigonWitness, h: Word) -> BigonWitness:
    """Left-translate a witness by the group element ``h`` (Cayley balls)."""
    if g.model is None:
        raise PreconditionError("embeddings", "translation needs a Cayley ball")
    mv = lambda v: g.vertex(g.model.normal_form(tuple(h) + g.words[v]))  # noqa: E731
    try:
        return BigonWitness(mv(w.x), [mv(v) for v in w.alpha1], [mv(v) for v in w.alpha2], w.params, dict(w.notes))
    except KeyError:
        raise HorizonError("embeddings", "translated witness leaves the ball") from None


def in_a_epsilon(m: CoarseMap, epsilon, xs) -> dict[int, bool]:
    """Membership of source vertices in A_eps = {x : d_Y(y0, f x) > eps d_X(x0, x)}."""
    eps = Fraction(epsilon)
    return {x: m.target.depth[m(x)] > eps * m.source.depth[x] for x in xs}


def push_bigon(m: CoarseMap, w: BigonWitness, epsilon=Fraction(1, 2)) -> BigonWitness:
    """Image of a bigon under a coarse embedding: apply f to the path
    vertices and join consecutive images by canonical geodesics.  The result
    is a (K L / eps, rho(s) - 2K, K C + K) bigon at f(x)."""
    eps = Fraction(epsilon)
    if eps <= 0:
        raise PreconditionError("embeddings", "epsilon must be positive")
    X, Y = m.source, m.target
    p = w.params
    if not verify_bigon(X, w):
        raise PreconditionError("embeddings", "input witness does not verify in the source")
    if m(X.basepoint) != Y.basepoint:
        raise PreconditionError("embeddings", "the map must send basepoint to basepoint")
    dX = X.depth[w.x]
    fx = m(w.x)
    dY = Y.depth[fx]
    if not dY > eps * dX:
        raise PreconditionError("embeddings", f"x is not in A_eps: d_Y(y0, f x) = {dY} <= {eps} * {dX}")
    rho_s = m.rho_at(p.s)
    if rho_s <= 2 * m.K:
        raise PreconditionError("embeddings", f"rho(s) = {rho_s} <= 2K = {2 * m.K}: separation collapses")
    out = BigonParams(m.K * p.L / eps, rho_s - 2 * m.K, m.K * p.C + m.K)

    def image(path: Sequence[int]) -> list[int]:
        res = [m(path[0])]
        for u, v in zip(path, path[1:]):
            res += _geodesic_path(Y, m(u), m(v))[1:]
        return res

    # epsilon is chosen by the caller; the degrees are reported to inform that choice
    nw = BigonWitness(fx, image(w.alpha1), image(w.alpha2), out,
                      {"epsilon": str(eps), "rho_s": rho_s, "K": m.K, "in_A_epsilon": True,
                       "Delta_X": X.max_degree, "Delta_Y": Y.max_degree})
    if not verify_bigon(Y, nw):
        raise CoarseLabError("[embeddings] pushed witness failed verification")
    return nw
