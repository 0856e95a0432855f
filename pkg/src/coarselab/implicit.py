"""Balls of free and C'(1/6) small-cancellation Cayley graphs, kept implicit.

Such balls are far too large to enumerate at the radii where relator cycles
become visible, but their metric is computable from words.  With ``l`` the
shortest relator length:

* a nonempty cyclically reduced word that is trivial in the group has length
  at least ``l`` (a reduced diagram has one face, or at least two faces each
  showing more than half of its boundary);
* hence a Dehn-reduced word ``z`` with ``2|z| <= l`` is geodesic, and
* for a freely reduced ``z`` with ``|z| + r < l``, ``|z|_G <= r`` iff
  ``|z| <= r``.

Queries that fall outside both statements raise :class:`HorizonError`
instead of guessing.  Vertices are words; equal elements may carry
different words once ``radius`` exceeds ``l/2``.
"""

from __future__ import annotations

import math
import random
from typing import Iterable, Sequence

from .errors import HorizonError, PreconditionError
from .group_models import FreeModel, GroupModel, PresentationModel, make_model
from .words import Word, free_reduce, inverse, shortlex_key


class WordBall:
    exact_metric = True

    def __init__(self, model: GroupModel | str, radius: int):
        model = make_model(model)
        if isinstance(model, FreeModel):
            self.relator_length = math.inf
            self.dehn = None
        elif isinstance(model, PresentationModel):
            self.relator_length = model.min_relator_length or math.inf
            self.dehn = model.dehn
        else:
            raise PreconditionError("graph_core", "implicit balls need a free or C'(1/6) presentation model")
        self.model = model
        self.radius = radius
        self.basepoint: Word = ()
        self.spec = model.spec
        self.generators = tuple(model.generators)
        self.max_degree = 2 * model.rank

    @property
    def tree_regime(self) -> bool:
        """Every pair of ball vertices is at distance < l/2, so the ball is
        isometric to the free-group ball: a tree with unique geodesics."""
        return 4 * self.radius < self.relator_length

    def reduce(self, w: Sequence[int]) -> Word:
        w = free_reduce(w)
        if self.dehn is not None and 2 * len(w) > self.relator_length:
            w = self.dehn.reduce(w)
        return w

    def norm(self, w: Sequence[int]) -> int:
        z = self.reduce(w)
        if 2 * len(z) > self.relator_length:
            raise HorizonError("graph_core", f"word length of a Dehn-reduced word of length {len(z)} "
                               f"is not certified (shortest relator {self.relator_length})")
        return len(z)

    def distance(self, u: Word, v: Word) -> int:
        if self.tree_regime and len(u) <= self.radius and len(v) <= self.radius:
            # reduced words in the tree regime: |u| + |v| - 2 lcp(u, v)
            k = 0
            for a, b in zip(u, v):
                if a != b:
                    break
                k += 1
            return len(u) + len(v) - 2 * k
        return self.norm(inverse(u) + tuple(v))

    def within(self, u: Word, v: Word, r: int) -> bool:
        z = free_reduce(inverse(u) + tuple(v))
        if len(z) <= r:
            return True
        if len(z) + r < self.relator_length:
            return False
        return self.norm(z) <= r

    def same(self, u: Word, v: Word) -> bool:
        return self.within(u, v, 0)

    def depth_of(self, v: Word) -> int:
        return self.norm(v)

    def trusted(self, v: Word, slack: int = 0) -> bool:
        # distances here are global, not ball-restricted, so no slack is needed
        return self.depth_of(v) <= self.radius

    def is_adjacent(self, u: Word, v: Word) -> bool:
        return self.within(u, v, 1) and not self.same(u, v)

    def vertex(self, w) -> Word:
        w = free_reduce(w)
        if self.tree_regime and len(w) > self.radius:
            w = self.reduce(w)
        return w

    def label(self, v: Word) -> str:
        return self.model.format(v)

    def geodesic(self, u: Word, v: Word) -> list[Word]:
        z = self.reduce(inverse(u) + tuple(v))
        if 2 * len(z) > self.relator_length:
            raise HorizonError("graph_core", "geodesic between these vertices is not certified")
        return [free_reduce(tuple(u) + z[:i]) for i in range(len(z) + 1)]

    def members_within(self, centers: Iterable[Word], r: int, candidates: Iterable[Word]) -> set:
        centers = list(centers)
        return {v for v in candidates if any(self.within(c, v, r) for c in centers)}

    def separated(self, A: Sequence[Word], B: Sequence[Word], s: int) -> bool:
        return not any(self.within(a, b, s) for a in A for b in B)

    def dist_to_path(self, p: Word, path: Sequence[Word]) -> int:
        if self.tree_regime and len(path) > 1:
            # tree: distance to a geodesic is a Gromov product
            a, b = path[0], path[-1]
            return (self.distance(p, a) + self.distance(p, b) - self.distance(a, b)) // 2
        return min(self.distance(p, q) for q in path)

    def sample_vertices(self, rng: random.Random, k: int) -> list[Word]:
        """Uniform samples from the ball; only defined in the tree regime,
        where the ball is the set of reduced words of length <= radius."""
        if not self.tree_regime:
            raise HorizonError("graph_core", "uniform sampling needs radius < l/4")
        m = self.model.rank
        sizes = [1] + [2 * m * (2 * m - 1) ** (n - 1) for n in range(1, self.radius + 1)]
        letters = [x for g in range(1, m + 1) for x in (g, -g)]
        out = []
        for _ in range(k):
            n = rng.choices(range(self.radius + 1), weights=sizes)[0]
            w: list[int] = []
            while len(w) < n:
                x = rng.choice(letters)
                if not w or w[-1] != -x:
                    w.append(x)
            out.append(tuple(w))
        return out

    def ordering_key(self, v: Word):
        return shortlex_key(v)
