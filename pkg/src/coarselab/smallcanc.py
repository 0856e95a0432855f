"""Small-cancellation presentations and the bigons carried by relator cycles.

In a C'(1/6) group every relator labels an isometrically embedded cycle of
the Cayley graph, so the two arcs from 1 to the antipode ``r[:|r|//2]``
are far apart away from their ends.  :func:`relator_to_bigon` builds that
witness and checks it against the exact word metric rather than assuming
the embedding.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .bigons import BigonParams, BigonWitness, verify_bigon
from .errors import CoarseLabError, PreconditionError
from .group_models import PresentationModel, model_from_presentation
from .implicit import WordBall
from .presentations import (DehnReducer, MetricCheck, PieceReport, Presentation,  # noqa: F401
                            check_metric_condition, dehn_reduce,
                            generate_rw_family, parse_presentation, pieces, pieces_bruteforce,
                            reduced_words, rw_relator)
from .words import Word, cyclic_reduce, free_reduce, inverse

__all__ = ["DehnReducer", "MetricCheck", "PieceReport", "Presentation", "check_metric_condition",
           "dehn_reduce", "generate_rw_family", "parse_presentation", "pieces", "pieces_bruteforce",
           "reduced_words", "rw_relator", "relator_params", "relator_to_bigon", "presentation_ball",
           "relator_bigons", "random_conjugates"]


def relator_params(n: int, s: int, C: int | None = None) -> BigonParams:
    """Parameters for the two arcs of a cycle of length n: the longer arc has
    ceil(n/2) edges and the endpoint sits at distance floor(n/2)."""
    h = n // 2
    return BigonParams(Fraction(n - h, h), s, s if C is None else C)


def relator_to_bigon(g: WordBall, r: Sequence[int], s: int, C: int | None = None) -> BigonWitness:
    """Witness at x = r[:|r|//2] formed by the two arcs of the relator cycle
    through the identity, verified at (ceil(n/2)/floor(n/2), s, C) with C
    defaulting to s."""
    if not isinstance(g, WordBall) or not isinstance(g.model, PresentationModel):
        raise PreconditionError("smallcanc", "relator_to_bigon needs an implicit ball of a presentation model")
    r = tuple(r)
    if cyclic_reduce(r) != r or not r:
        raise PreconditionError("smallcanc", "relator must be nonempty and cyclically reduced")
    if not g.model.dehn.is_identity(r):
        raise PreconditionError("smallcanc", "word is not a relation of the presentation")
    n = len(r)
    h = n // 2
    # distances in an implicit ball are global, so only the arc vertices
    # themselves (depth <= n/2) need to lie in the ball
    if g.radius < n - h:
        raise PreconditionError("smallcanc", f"ball radius {g.radius} < {n - h}: the arcs leave the ball")
    ri = inverse(r)
    alpha1 = [r[:i] for i in range(h + 1)]
    alpha2 = [ri[:j] for j in range(n - h + 1)]
    x = alpha1[-1]
    params = relator_params(n, s, C)
    w = BigonWitness(x, alpha1, alpha2, params, {"relator_length": n})
    if g.depth_of(x) != h:
        raise CoarseLabError(f"[smallcanc] antipode at distance {g.depth_of(x)} != {h}: "
                             "the relator cycle is not isometrically embedded at this scale")
    if not verify_bigon(g, w):
        raise CoarseLabError("[smallcanc] relator witness failed verification")
    return w


def presentation_ball(p: Presentation, radius: int) -> WordBall:
    return WordBall(model_from_presentation(p), radius)


def relator_bigons(p: Presentation, s: int, radius: int | None = None) -> tuple[list[BigonWitness], int]:
    """One verified witness per relator and the number of distinct
    endpoints among them (as group elements)."""
    longest = max(len(r) for r in p.relators)
    g = presentation_ball(p, longest - longest // 2 + s if radius is None else radius)
    wits = [relator_to_bigon(g, r, s) for r in p.relators]
    reps: list[Word] = []
    for w in wits:
        if not any(g.same(w.x, u) for u in reps):
            reps.append(w.x)
    return wits, len(reps)


def random_conjugates(r: Word, k: int, rng, rank: int, max_len: int = 4) -> list[Word]:
    """k words u r u^-1 with random reduced u of length <= max_len."""
    letters = [x for i in range(1, rank + 1) for x in (i, -i)]
    out = []
    for _ in range(k):
        u: list[int] = []
        for _ in range(rng.randint(0, max_len)):
            u.append(rng.choice(letters))
        u = list(free_reduce(u))
        out.append(tuple(u) + tuple(r) + inverse(u))
    return out
