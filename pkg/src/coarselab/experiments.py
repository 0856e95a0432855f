"""End-to-end pipeline for linearly divergent groups: growth, divergence,
bigon constructions from the fitted divergence, bigon counting and an exact
cross-check of the counts near the basepoint."""

from __future__ import annotations

import math
from fractions import Fraction

from .bigons import BigonParams, count_bigons
from .divergence import DivergenceParams, construct_bigon_from_divergence, divergence_function, prop_constant
from .errors import CoarseLabError, HorizonError, PreconditionError
from .graph_core import build_ball, loglinear_fit, sphere_sizes, top_half
from .group_models import make_model


def _construct_attempts(g, D: int, s: int, per_depth: int = 1) -> list[dict]:
    """Try the divergence construction at the first vertices of each sphere."""
    firsts: dict[int, list[int]] = {}
    for v in range(len(g)):
        lst = firsts.setdefault(g.depth[v], [])
        if len(lst) < per_depth:
            lst.append(v)
    out = []
    for d in sorted(firsts):
        if d == 0:
            continue
        for x in firsts[d]:
            rec = {"x": g.label(x), "d": d}
            try:
                w = construct_bigon_from_divergence(g, x, D, s)
                rec.update(status="verified", branch=w.notes.get("branch"), lengths=list(w.lengths()))
            except HorizonError as e:
                rec.update(status="horizon", required_radius=e.required_radius)
            except (PreconditionError, CoarseLabError) as e:
                rec.update(status="failed", reason=str(e))
            out.append(rec)
    return out


def prop_lindiv(spec: str, radius: int, s: int = 1, count_L=Fraction(2), div_n_max: int | None = None,
                exact_n: int = 7, threshold: float = 0.05, k: int = 16, workers: int = 1) -> dict:
    """Run the pipeline and return a JSON-ready dict.

    The construction certifies (20 D, s, 2 s)-bigons.  Counting uses the
    smaller multiplier ``count_L``: a (count_L, s, 2s)-bigon is also a
    (20 D, s, 2 s)-bigon whenever count_L <= 20 D, so the counts are lower
    bounds for the larger parameters, and the smaller multiplier keeps the
    trusted horizon inside a ball that can be built.
    """
    model = make_model(spec)
    g = build_ball(model, radius)
    sph = sphere_sizes(g)
    cum = [sum(sph[:n + 1]) for n in range(len(sph))]
    ns = top_half(1, radius)
    g_slope, _, _ = loglinear_fit(ns, [cum[n] for n in ns])

    n_div = div_n_max if div_n_max is not None else max(2, min(6, radius // 2))
    div = divergence_function(g, n_div, DivergenceParams())
    D = prop_constant(div.D) if div.D is not None else None

    attempts = _construct_attempts(g, D, s) if D is not None else []

    count_L = Fraction(count_L)
    cp = BigonParams(count_L, s, 2 * s)
    heur = count_bigons(g, cp, mode="heuristic", k=k, workers=workers, threshold=threshold)
    m = min(exact_n, heur.n_max)
    exact = count_bigons(g, cp, n_max=m, mode="exact", workers=workers, threshold=threshold)
    agree = heur.counts[:m + 1] == exact.counts[:m + 1]

    prop = BigonParams(Fraction(20 * D) if D else Fraction(0), s, 2 * s) if D else None
    notes = []
    if prop is not None and count_L <= prop.L:
        notes.append(f"counts at multiplier {count_L} bound the counts at {prop.L} from below")
    return {
        "growth": {"counts": cum, "rate": g_slope, "base": math.exp(g_slope)},
        "divergence": div.to_dict(),
        "D": D,
        "prop_params": None if prop is None else prop.to_dict(),
        "constructions": attempts,
        "count_params": cp.to_dict(),
        "counts": heur.to_dict(),
        "exact_check": {"n_max": m, "counts": exact.counts, "agree": agree},
        "verdict": heur.verdict,
        "base": heur.base,
        "notes": notes,
    }
