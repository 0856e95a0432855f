"""Command-line front end.

Every report is JSON (or CSV with ``--csv``) carrying a versioned
``schema`` field, the tool version, the group spec, its generators and all
parameters.  Exit codes: 0 success, 1 usage or precondition errors, 2
horizon or resource errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import __version__
from .bigons import BigonParams, BigonWitness, count_bigons, find_bigon, verify_bigon, bigon_exists_exact
from .errors import CoarseLabError, HorizonError, ResourceLimitError
from .graph_core import build_ball, growth_counts, load_edge_list, load_ball_json
from .group_models import make_model

EXIT_OK, EXIT_USAGE, EXIT_HORIZON = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kw):
        kw.setdefault("allow_abbrev", False)
        super().__init__(*args, **kw)

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- config ------------------------------------------------------------------

def read_config(path: str) -> dict[str, str]:
    """``key = value`` lines; '#' starts a comment; keys use flag names."""
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key = value")
            k, v = (t.strip() for t in line.split("=", 1))
            out[k.lstrip("-").replace("-", "_")] = v
    return out


def _truthy(v) -> bool:
    return v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes", "on")


# -- parser ------------------------------------------------------------------

def build_parser(cfg: dict | None = None) -> argparse.ArgumentParser:
    cfg = cfg or {}

    def dflt(dest, value):
        return cfg.get(dest, value)

    p = _Parser(prog="coarselab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"coarselab {__version__}")
    p.add_argument("--config", help="key = value file overriding defaults")
    p.add_argument("--workers", type=int, default=dflt("workers", os.cpu_count() or 1))
    p.add_argument("--out", default=dflt("out", None), help="write the report here instead of stdout")
    p.add_argument("--csv", action="store_true", default=_truthy(dflt("csv", False)))
    sub = p.add_subparsers(dest="cmd", parser_class=_Parser)
    # the global options are also accepted after the subcommand
    glob = _Parser(add_help=False)
    glob.add_argument("--config", default=argparse.SUPPRESS)
    glob.add_argument("--workers", type=int, default=argparse.SUPPRESS)
    glob.add_argument("--out", default=argparse.SUPPRESS)
    glob.add_argument("--csv", action="store_true", default=argparse.SUPPRESS)

    def group_args(q, radius=True):
        q.add_argument("--group", default=dflt("group", None), help='group spec, e.g. "free(2)"')
        q.add_argument("--edges", default=dflt("edges", None), help="edge-list file instead of a group")
        q.add_argument("--ball", default=dflt("ball", None), help="ball JSON written by `ball build`")
        if radius:
            q.add_argument("--radius", type=int, default=dflt("radius", None))

    def bigon_args(q):
        q.add_argument("-L", type=Fraction, default=dflt("L", "2"))
        q.add_argument("-s", type=int, default=dflt("s", 1))
        q.add_argument("-C", type=int, default=dflt("C", 1))

    def div_args(q):
        q.add_argument("--delta", type=Fraction, default=dflt("delta", "1/2"))
        q.add_argument("--gamma", type=Fraction, default=dflt("gamma", "2"))

    ball = sub.add_parser("ball").add_subparsers(dest="sub", parser_class=_Parser)
    q = ball.add_parser("build", parents=[glob])
    group_args(q)
    q.add_argument("--format", choices=["json", "edges"], default=dflt("format", "json"))

    q = sub.add_parser("growth", parents=[glob])
    q.add_argument("--group", default=dflt("group", None))
    q.add_argument("--max-radius", type=int, default=dflt("max_radius", None))

    big = sub.add_parser("bigons").add_subparsers(dest="sub", parser_class=_Parser)
    q = big.add_parser("count", parents=[glob])
    group_args(q)
    bigon_args(q)
    q.add_argument("--exact", action="store_true", default=_truthy(dflt("exact", False)))
    q.add_argument("--n-max", type=int, default=dflt("n_max", None))
    q.add_argument("--k", type=int, default=dflt("k", 16))
    q.add_argument("--threshold", type=float, default=dflt("threshold", 0.05))
    q.add_argument("--none-bound", type=int, default=dflt("none_bound", None))
    q.add_argument("--node-budget", type=int, default=dflt("node_budget", 2_000_000))
    q = big.add_parser("find", parents=[glob])
    group_args(q)
    bigon_args(q)
    q.add_argument("--x", required="x" not in cfg, default=dflt("x", None), help="endpoint word")
    q.add_argument("--strategy", choices=["auto", "paths", "divergence"], default=dflt("strategy", "auto"))
    q.add_argument("--D", type=Fraction, default=dflt("D", None))
    q.add_argument("--k", type=int, default=dflt("k", 16))
    q.add_argument("--exact", action="store_true", default=_truthy(dflt("exact", False)),
                   help="decide existence with the complete search instead")
    q = big.add_parser("verify", parents=[glob])
    group_args(q)
    q.add_argument("--witness", required="witness" not in cfg, default=dflt("witness", None))

    div = sub.add_parser("divergence").add_subparsers(dest="sub", parser_class=_Parser)
    q = div.add_parser("rel", parents=[glob])
    group_args(q)
    div_args(q)
    for name in ("a", "b", "c"):
        q.add_argument(f"--{name}", required=name not in cfg, default=dflt(name, None))
    q = div.add_parser("pair", parents=[glob])
    group_args(q)
    div_args(q)
    q.add_argument("--a", required="a" not in cfg, default=dflt("a", None))
    q.add_argument("--b", required="b" not in cfg, default=dflt("b", None))
    q.add_argument("--mode", choices=["fast", "exact"], default=dflt("mode", "fast"))
    q = div.add_parser("function", parents=[glob])
    group_args(q)
    div_args(q)
    q.add_argument("--n-max", type=int, default=dflt("n_max", None))
    q.add_argument("--mode", choices=["exhaustive", "sampled"], default=dflt("mode", "exhaustive"))
    q.add_argument("--samples", type=int, default=dflt("samples", 64))
    q.add_argument("--seed", type=int, default=dflt("seed", 0))
    q = div.add_parser("construct", parents=[glob])
    group_args(q)
    div_args(q)
    q.add_argument("--x", required="x" not in cfg, default=dflt("x", None))
    q.add_argument("--D", type=Fraction, required="D" not in cfg, default=dflt("D", None))
    q.add_argument("-s", type=int, default=dflt("s", 1))

    hyp = sub.add_parser("hyperbolicity").add_subparsers(dest="sub", parser_class=_Parser)
    q = hyp.add_parser("delta", parents=[glob])
    group_args(q)
    q.add_argument("--method", choices=["thin-triangle", "four-point"], default=dflt("method", "thin-triangle"))
    q.add_argument("--mode", choices=["exhaustive", "sampled"], default=dflt("mode", "exhaustive"))
    q.add_argument("--samples", type=int, default=dflt("samples", 5000))
    q.add_argument("--seed", type=int, default=dflt("seed", 0))
    q.add_argument("--implicit", action="store_true", default=_truthy(dflt("implicit", False)))
    q = hyp.add_parser("claims", parents=[glob])
    group_args(q)
    q.add_argument("--delta", type=Fraction, default=dflt("delta", None),
                   help="hyperbolicity constant (default: measured, at least 1)")
    q.add_argument("--samples", type=int, default=dflt("samples", 2000))
    q.add_argument("--seed", type=int, default=dflt("seed", 0))
    q.add_argument("--implicit", action="store_true", default=_truthy(dflt("implicit", False)))
    q.add_argument("--detour-from", default=dflt("detour_from", None))
    q.add_argument("--detour-to", default=dflt("detour_to", None))
    q.add_argument("--detour-s", default=dflt("detour_s", "1,2,3"))
    q.add_argument("--detour-k", type=int, default=dflt("detour_k", 1))

    emb = sub.add_parser("embed").add_subparsers(dest="sub", parser_class=_Parser)
    for name in ("verify", "push"):
        q = emb.add_parser(name, parents=[glob])
        group_args(q)
        q.add_argument("--target", default=dflt("target", None), help="target group spec")
        q.add_argument("--target-radius", type=int, default=dflt("target_radius", None))
        q.add_argument("--map", default=dflt("map", "identity"), help="builtin name or map JSON file")
        if name == "verify":
            q.add_argument("--pair-budget", type=int, default=dflt("pair_budget", 20000))
            q.add_argument("--seed", type=int, default=dflt("seed", 0))
        else:
            q.add_argument("--witness", required="witness" not in cfg, default=dflt("witness", None))
            q.add_argument("--epsilon", type=Fraction, default=dflt("epsilon", "1/2"))
    q = emb.add_parser("rebase", parents=[glob])
    group_args(q)
    q.add_argument("--witness", required="witness" not in cfg, default=dflt("witness", None))
    q.add_argument("--base", required="base" not in cfg, default=dflt("base", None),
                   help="new basepoint word")

    sc = sub.add_parser("sc").add_subparsers(dest="sub", parser_class=_Parser)
    for name in ("parse", "pieces", "check", "bigons"):
        q = sc.add_parser(name, parents=[glob])
        q.add_argument("--file", default=dflt("file", None))
        q.add_argument("--text", default=dflt("text", None))
        if name == "check":
            q.add_argument("--lambda", dest="lam", type=Fraction, default=dflt("lam", "1/6"))
        if name == "bigons":
            q.add_argument("-s", type=int, default=dflt("s", 10))
            q.add_argument("--radius", type=int, default=dflt("radius", None))
    q = sc.add_parser("generate", parents=[glob])
    q.add_argument("--length", type=int, default=dflt("length", 2))
    q.add_argument("--words", default=dflt("words", None), help="comma-separated words over a, b")
    q.add_argument("--exclude-proper-powers", action="store_true",
                   default=_truthy(dflt("exclude_proper_powers", False)))
    q.add_argument("--lacunary", default=dflt("lacunary", None), help="comma-separated allowed |w|")
    q.add_argument("--max-exponent", type=int, default=dflt("max_exponent", 24))

    exp = sub.add_parser("experiment").add_subparsers(dest="sub", parser_class=_Parser)
    q = exp.add_parser("prop-lindiv", parents=[glob])
    q.add_argument("--group", default=dflt("group", None))
    q.add_argument("--radius", type=int, default=dflt("radius", 12))
    q.add_argument("-s", type=int, default=dflt("s", 1))
    q.add_argument("--count-L", type=Fraction, default=dflt("count_L", "2"))
    q.add_argument("--div-n-max", type=int, default=dflt("div_n_max", None))
    q.add_argument("--exact-n", type=int, default=dflt("exact_n", 7))
    q.add_argument("--threshold", type=float, default=dflt("threshold", 0.05))
    q.add_argument("--k", type=int, default=dflt("k", 16))
    return p


# -- helpers -------------------------------------------------------------------

def _need(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise UsageError(f"missing required option --{n.replace('_', '-')}")


def load_graph(args):
    if getattr(args, "ball", None):
        with open(args.ball) as fh:
            return load_ball_json(fh.read())
    if getattr(args, "edges", None):
        return load_edge_list(args.edges, radius=getattr(args, "radius", None))
    _need(args, "group", "radius")
    return build_ball(make_model(args.group), args.radius)


def load_implicit(args):
    from .implicit import WordBall
    _need(args, "group", "radius")
    return WordBall(make_model(args.group), args.radius)


def vertex_of(g, text: str):
    if g.model is None:
        return int(text)
    return g.vertex(g.model.parse(text))


def envelope(kind: str, g_or_spec, params: dict, result) -> dict:
    if isinstance(g_or_spec, str) or g_or_spec is None:
        spec, gens = g_or_spec or "", []
    else:
        spec, gens = g_or_spec.spec, list(g_or_spec.generators)
    return {"schema": f"coarselab.{kind}/1", "version": __version__, "spec": spec,
            "generators": gens, "params": params, "result": result}


def _params_of(args, *names) -> dict:
    out = {}
    for n in names:
        v = getattr(args, n, None)
        out[n] = str(v) if isinstance(v, Fraction) else v
    return out


def _witness_out(g, w: BigonWitness | None):
    if w is None:
        return None
    d = w.to_dict()
    if getattr(g, "model", None) is not None and hasattr(g, "words"):
        d["labels"] = {"x": g.label(w.x), "alpha1": [g.label(v) for v in w.alpha1],
                       "alpha2": [g.label(v) for v in w.alpha2]}
    return d


def _read_witness(path, g) -> BigonWitness:
    with open(path) as fh:
        data = json.load(fh)
    if "result" in data and isinstance(data["result"], dict):
        data = data["result"].get("witness", data["result"])
    return BigonWitness.from_dict(data, g)


def _presentation_from(args):
    from .presentations import load_presentation, parse_presentation
    if args.file:
        return load_presentation(args.file)
    if args.text:
        return parse_presentation(args.text)
    raise UsageError("give --file or --text")


# -- commands ------------------------------------------------------------------

def cmd_ball(args):
    g = load_graph(args)
    if args.format == "edges":
        return "\n".join(f"{i} {j}" for i, j in g.edges()) + "\n"
    return g.to_json() + "\n"


def cmd_growth(args):
    _need(args, "group", "max_radius")
    rep = growth_counts(args.group, args.max_radius)
    out = envelope("growth", make_model(args.group), _params_of(args, "max_radius"), rep.to_dict())
    if args.csv:
        lines = ["n,ball_size"] + [f"{n},{c}" for n, c in enumerate(rep.counts)]
        return "\n".join(lines) + "\n# " + json.dumps({k: v for k, v in out.items() if k != "result"} |
                                                      {"rate": rep.rate, "residual": rep.residual}, sort_keys=True) + "\n"
    return out


def _bp(args) -> BigonParams:
    return BigonParams(Fraction(args.L), args.s, args.C)


def cmd_bigons(args):
    g = load_graph(args)
    if args.sub == "count":
        rep = count_bigons(g, _bp(args), n_max=args.n_max, mode="exact" if args.exact else "heuristic",
                           k=args.k, workers=args.workers, none_bound=args.none_bound,
                           threshold=args.threshold, node_budget=args.node_budget)
        if args.csv:
            return rep.to_csv()
        return envelope("bigon-count", g, _params_of(args, "L", "s", "C", "exact", "n_max", "k", "threshold"),
                        rep.to_dict())
    if args.sub == "find":
        x = vertex_of(g, args.x)
        params = _params_of(args, "L", "s", "C", "x", "strategy", "D", "k", "exact")
        if args.exact:
            res = {"exists": bigon_exists_exact(g, x, _bp(args))}
        else:
            w = find_bigon(g, x, _bp(args), strategy=args.strategy, k=args.k, D=args.D)
            res = {"found": w is not None, "witness": _witness_out(g, w)}
        return envelope("bigon-find", g, params, res)
    if args.sub == "verify":
        w = _read_witness(args.witness, g)
        return envelope("bigon-verify", g, {"witness": args.witness}, {"valid": verify_bigon(g, w)})
    raise UsageError("bigons needs a subcommand: count, find or verify")


def cmd_divergence(args):
    from .divergence import (DivergenceParams, construct_bigon_from_divergence, divergence_function,
                             divergence_pair, divergence_rel)
    g = load_graph(args)
    dp = DivergenceParams(args.delta, args.gamma)
    base = _params_of(args, "delta", "gamma")
    if args.sub == "rel":
        rec = divergence_rel(g, vertex_of(g, args.a), vertex_of(g, args.b), vertex_of(g, args.c), dp)
        return envelope("divergence-rel", g, base | _params_of(args, "a", "b", "c"),
                        {"avoided_radius": rec.avoided_radius, "length": rec.value(), "certified": rec.exact})
    if args.sub == "pair":
        rec = divergence_pair(g, vertex_of(g, args.a), vertex_of(g, args.b), dp, args.mode)
        return envelope("divergence-pair", g, base | _params_of(args, "a", "b", "mode"),
                        {"length": rec.value(), "lower_bound": True, "certified": rec.exact,
                         "c": None if rec.c is None else g.label(rec.c), "avoided_radius": rec.avoided_radius})
    if args.sub == "function":
        n_max = args.n_max if args.n_max is not None else min(12, g.radius // 2)
        rep = divergence_function(g, n_max, dp, mode=args.mode, samples=args.samples, seed=args.seed)
        if args.csv:
            return rep.to_csv()
        return envelope("divergence-function", g, base | {"n_max": n_max, "mode": args.mode,
                                                          "samples": args.samples, "seed": args.seed},
                        rep.to_dict())
    if args.sub == "construct":
        w = construct_bigon_from_divergence(g, vertex_of(g, args.x), args.D, args.s, dp)
        return envelope("divergence-construct", g, base | _params_of(args, "x", "D", "s"),
                        {"witness": _witness_out(g, w), "valid": True})
    raise UsageError("divergence needs a subcommand: rel, pair, function or construct")


def cmd_hyperbolicity(args):
    from .hyperbolicity import detour_statistics, four_point_delta, projection_defect_check, thin_triangle_delta
    g = load_implicit(args) if args.implicit else load_graph(args)
    if args.sub == "delta":
        if args.method == "thin-triangle":
            rep = thin_triangle_delta(g, args.mode, args.samples, args.seed)
        else:
            rep = four_point_delta(g, args.mode, args.samples, args.seed)
        return envelope("delta", g, _params_of(args, "method", "mode", "samples", "seed"), rep.to_dict())
    if args.sub == "claims":
        if args.delta is None:
            mode = "sampled" if args.implicit or len(g) > 400 else "exhaustive"
            measured = thin_triangle_delta(g, mode, 5000, args.seed).delta
            delta = max(measured, Fraction(1))
        else:
            measured, delta = None, args.delta
        proj = projection_defect_check(g, delta, args.samples, args.seed)
        res = {"measured_delta": None if measured is None else str(measured), "delta": str(delta),
               "projection": proj.to_dict(), "ok": proj.ok}
        if args.detour_from and args.detour_to and not args.implicit:
            radii = [int(t) for t in str(args.detour_s).split(",")]
            stats = detour_statistics(g, vertex_of(g, args.detour_from), vertex_of(g, args.detour_to),
                                      radii, args.detour_k)
            res["detours"] = [[s, str(v) if not isinstance(v, int) else v] for s, v in stats]
        return envelope("claims", g, _params_of(args, "delta", "samples", "seed", "detour_k"), res)
    raise UsageError("hyperbolicity needs a subcommand: delta or claims")


def cmd_embed(args):
    from .embeddings import builtin_map, load_map, push_bigon, rebase_bigon, verify_coarse
    g = load_graph(args)
    if args.sub == "rebase":
        w = _read_witness(args.witness, g)
        nw = rebase_bigon(g, w, vertex_of(g, args.base))
        return envelope("embed-rebase", g, _params_of(args, "witness", "base"),
                        {"witness": _witness_out(g, nw), "valid": True})
    target = g
    if args.target:
        target = build_ball(make_model(args.target), args.target_radius or args.radius)
    if os.path.exists(args.map):
        with open(args.map) as fh:
            m = load_map(fh.read(), g, target)
    else:
        m = builtin_map(args.map, g, target)
    if args.sub == "verify":
        rep = verify_coarse(m, args.pair_budget, args.seed)
        return envelope("embed-verify", g, _params_of(args, "target", "map", "pair_budget", "seed"),
                        rep.to_dict() | {"K": m.K, "Delta_X": g.max_degree, "Delta_Y": target.max_degree})
    if args.sub == "push":
        verify_coarse(m, 20000, 0)
        w = _read_witness(args.witness, g)
        nw = push_bigon(m, w, args.epsilon)
        return envelope("embed-push", target, _params_of(args, "map", "epsilon", "witness"),
                        {"witness": _witness_out(target, nw), "valid": True})
    raise UsageError("embed needs a subcommand: verify, push or rebase")


def cmd_sc(args):
    from .presentations import check_metric_condition, generate_rw_family, pieces, reduced_words
    from .words import parse_word
    if args.sub == "generate":
        if args.words:
            words = [parse_word(t.strip(), ("a", "b")) for t in args.words.split(",")]
        else:
            words = reduced_words(args.length, 2)
        lac = [int(t) for t in args.lacunary.split(",")] if args.lacunary else None
        p = generate_rw_family(words, lac, args.exclude_proper_powers, args.max_exponent)
        notes = "".join(f"# {n}\n" for n in p.notes)
        return notes + p.to_text() + "\n"
    p = _presentation_from(args)
    if args.sub == "parse":
        return envelope("presentation", None, {"file": args.file},
                        {"generators": list(p.generators), "relators": [p.format_relator(r) for r in p.relators],
                         "text": p.to_text()})
    if args.sub == "pieces":
        rep = pieces(p)
        if args.csv:
            return rep.to_csv()
        return envelope("pieces", None, {"file": args.file},
                        {"lengths": [len(r) for r in p.relators], "max_pieces": list(rep.max_pieces),
                         "ratio": str(rep.ratio)})
    if args.sub == "check":
        res = check_metric_condition(p, args.lam)
        return envelope("metric-check", None, {"file": args.file, "lambda": str(args.lam)},
                        {"holds": res.holds, "violations": list(res.violations),
                         "ratio": str(res.report.ratio)})
    if args.sub == "bigons":
        from .smallcanc import relator_bigons
        wits, distinct = relator_bigons(p, args.s, args.radius)
        return envelope("sc-bigons", None, {"file": args.file, "s": args.s, "radius": args.radius},
                        {"witnesses": [{"relator": i, "x_length": len(w.x), "L": str(w.params.L),
                                        "s": w.params.s, "C": w.params.C, "valid": True}
                                       for i, w in enumerate(wits)],
                         "distinct_endpoints": distinct})
    raise UsageError("sc needs a subcommand")


def cmd_experiment(args):
    if args.sub != "prop-lindiv":
        raise UsageError("experiment needs a subcommand: prop-lindiv")
    _need(args, "group")
    from .experiments import prop_lindiv
    rep = prop_lindiv(args.group, args.radius, s=args.s, count_L=args.count_L, div_n_max=args.div_n_max,
                      exact_n=args.exact_n, threshold=args.threshold, k=args.k, workers=args.workers)
    return envelope("prop-lindiv", make_model(args.group),
                    _params_of(args, "radius", "s", "count_L", "div_n_max", "exact_n", "threshold", "k"), rep)


COMMANDS = {"ball": cmd_ball, "growth": cmd_growth, "bigons": cmd_bigons, "divergence": cmd_divergence,
            "hyperbolicity": cmd_hyperbolicity, "embed": cmd_embed, "sc": cmd_sc, "experiment": cmd_experiment}


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        cfg = read_config(known.config) if known.config else {}
        args = build_parser(cfg).parse_args(argv)
        if not args.cmd:
            raise UsageError("missing command")
        out = COMMANDS[args.cmd](args)
    except SystemExit as e:   # --help / --version
        return int(e.code or 0)
    except UsageError as e:
        print(f"usage error: {e}", file=stderr)
        return EXIT_USAGE
    except (HorizonError, ResourceLimitError) as e:
        print(f"error: {e}", file=stderr)
        return EXIT_HORIZON
    except (CoarseLabError, ValueError, KeyError, OSError) as e:
        print(f"error: {e}", file=stderr)
        return EXIT_USAGE
    text = out if isinstance(out, str) else json.dumps(out, sort_keys=True, indent=1) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
