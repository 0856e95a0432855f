"""Finite presentations: parsing, pieces, the C'(lambda) test and Dehn's algorithm.

Presentation text looks like ``<a, b | a b a^-1 b^-1>``.  Relators are
juxtaposed generators with optional integer powers, separated by commas;
``#`` starts a comment that runs to the end of the line.
"""

from __future__ import annotations

import functools
import itertools
import re
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import CoarseLabError, PreconditionError
from .words import (
    EMPTY,
    Word,
    cyclic_reduce,
    default_names,
    format_word,
    free_reduce,
    inverse,
    is_proper_power,
    parse_word,
)


class PresentationSyntaxError(CoarseLabError, ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class DuplicateRelatorError(CoarseLabError, ValueError):
    pass


def cyclic_key(w: Word) -> Word:
    """Least rotation of ``w`` or ``w^-1``; equal keys mean the relators are
    cyclic conjugates of each other or of each other's inverse."""
    inv = inverse(w)
    return min(min(w[i:] + w[:i] for i in range(len(w))),
               min(inv[i:] + inv[:i] for i in range(len(inv))))


@dataclass(frozen=True)
class Presentation:
    generators: tuple[str, ...]
    relators: tuple[Word, ...]
    notes: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        seen: dict[Word, int] = {}
        for i, r in enumerate(self.relators):
            if not r:
                raise PreconditionError("presentations", "relators must be nonempty")
            if cyclic_reduce(r) != r:
                raise PreconditionError("presentations", f"relator {i} is not cyclically reduced")
            if max(abs(x) for x in r) > len(self.generators):
                raise PreconditionError("presentations", f"relator {i} uses an undeclared generator")
            key = cyclic_key(r)
            if key in seen:
                raise DuplicateRelatorError(
                    f"relator {i} is a cyclic conjugate or inverse of relator {seen[key]}")
            seen[key] = i

    @property
    def rank(self) -> int:
        return len(self.generators)

    def format_relator(self, r: Word) -> str:
        return format_word(r, self.generators)

    def to_text(self) -> str:
        rels = ", ".join(self.format_relator(r) for r in self.relators)
        return f"<{', '.join(self.generators)} | {rels}>"

    @property
    def min_relator_length(self) -> int | None:
        return min((len(r) for r in self.relators), default=None)


_NAME = re.compile(r"[A-Za-z][A-Za-z0-9_]*")


def _strip_comments(text: str) -> str:
    # keep offsets stable so error positions refer to the original text
    return re.sub(r"#[^\n]*", lambda m: " " * len(m.group(0)), text)


def parse_presentation(text: str, strict: bool = False) -> Presentation:
    """Parse ``<gens | relators>``.

    Relators that are not freely and cyclically reduced are reduced with a
    warning, or rejected when ``strict`` is set.
    """
    src = _strip_comments(text)
    lt = src.find("<")
    if lt < 0 or src[:lt].strip():
        raise PresentationSyntaxError("expected '<'", max(lt, 0))
    bar = src.find("|", lt)
    if bar < 0:
        raise PresentationSyntaxError("expected '|'", len(src))
    gt = src.rfind(">")
    if gt < bar:
        raise PresentationSyntaxError("expected '>'", len(src))
    if src[gt + 1:].strip():
        raise PresentationSyntaxError("trailing text after '>'", gt + 1)

    gens: list[str] = []
    pos = lt + 1
    for chunk in src[lt + 1:bar].split(","):
        name = chunk.strip()
        start = pos + (len(chunk) - len(chunk.lstrip()))
        if not _NAME.fullmatch(name):
            raise PresentationSyntaxError(f"bad generator name {name!r}", start)
        if name in gens:
            raise PresentationSyntaxError(f"generator {name!r} declared twice", start)
        gens.append(name)
        pos += len(chunk) + 1

    relators: list[Word] = []
    body = src[bar + 1:gt]
    pos = bar + 1
    if body.strip():
        for chunk in body.split(","):
            start = pos + (len(chunk) - len(chunk.lstrip()))
            try:
                raw = parse_word(chunk, gens)
            except ValueError as exc:
                raise PresentationSyntaxError(str(exc), start) from None
            red = cyclic_reduce(raw)
            if not red:
                raise PresentationSyntaxError("relator reduces to the empty word", start)
            if red != raw:
                if strict:
                    raise PresentationSyntaxError("relator is not cyclically reduced", start)
                warnings.warn(f"relator {chunk.strip()!r} reduced to "
                              f"{format_word(red, gens)!r}", stacklevel=2)
            relators.append(red)
            pos += len(chunk) + 1
    return Presentation(tuple(gens), tuple(relators))


def load_presentation(path: str, strict: bool = False) -> Presentation:
    with open(path, encoding="utf-8") as fh:
        return parse_presentation(fh.read(), strict=strict)


# -- pieces ---------------------------------------------------------------

def symmetrized(p: Presentation) -> dict[Word, set[int]]:
    """All cyclic conjugates of relators and inverses, mapped to the relator
    indices they come from."""
    out: dict[Word, set[int]] = {}
    for i, r in enumerate(p.relators):
        for w in (r, inverse(r)):
            for k in range(len(w)):
                out.setdefault(w[k:] + w[:k], set()).add(i)
    return out


def _lcp(u: Word, v: Word) -> int:
    n = min(len(u), len(v))
    k = 0
    while k < n and u[k] == v[k]:
        k += 1
    return k


@dataclass(frozen=True)
class PieceReport:
    lengths: tuple[int, ...]
    max_pieces: tuple[int, ...]

    @property
    def ratios(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(m, n) for m, n in zip(self.max_pieces, self.lengths))

    @property
    def ratio(self) -> Fraction:
        return max(self.ratios, default=Fraction(0))

    def to_csv(self) -> str:
        rows = ["relator_index,length,max_piece,ratio"]
        for i, (n, m) in enumerate(zip(self.lengths, self.max_pieces)):
            rows.append(f"{i},{n},{m},{Fraction(m, n)}")
        return "\n".join(rows) + "\n"


def pieces(p: Presentation) -> PieceReport:
    """Longest piece of every relator.

    A piece is a common prefix of two distinct words of the symmetrized
    relator set.  Sorting the symmetrized set puts each word next to the
    words it shares its longest prefixes with.
    """
    sym = symmetrized(p)
    words = sorted(sym)
    best = [0] * len(p.relators)
    for u, v in zip(words, words[1:]):
        k = _lcp(u, v)
        if k == 0:
            continue
        for i in sym[u] | sym[v]:
            best[i] = max(best[i], k)
    return PieceReport(tuple(len(r) for r in p.relators), tuple(best))


def pieces_bruteforce(p: Presentation) -> PieceReport:
    """Quadratic reference for :func:`pieces`; every pair is compared."""
    sym = symmetrized(p)
    words = list(sym)
    best = [0] * len(p.relators)
    for u, v in itertools.combinations(words, 2):
        k = _lcp(u, v)
        for i in sym[u] | sym[v]:
            best[i] = max(best[i], k)
    return PieceReport(tuple(len(r) for r in p.relators), tuple(best))


@dataclass(frozen=True)
class MetricCheck:
    holds: bool
    lam: Fraction
    report: PieceReport
    violations: tuple[int, ...]


def check_metric_condition(p: Presentation, lam=Fraction(1, 6)) -> MetricCheck:
    """C'(lam): every piece of every relator r is strictly shorter than lam*|r|."""
    lam = Fraction(lam)
    rep = pieces(p)
    bad = tuple(i for i, (m, n) in enumerate(zip(rep.max_pieces, rep.lengths))
                if not Fraction(m) < lam * n)
    return MetricCheck(not bad, lam, rep, bad)


# -- Dehn's algorithm -----------------------------------------------------

class DehnReducer:
    """Dehn's algorithm for a C'(1/6) presentation.

    ``table[m]`` maps every length-``m`` prefix of a symmetrized relator of
    length ``2m - 1`` or ``2m - 2`` to those relators, i.e. the shortest
    prefixes that are more than half of the relator.
    """

    def __init__(self, p: Presentation, check: bool = True):
        if check:
            res = check_metric_condition(p, Fraction(1, 6))
            if not res.holds:
                raise PreconditionError(
                    "smallcanc", f"presentation is not C'(1/6) (relators {list(res.violations)})")
        self.presentation = p
        self.sym = sorted(symmetrized(p))
        self.table: dict[int, dict[Word, list[Word]]] = {}
        self.half: dict[Word, list[Word]] = {}
        for rho in self.sym:
            m = len(rho) // 2 + 1
            self.table.setdefault(m, {}).setdefault(rho[:m], []).append(rho)
            if len(rho) % 2 == 0:
                self.half.setdefault(rho[:len(rho) // 2], []).append(rho)
        self.min_length = p.min_relator_length or 0

    def find(self, w: Word, start: int = 0):
        """First (position, length, relator) where more than half a relator
        occurs as a subword of ``w``; the match is extended maximally."""
        for i in range(start, len(w)):
            for m, tab in self.table.items():
                rhos = tab.get(w[i:i + m])
                if not rhos:
                    continue
                best = None
                for rho in rhos:
                    k = m
                    while k < len(rho) and i + k < len(w) and w[i + k] == rho[k]:
                        k += 1
                    if best is None or k > best[1]:
                        best = (i, k, rho)
                return best
        return None

    def reduce(self, w: Sequence[int]) -> Word:
        w = free_reduce(w)
        start = 0
        while True:
            hit = self.find(w, start)
            if hit is None:
                return w
            i, k, rho = hit
            repl = inverse(rho[k:])
            w = free_reduce(w[:i] + repl + w[i + k:])
            start = max(0, i - len(rho))

    def is_identity(self, w: Sequence[int]) -> bool:
        return not self.reduce(w)


@functools.lru_cache(maxsize=16)
def _reducer(p: Presentation) -> DehnReducer:
    return DehnReducer(p)


def dehn_reduce(p: Presentation, w: Sequence[int]) -> Word:
    return _reducer(p).reduce(w)


# -- the r_w family -------------------------------------------------------

def rw_relator(w: Word, max_exponent: int = 24, c: int = 3) -> Word:
    """``c w c^2 w ... c^K w`` with K = max_exponent; ``c`` is a letter code."""
    out: list[int] = []
    for k in range(1, max_exponent + 1):
        out.extend([c] * k)
        out.extend(w)
    return tuple(out)


def reduced_words(length: int, rank: int = 2) -> list[Word]:
    """All freely reduced words of the given length over ``rank`` generators,
    in lexicographic order of letters a < A < b < B < ..."""
    alphabet = []
    for g in range(1, rank + 1):
        alphabet += [g, -g]
    out: list[Word] = [EMPTY]
    for _ in range(length):
        out = [w + (x,) for w in out for x in alphabet if not (w and w[-1] == -x)]
    return out


def generate_rw_family(words: Iterable[Word], lacunary_indices: Iterable[int] | None = None,
                       exclude_proper_powers: bool = False,
                       max_exponent: int = 24) -> Presentation:
    """Presentation on {a, b, c} with one relator r_w per word w over {a, b}."""
    keep: list[Word] = []
    notes: list[str] = []
    allowed = None if lacunary_indices is None else set(lacunary_indices)
    for w in words:
        w = tuple(w)
        if not w:
            raise PreconditionError("smallcanc", "r_w needs a nontrivial word w")
        if any(abs(x) > 2 for x in w):
            raise PreconditionError("smallcanc", "w must be a word over a, b only")
        if free_reduce(w) != w:
            raise PreconditionError("smallcanc", "w must be freely reduced")
        if allowed is not None and len(w) not in allowed:
            notes.append(f"skipped {format_word(w, 'ab')}: length not in index set")
            continue
        if exclude_proper_powers and is_proper_power(w):
            notes.append(f"skipped {format_word(w, 'ab')}: proper power")
            continue
        keep.append(w)
    rels = []
    K = max_exponent
    for w in keep:
        r = rw_relator(w, K)
        assert len(r) == K * (K + 1) // 2 + K * len(w)
        rels.append(cyclic_reduce(r))
    return Presentation(("a", "b", "c"), tuple(rels), tuple(notes))


def standard_names(rank: int) -> tuple[str, ...]:
    return tuple(default_names(rank))
