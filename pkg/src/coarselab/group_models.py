"""Group models with computable normal forms.

Each model turns a word into a canonical representative, which is what lets
Cayley-graph balls be enumerated by plain BFS.  Specs are strings in a tiny
language::

    free(k) | abelian(k) | lamplighter | bs(m,n) | product(spec,spec)
    | presentation("path/to/file.grp")

``presentation`` also accepts the presentation text itself in the quotes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import gcd
from typing import Sequence

from .errors import PreconditionError, SpecError
from .presentations import (
    DehnReducer,
    Presentation,
    check_metric_condition,
    load_presentation,
    parse_presentation,
)
from .words import Word, default_names, format_word, free_reduce, parse_word, shortlex_key


class GroupModel:
    """Base class.  Subclasses implement :meth:`normal_form`."""

    spec: str = ""
    generators: tuple[str, ...] = ()
    # False when normal forms are only canonical up to Dehn reduction; ball
    # construction then decides equality with the word problem instead.
    exact_normal_form = True

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def letter_order(self) -> list[int]:
        out = []
        for g in range(1, self.rank + 1):
            out += [g, -g]
        return out

    def normal_form(self, w: Sequence[int]) -> Word:
        raise NotImplementedError

    def is_identity(self, w: Sequence[int]) -> bool:
        return not self.normal_form(w)

    def equal(self, u: Sequence[int], v: Sequence[int]) -> bool:
        return self.normal_form(u) == self.normal_form(v)

    def multiply_letter(self, g: Word, x: int) -> Word:
        return self.normal_form(g + (x,))

    def neighbors(self, g: Word) -> list[Word]:
        out: list[Word] = []
        seen = set()
        for x in self.letter_order:
            h = self.multiply_letter(g, x)
            if h not in seen:
                seen.add(h)
                out.append(h)
        return out

    def check_word(self, w: Sequence[int]) -> Word:
        w = tuple(w)
        for x in w:
            if not isinstance(x, int) or x == 0 or abs(x) > self.rank:
                raise PreconditionError("group_models", f"letter {x!r} is not a generator of {self.spec}")
        return w

    def format(self, w: Word) -> str:
        return format_word(w, self.generators)

    def parse(self, text: str) -> Word:
        return self.check_word(parse_word(text, self.generators))

    def generating_set(self) -> list[str]:
        return list(self.generators)

    def __repr__(self):
        return f"<{type(self).__name__} {self.spec}>"


class FreeModel(GroupModel):
    def __init__(self, k: int):
        if k < 1:
            raise SpecError("free(k) needs k >= 1")
        self.k = k
        self.spec = f"free({k})"
        self.generators = tuple(default_names(k))

    def normal_form(self, w):
        return free_reduce(w)

    def multiply_letter(self, g, x):
        if g and g[-1] == -x:
            return g[:-1]
        return g + (x,)


class AbelianModel(GroupModel):
    def __init__(self, k: int):
        if k < 1:
            raise SpecError("abelian(k) needs k >= 1")
        self.k = k
        self.spec = f"abelian({k})"
        self.generators = tuple(default_names(k))

    def exponents(self, w) -> list[int]:
        e = [0] * self.k
        for x in w:
            e[abs(x) - 1] += 1 if x > 0 else -1
        return e

    def from_exponents(self, e) -> Word:
        out: list[int] = []
        for i, n in enumerate(e):
            out += [(i + 1) if n > 0 else -(i + 1)] * abs(n)
        return tuple(out)

    def normal_form(self, w):
        return self.from_exponents(self.exponents(w))


class LamplighterModel(GroupModel):
    """Z_2 wreath Z with generators t (shift the cursor) and a (toggle the lamp
    under the cursor).  Elements are (set of lit lamps, cursor) pairs."""

    T, A = 1, 2

    def __init__(self):
        self.spec = "lamplighter"
        self.generators = ("t", "a")

    @property
    def letter_order(self):
        return [1, -1, 2]

    def state(self, w) -> tuple[frozenset, int]:
        lamps: set[int] = set()
        cur = 0
        for x in w:
            if abs(x) == 1:
                cur += x
            else:
                lamps ^= {cur}
        return frozenset(lamps), cur

    def word_of(self, lamps, cursor: int) -> Word:
        out: list[int] = []
        pos = 0
        for p in sorted(lamps):
            out += [1 if p > pos else -1] * abs(p - pos)
            out.append(2)
            pos = p
        out += [1 if cursor > pos else -1] * abs(cursor - pos)
        return tuple(out)

    def normal_form(self, w):
        return self.word_of(*self.state(w))


class BaumslagSolitarModel(GroupModel):
    """BS(m,n) = <a, b | b^-1 a^m b a^-n>.

    Britton normal form: a product of syllables a^r b^e with 0 <= r < |m| when
    e = +1 and 0 <= r < |n| when e = -1, no pinch, followed by a free power
    of a.  Letters are absorbed left to right; a-powers are pushed rightward
    through each stable letter with a^m b = b a^n and a^n b^-1 = b^-1 a^m.
    """

    def __init__(self, m: int, n: int):
        if m == 0 and n == 0:
            raise SpecError("bs(m,n) needs m and n not both zero")
        self.m, self.n = m, n
        self.spec = f"bs({m},{n})"
        self.generators = ("a", "b")

    def syllables(self, w) -> tuple[list[tuple[int, int]], int]:
        m, n = self.m, self.n
        stack: list[tuple[int, int]] = []
        e = 0
        if m == 0 or n == 0:
            k = abs(m) + abs(n)
            # free product Z_k * Z; stack holds (a-exponent mod k, b-exponent)
            for x in w:
                if abs(x) == 1:
                    e += x
                else:
                    r = e % k
                    if r == 0 and stack and stack[-1][1] != 0:
                        r0, s = stack.pop()
                        s += 1 if x > 0 else -1
                        if s:
                            stack.append((r0, s))
                        else:
                            e = r0
                            continue
                    else:
                        stack.append((r, 1 if x > 0 else -1))
                    e = 0
            return stack, e % k
        for x in w:
            if abs(x) == 1:
                e += x
                continue
            if x > 0:
                q, r = divmod(e, abs(m))
                q *= 1 if m > 0 else -1
                if r == 0 and stack and stack[-1][1] == -1:
                    rt, _ = stack.pop()
                    e = rt + n * q
                else:
                    stack.append((r, 1))
                    e = n * q
            else:
                q, r = divmod(e, abs(n))
                q *= 1 if n > 0 else -1
                if r == 0 and stack and stack[-1][1] == 1:
                    rt, _ = stack.pop()
                    e = rt + m * q
                else:
                    stack.append((r, -1))
                    e = m * q
        return stack, e

    def normal_form(self, w):
        stack, e = self.syllables(w)
        out: list[int] = []
        for r, s in stack:
            out += [1] * r
            out += [2 if s > 0 else -2] * abs(s)
        out += [1 if e > 0 else -1] * abs(e)
        return tuple(out)


class ProductModel(GroupModel):
    """Direct product; normal forms list first-factor letters first."""

    def __init__(self, left: GroupModel, right: GroupModel):
        self.left, self.right = left, right
        self.spec = f"product({left.spec},{right.spec})"
        ln, rn = list(left.generators), list(right.generators)
        if set(ln) & set(rn):
            ln = [g + "1" for g in ln]
            rn = [g + "2" for g in rn]
        self.generators = tuple(ln + rn)
        self.split_at = left.rank

    @property
    def letter_order(self):
        k = self.split_at
        return list(self.left.letter_order) + [
            x + k if x > 0 else x - k for x in self.right.letter_order]

    def split(self, w) -> tuple[Word, Word]:
        k = self.split_at
        lw = tuple(x for x in w if abs(x) <= k)
        rw = tuple((x - k) if x > 0 else (x + k) for x in w if abs(x) > k)
        return lw, rw

    def join(self, lw: Word, rw: Word) -> Word:
        k = self.split_at
        return lw + tuple(x + k if x > 0 else x - k for x in rw)

    def normal_form(self, w):
        lw, rw = self.split(w)
        return self.join(self.left.normal_form(lw), self.right.normal_form(rw))

    def multiply_letter(self, g, x):
        lw, rw = self.split(g)
        k = self.split_at
        if abs(x) <= k:
            return self.join(self.left.multiply_letter(lw, x), rw)
        return self.join(lw, self.right.multiply_letter(rw, x - k if x > 0 else x + k))


class PresentationModel(GroupModel):
    """Group given by a C'(1/6) presentation; equality via Dehn's algorithm.

    :meth:`normal_form` Dehn-reduces and then takes the shortlex-least word
    reachable by swapping exact halves of even-length relators.  That is
    canonical on every element whose Dehn-reduced words are all connected by
    such swaps, which covers words shorter than half the shortest relator;
    ball construction does not rely on it and compares with
    :meth:`equal` instead.
    """

    exact_normal_form = False

    def __init__(self, presentation: Presentation, source: str = ""):
        check = check_metric_condition(presentation, Fraction(1, 6))
        if not check.holds:
            raise PreconditionError(
                "group_models",
                f"presentation fails C'(1/6) at relators {list(check.violations)}; "
                "Dehn normal forms would be unsound")
        self.presentation = presentation
        self.dehn = DehnReducer(presentation, check=False)
        self.generators = presentation.generators
        self.spec = f'presentation("{source}")' if source else "presentation"
        mods = []
        for g in range(1, self.rank + 1):
            sums = [sum(1 if x == g else -1 if x == -g else 0 for x in r)
                    for r in presentation.relators]
            mods.append(reduce(gcd, [abs(s) for s in sums], 0))
        self.exponent_moduli = tuple(mods)
        self.min_relator_length = presentation.min_relator_length

    def bucket_key(self, w) -> tuple:
        """Image in the abelian quotient Z/m_1 x ... x Z/m_k, an invariant of
        the element used to narrow equality tests."""
        e = [0] * self.rank
        for x in w:
            e[abs(x) - 1] += 1 if x > 0 else -1
        return tuple(v % m if m else v for v, m in zip(e, self.exponent_moduli))

    def is_identity(self, w):
        return self.dehn.is_identity(w)

    def equal(self, u, v):
        u, v = free_reduce(u), free_reduce(v)
        if u == v:
            return True
        if self.min_relator_length is None:
            return False
        if len(u) + len(v) < self.min_relator_length:
            # nontrivial relations are at least as long as the shortest relator
            return False
        return self.dehn.is_identity(u + tuple(-x for x in reversed(v)))

    def normal_form(self, w):
        w = self.dehn.reduce(w)
        if not self.dehn.half:
            return w
        seen = {w}
        frontier = [w]
        while frontier:
            nxt = []
            for u in frontier:
                for v in self._half_swaps(u):
                    if len(v) < len(w):
                        return self.normal_form(v)
                    if v not in seen:
                        seen.add(v)
                        nxt.append(v)
            frontier = nxt
        return min(seen, key=shortlex_key)

    def _half_swaps(self, u: Word):
        for half, rhos in self.dehn.half.items():
            m = len(half)
            for i in range(len(u) - m + 1):
                if u[i:i + m] == half:
                    for rho in rhos:
                        rest = tuple(-x for x in reversed(rho[m:]))
                        yield self.dehn.reduce(u[:i] + rest + u[i + m:])


# -- spec parsing ---------------------------------------------------------

_TOKENS = re.compile(r'\s*(?:(?P<int>-?\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<str>"[^"]*"|\'[^\']*\')|(?P<punct>[(),]))')


@dataclass
class _SpecNode:
    name: str
    args: list


def _tokenize(text: str):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKENS.match(text, pos)
        if not m or m.end() == pos:
            raise SpecError(f"cannot parse group spec at position {pos}: {text!r}")
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    return out


def parse_spec(text: str) -> _SpecNode:
    toks = _tokenize(text)
    i = 0

    def node():
        nonlocal i
        if i >= len(toks) or toks[i][0] != "name":
            raise SpecError(f"expected a group name in {text!r}")
        name = toks[i][1]
        i += 1
        args: list = []
        if i < len(toks) and toks[i][1] == "(":
            i += 1
            while True:
                if i >= len(toks):
                    raise SpecError(f"unclosed '(' in {text!r}")
                kind, val, _ = toks[i]
                if kind == "int":
                    args.append(int(val))
                    i += 1
                elif kind == "str":
                    args.append(val[1:-1])
                    i += 1
                elif kind == "name":
                    args.append(node())
                else:
                    raise SpecError(f"unexpected {val!r} in {text!r}")
                if i < len(toks) and toks[i][1] == ",":
                    i += 1
                    continue
                if i < len(toks) and toks[i][1] == ")":
                    i += 1
                    break
                raise SpecError(f"expected ',' or ')' in {text!r}")
        return _SpecNode(name, args)

    root = node()
    if i != len(toks):
        raise SpecError(f"trailing input in group spec {text!r}")
    return root


def _build(node: _SpecNode) -> GroupModel:
    name, args = node.name.lower(), node.args

    def ints(n):
        if len(args) != n or not all(isinstance(a, int) for a in args):
            raise SpecError(f"{name} takes {n} integer argument(s)")
        return args

    if name == "free":
        return FreeModel(*ints(1))
    if name == "abelian":
        return AbelianModel(*ints(1))
    if name == "lamplighter":
        if args:
            raise SpecError("lamplighter takes no arguments")
        return LamplighterModel()
    if name == "bs":
        return BaumslagSolitarModel(*ints(2))
    if name == "product":
        if len(args) != 2 or not all(isinstance(a, _SpecNode) for a in args):
            raise SpecError("product takes two group specs")
        return ProductModel(_build(args[0]), _build(args[1]))
    if name == "presentation":
        if len(args) != 1 or not isinstance(args[0], str):
            raise SpecError("presentation takes one quoted path or presentation text")
        src = args[0]
        if src.lstrip().startswith("<"):
            return PresentationModel(parse_presentation(src), src.strip())
        return PresentationModel(load_presentation(src), src)
    raise SpecError(f"unsupported group {node.name!r}")


def make_model(spec: str | GroupModel) -> GroupModel:
    if isinstance(spec, GroupModel):
        return spec
    return _build(parse_spec(spec))


def model_from_presentation(p: Presentation, label: str = "") -> PresentationModel:
    return PresentationModel(p, label)


def normal_form(model: GroupModel, w: Sequence[int]) -> Word:
    return model.normal_form(model.check_word(w))


def neighbors(model: GroupModel, g: Word) -> list[Word]:
    return model.neighbors(tuple(g))
