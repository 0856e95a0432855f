"""Words over a signed generator alphabet.

A word is a tuple of nonzero ints: letter ``i + 1`` is generator ``i`` and
``-(i + 1)`` is its inverse, so inverting a letter is negation.  The
(generator-index, sign) view is available through :func:`letters`.
"""

from __future__ import annotations

import re
from typing import Iterable, Sequence

Word = tuple  # tuple[int, ...]

EMPTY: Word = ()


def letter(gen: int, sign: int = 1) -> int:
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    return sign * (gen + 1)


def letters(w: Word) -> list[tuple[int, int]]:
    """The word as (generator-index, sign) pairs."""
    return [(abs(x) - 1, 1 if x > 0 else -1) for x in w]


def from_letters(pairs: Iterable[tuple[int, int]]) -> Word:
    return tuple(letter(g, s) for g, s in pairs)


def inverse(w: Word) -> Word:
    return tuple(-x for x in reversed(w))


def free_reduce(w: Sequence[int]) -> Word:
    out: list[int] = []
    for x in w:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def cyclic_reduce(w: Sequence[int]) -> Word:
    w = free_reduce(w)
    i, j = 0, len(w) - 1
    while i < j and w[i] == -w[j]:
        i += 1
        j -= 1
    return tuple(w[i:j + 1])


def multiply(*ws: Sequence[int]) -> Word:
    out: list[int] = []
    for w in ws:
        for x in w:
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)
    return tuple(out)


def power(w: Word, k: int) -> Word:
    if k < 0:
        return free_reduce(inverse(w) * (-k))
    return free_reduce(w * k)


def cyclic_conjugates(w: Word) -> list[Word]:
    return [w[i:] + w[:i] for i in range(len(w))] if w else [EMPTY]


def is_proper_power(w: Word) -> bool:
    """True when the cyclically reduced ``w`` equals ``u^k`` for some k >= 2."""
    n = len(w)
    for p in range(1, n // 2 + 1):
        if n % p == 0 and w == w[:p] * (n // p):
            return True
    return False


def shortlex_key(w: Word) -> tuple:
    # generator order a < A < b < B < ...
    return (len(w), tuple(2 * (abs(x) - 1) + (x < 0) for x in w))


def default_names(k: int) -> list[str]:
    if k <= 26:
        return [chr(ord("a") + i) for i in range(k)]
    return [f"x{i}" for i in range(k)]


def format_word(w: Word, names: Sequence[str]) -> str:
    """Render with collapsed powers, e.g. ``a^2 b^-1``; the identity is ``1``."""
    if not w:
        return "1"
    parts = []
    i = 0
    while i < len(w):
        j = i
        while j < len(w) and w[j] == w[i]:
            j += 1
        name = names[abs(w[i]) - 1]
        exp = (j - i) * (1 if w[i] > 0 else -1)
        parts.append(name if exp == 1 else f"{name}^{exp}")
        i = j
    return " ".join(parts)


_TOKEN = re.compile(r"\s*(\^\s*-?\s*\d+)")


def parse_word(text: str, names: Sequence[str]) -> Word:
    """Parse juxtaposed generators with optional integer powers.

    Generator names are matched greedily (longest first), so multi-letter
    names such as ``a1`` work without separators.  ``1`` alone is the
    identity.
    """
    text = text.strip()
    if text in ("", "1", "e"):
        return EMPTY
    order = sorted(range(len(names)), key=lambda i: -len(names[i]))
    out: list[int] = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace() or text[pos] == "*":
            pos += 1
            continue
        for i in order:
            if text.startswith(names[i], pos):
                pos += len(names[i])
                break
        else:
            raise ValueError(f"unknown generator at position {pos} in {text!r}")
        exp = 1
        m = _TOKEN.match(text, pos)
        if m:
            exp = int(m.group(1)[1:].replace(" ", ""))
            pos = m.end()
        out.extend([letter(i, 1 if exp > 0 else -1)] * abs(exp))
    return tuple(out)
