"""Thompson construction for a small regex dialect: literals, concatenation, ``|``, ``*`` and ``( )``.

A backslash escapes the next character. Empty alternatives (``a|``, ``()``, or
the empty pattern) denote the empty string.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable

from .nfa import Nfa

SPECIAL = set("|*()\\")


class RegexSyntaxError(ValueError):
    def __init__(self, msg: str, pattern: str, pos: int):
        self.pos = pos
        super().__init__(f"{msg} at position {pos} in {pattern!r}")


class _Builder:
    def __init__(self):
        self.count = 0
        self.edges: list[tuple[int, str | None, int]] = []

    def state(self) -> int:
        self.count += 1
        return self.count - 1

    def edge(self, src: int, label: str | None, dst: int):
        self.edges.append((src, label, dst))


class _Parser:
    """Recursive descent; every sub-expression returns a (start, accept) fragment."""

    def __init__(self, pattern: str, builder: _Builder):
        self.pattern = pattern
        self.pos = 0
        self.b = builder
        self.literals: list[str] = []

    def peek(self):
        return self.pattern[self.pos] if self.pos < len(self.pattern) else None

    def parse(self):
        frag = self.alternation()
        if self.pos != len(self.pattern):
            raise RegexSyntaxError(f"unexpected {self.peek()!r}", self.pattern, self.pos)
        return frag

    def alternation(self):
        branches = [self.concatenation()]
        while self.peek() == "|":
            self.pos += 1
            branches.append(self.concatenation())
        if len(branches) == 1:
            return branches[0]
        s, f = self.b.state(), self.b.state()
        for bs, bf in branches:
            self.b.edge(s, None, bs)
            self.b.edge(bf, None, f)
        return s, f

    def concatenation(self):
        frag = None
        while self.peek() is not None and self.peek() not in "|)":
            nxt = self.starred()
            if frag is None:
                frag = nxt
            else:
                self.b.edge(frag[1], None, nxt[0])
                frag = (frag[0], nxt[1])
        if frag is None:
            s = self.b.state()
            return s, s
        return frag

    def starred(self):
        frag = self.atom()
        while self.peek() == "*":
            self.pos += 1
            s, f = self.b.state(), self.b.state()
            self.b.edge(s, None, frag[0])
            self.b.edge(s, None, f)
            self.b.edge(frag[1], None, frag[0])
            self.b.edge(frag[1], None, f)
            frag = (s, f)
        return frag

    def atom(self):
        ch = self.peek()
        if ch == "(":
            open_pos = self.pos
            self.pos += 1
            frag = self.alternation()
            if self.peek() != ")":
                raise RegexSyntaxError("unbalanced '('", self.pattern, open_pos)
            self.pos += 1
            return frag
        if ch == "*":
            raise RegexSyntaxError("'*' with nothing to repeat", self.pattern, self.pos)
        if ch == "\\":
            self.pos += 1
            if self.peek() is None:
                raise RegexSyntaxError("dangling escape", self.pattern, self.pos - 1)
            ch = self.peek()
        self.pos += 1
        if ch not in self.literals:
            self.literals.append(ch)
        s, f = self.b.state(), self.b.state()
        self.b.edge(s, ch, f)
        return s, f


def regex_to_nfa(pattern: str, alphabet: Iterable[str] | None = None) -> Nfa:
    """Compile ``pattern`` to an epsilon-NFA with start state 0 and one accepting state.

    ``alphabet`` lets callers widen the symbol set, e.g. to compare two patterns
    over a shared alphabet; it must contain every literal in the pattern.
    """
    builder = _Builder()
    parser = _Parser(pattern, builder)
    start, final = parser.parse()

    if alphabet is None:
        symbols = tuple(parser.literals)
    else:
        symbols = tuple(alphabet)
        missing = [c for c in parser.literals if c not in symbols]
        if missing:
            raise ValueError(f"pattern uses symbols {missing} outside alphabet {list(symbols)}")

    out: dict[int, list[tuple[str | None, int]]] = {}
    for src, label, dst in builder.edges:
        out.setdefault(src, []).append((label, dst))

    # renumber in BFS order so the start state is 0
    order = {start: 0}
    queue = deque([start])
    while queue:
        q = queue.popleft()
        for _, dst in out.get(q, ()):
            if dst not in order:
                order[dst] = len(order)
                queue.append(dst)

    transitions: dict[tuple[int, str], set[int]] = {}
    eps: dict[int, set[int]] = {}
    for src, label, dst in builder.edges:
        if src not in order:
            continue
        if label is None:
            eps.setdefault(order[src], set()).add(order[dst])
        else:
            transitions.setdefault((order[src], label), set()).add(order[dst])
    return Nfa(len(order), symbols, transitions, eps, 0, frozenset({order[final]}))
