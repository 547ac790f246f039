"""Epsilon-NFA representation, spec-document I/O, random generation and set-based oracles.

The oracles here work purely on Python sets and never touch the matrix code in
:mod:`relunfa.relu_net`, so they can be used to check it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

EPS = "eps"


class NfaSpecError(ValueError):
    """Raised for malformed or inconsistent NFA spec documents."""


class UnknownSymbolError(ValueError):
    def __init__(self, symbol: str, alphabet: Iterable[str]):
        self.symbol = symbol
        super().__init__(f"symbol {symbol!r} not in alphabet {list(alphabet)}")


def _freeze_edges(edges: Mapping) -> dict:
    return {k: frozenset(v) for k, v in sorted(edges.items()) if v}


@dataclass(frozen=True)
class Nfa:
    """An NFA with epsilon moves over states ``0..n-1``.

    ``transitions`` maps ``(state, symbol)`` to the successor set and
    ``eps_transitions`` maps a state to its epsilon successors. Empty successor
    sets are dropped on construction so two equal automata compare equal.
    """

    n: int
    alphabet: tuple[str, ...]
    transitions: dict[tuple[int, str], frozenset[int]]
    eps_transitions: dict[int, frozenset[int]]
    start: int
    accept: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "transitions", _freeze_edges(self.transitions))
        object.__setattr__(self, "eps_transitions", _freeze_edges(self.eps_transitions))
        object.__setattr__(self, "accept", frozenset(self.accept))
        self._validate()

    def _validate(self):
        if self.n < 1:
            raise ValueError("an NFA needs at least one state")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError(f"duplicate alphabet symbol in {list(self.alphabet)}")
        if EPS in self.alphabet:
            raise ValueError(f"{EPS!r} is reserved for epsilon moves")
        states = range(self.n)
        if self.start not in states:
            raise ValueError(f"start state {self.start} out of range for n={self.n}")
        for q in self.accept:
            if q not in states:
                raise ValueError(f"accepting state {q} out of range for n={self.n}")
        for (q, a), targets in self.transitions.items():
            if a not in self.alphabet:
                raise ValueError(f"transition on unknown symbol {a!r}")
            if q not in states or any(t not in states for t in targets):
                raise ValueError(f"dangling state reference in transition ({q}, {a!r})")
        for q, targets in self.eps_transitions.items():
            if q not in states or any(t not in states for t in targets):
                raise ValueError(f"dangling state reference in epsilon move from {q}")

    def successors(self, state: int, symbol: str) -> frozenset[int]:
        if symbol == EPS:
            return self.eps_transitions.get(state, frozenset())
        return self.transitions.get((state, symbol), frozenset())

    @property
    def eps_edge_count(self) -> int:
        return sum(len(t) for t in self.eps_transitions.values())


@dataclass(frozen=True)
class RandomNfaConfig:
    n: int
    alphabet: tuple[str, ...]
    eps_probability: float = 0.3
    max_out_degree: int = 2
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        if not 0.0 <= self.eps_probability <= 1.0:
            raise ValueError("eps_probability must lie in [0, 1]")
        if self.max_out_degree < 1:
            raise ValueError("max_out_degree must be >= 1")
        if self.n < 1:
            raise ValueError("n must be >= 1")


# ---------------------------------------------------------------------------
# spec documents


def _field_error(path: str, msg: str) -> NfaSpecError:
    return NfaSpecError(f"field {path}: {msg}")


def _expect_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise _field_error(path, f"expected an integer, got {value!r}")
    return value


def _expect_state(value, n: int, path: str) -> int:
    q = _expect_int(value, path)
    if not 0 <= q < n:
        raise _field_error(path, f"dangling state reference {q} (states are 0..{n - 1})")
    return q


def parse_nfa_spec(text: str) -> Nfa:
    """Parse an NFA spec document (JSON) into an :class:`Nfa`.

    Errors carry the line/column for syntax problems and a field path such as
    ``transitions[2].to[0]`` for semantic ones.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NfaSpecError(f"malformed document at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise NfaSpecError("malformed document: top level must be an object")
    for key in ("states", "alphabet", "transitions", "start", "accept"):
        if key not in doc:
            raise _field_error(key, "missing")

    n = _expect_int(doc["states"], "states")
    if n < 1:
        raise _field_error("states", "must be >= 1")

    alphabet = doc["alphabet"]
    if not isinstance(alphabet, list):
        raise _field_error("alphabet", "expected a list")
    seen: set[str] = set()
    for i, sym in enumerate(alphabet):
        path = f"alphabet[{i}]"
        if not isinstance(sym, str) or len(sym) != 1:
            if sym == EPS:
                raise _field_error(path, f"{EPS!r} is the reserved epsilon marker")
            raise _field_error(path, f"symbols must be single characters, got {sym!r}")
        if sym in seen:
            raise _field_error(path, f"duplicate alphabet symbol {sym!r}")
        seen.add(sym)

    transitions: dict[tuple[int, str], set[int]] = {}
    eps: dict[int, set[int]] = {}
    if not isinstance(doc["transitions"], list):
        raise _field_error("transitions", "expected a list")
    for i, tr in enumerate(doc["transitions"]):
        path = f"transitions[{i}]"
        if not isinstance(tr, dict) or not {"from", "symbol", "to"} <= tr.keys():
            raise _field_error(path, "expected an object with from/symbol/to")
        src = _expect_state(tr["from"], n, f"{path}.from")
        sym = tr["symbol"]
        if sym != EPS and sym not in seen:
            raise _field_error(f"{path}.symbol", f"unknown symbol {sym!r}")
        if not isinstance(tr["to"], list):
            raise _field_error(f"{path}.to", "expected a list")
        targets = {_expect_state(t, n, f"{path}.to[{k}]") for k, t in enumerate(tr["to"])}
        if sym == EPS:
            eps.setdefault(src, set()).update(targets)
        else:
            transitions.setdefault((src, sym), set()).update(targets)

    start = _expect_state(doc["start"], n, "start")
    if not isinstance(doc["accept"], list):
        raise _field_error("accept", "expected a list")
    accept = {_expect_state(q, n, f"accept[{k}]") for k, q in enumerate(doc["accept"])}
    return Nfa(n, tuple(alphabet), transitions, eps, start, frozenset(accept))


def nfa_to_document(nfa: Nfa) -> dict:
    transitions = []
    for q in range(nfa.n):
        for a in nfa.alphabet:
            targets = nfa.transitions.get((q, a))
            if targets:
                transitions.append({"from": q, "symbol": a, "to": sorted(targets)})
        if q in nfa.eps_transitions:
            transitions.append({"from": q, "symbol": EPS, "to": sorted(nfa.eps_transitions[q])})
    return {
        "states": nfa.n,
        "alphabet": list(nfa.alphabet),
        "transitions": transitions,
        "start": nfa.start,
        "accept": sorted(nfa.accept),
    }


def dump_nfa_spec(nfa: Nfa) -> str:
    """Canonical JSON text; ``parse_nfa_spec(dump_nfa_spec(x)) == x``."""
    return json.dumps(nfa_to_document(nfa), indent=2) + "\n"


# ---------------------------------------------------------------------------
# random generation


def generate_random_nfa(config: RandomNfaConfig) -> Nfa:
    rng = np.random.default_rng(config.seed)
    n = config.n
    transitions = {}
    for q in range(n):
        for a in config.alphabet:
            k = int(rng.integers(1, min(config.max_out_degree, n) + 1))
            targets = rng.choice(n, size=k, replace=False)
            transitions[(q, a)] = {int(t) for t in targets}
    eps: dict[int, set[int]] = {}
    for i in range(n):
        for j in range(n):
            # no epsilon self-loops: they never change a closure
            if i != j and rng.random() < config.eps_probability:
                eps.setdefault(i, set()).add(j)
    accept = int(rng.integers(n))
    return Nfa(n, config.alphabet, transitions, eps, 0, frozenset({accept}))


# ---------------------------------------------------------------------------
# set-based oracles


def epsilon_closure_oracle(nfa: Nfa, states: Iterable[int]) -> frozenset[int]:
    closure = set(states)
    worklist = list(closure)
    while worklist:
        q = worklist.pop()
        for t in nfa.eps_transitions.get(q, ()):
            if t not in closure:
                closure.add(t)
                worklist.append(t)
    return frozenset(closure)


def step_oracle(nfa: Nfa, active: Iterable[int], symbol: str) -> frozenset[int]:
    """Successors of ``active`` on ``symbol``; no epsilon closure is applied."""
    if symbol not in nfa.alphabet:
        raise UnknownSymbolError(symbol, nfa.alphabet)
    out: set[int] = set()
    for q in active:
        out |= nfa.transitions.get((q, symbol), frozenset())
    return frozenset(out)


def accepts_oracle(nfa: Nfa, text: Iterable[str]) -> bool:
    current = epsilon_closure_oracle(nfa, {nfa.start})
    for ch in text:
        current = epsilon_closure_oracle(nfa, step_oracle(nfa, current, ch))
    return bool(current & nfa.accept)


def subset_trace_oracle(nfa: Nfa, text: Iterable[str]) -> list[frozenset[int]]:
    """Reachable subsets after each prefix, epsilon moves ignored."""
    trace = [frozenset({nfa.start})]
    for ch in text:
        trace.append(step_oracle(nfa, trace[-1], ch))
    return trace
