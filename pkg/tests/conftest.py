import numpy as np
import pytest
from hypothesis import strategies as st

from relunfa.nfa import Nfa, RandomNfaConfig, generate_random_nfa

SIX = dict(n=6, alphabet=("a", "b"))
TEN = dict(n=10, alphabet=("a", "b", "c", "d"))


def random_nfas(count, eps_probability=0.3, first_seed=0, **shape):
    shape = shape or SIX
    return [generate_random_nfa(RandomNfaConfig(eps_probability=eps_probability, seed=s, **shape))
            for s in range(first_seed, first_seed + count)]


class SubsetDfa:
    """Determinized NFA built from raw edge dicts; shares no code with relunfa's oracles."""

    def __init__(self, nfa: Nfa):
        self.nfa = nfa

        def close(states):
            seen = set()

            def visit(q):
                if q in seen:
                    return
                seen.add(q)
                for t in nfa.eps_transitions.get(q, ()):
                    visit(t)

            for q in states:
                visit(q)
            return frozenset(seen)

        self.start = close({nfa.start})
        self.delta = {}
        seen = {self.start}
        todo = [self.start]
        while todo:
            S = todo.pop()
            for a in nfa.alphabet:
                T = close({t for q in S for t in nfa.transitions.get((q, a), ())})
                self.delta[(S, a)] = T
                if T not in seen:
                    seen.add(T)
                    todo.append(T)

    def accepts(self, text):
        S = self.start
        for ch in text:
            S = self.delta[(S, ch)]
        return bool(S & self.nfa.accept)


@st.composite
def nfas(draw, max_states=6, alphabet=("a", "b"), eps=True):
    n = draw(st.integers(1, max_states))
    state = st.integers(0, n - 1)
    transitions = {}
    for q in range(n):
        for a in alphabet:
            transitions[(q, a)] = draw(st.frozensets(state, max_size=n))
    eps_edges = {q: draw(st.frozensets(state, max_size=n)) for q in range(n)} if eps else {}
    accept = draw(st.frozensets(state, max_size=n))
    return Nfa(n, alphabet, transitions, eps_edges, draw(state), accept)


@pytest.fixture
def fanout_nfa():
    # delta(0, a) = {0, 1}
    return Nfa(2, ("a",), {(0, "a"): {0, 1}}, {}, 0, {1})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
