"""Symbolic ReLU networks compiled from epsilon-NFAs.

Matrices use the layout ``T[target, source]`` so that ``T @ s`` sums over the
source states feeding each target. State vectors are nonnegative float arrays
whose support (entries above ``THRESHOLD``) is the active state set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .nfa import EPS, Nfa, UnknownSymbolError

THRESHOLD = 1e-6


class ClosureDidNotConverge(RuntimeError):
    pass


def transition_matrix(nfa: Nfa, symbol: str) -> np.ndarray:
    """0/1 matrix with ``T[j, i] = 1`` iff ``j`` is a ``symbol``-successor of ``i``."""
    T = np.zeros((nfa.n, nfa.n))
    for i in range(nfa.n):
        for j in nfa.successors(i, symbol):
            T[j, i] = 1.0
    return T


def one_hot(n: int, index: int) -> np.ndarray:
    v = np.zeros(n)
    v[index] = 1.0
    return v


def indicator(n: int, states: Iterable[int]) -> np.ndarray:
    v = np.zeros(n)
    for q in states:
        v[q] = 1.0
    return v


def support(s: np.ndarray, threshold: float = THRESHOLD) -> frozenset[int]:
    return frozenset(int(i) for i in np.flatnonzero(s > threshold))


def relu_step(T: np.ndarray, s: np.ndarray) -> np.ndarray:
    if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[1] != s.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {T.shape} vs vector {s.shape}")
    return np.maximum(0.0, T @ s)


def binarize(s: np.ndarray, threshold: float = THRESHOLD) -> np.ndarray:
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    return (s > threshold).astype(float)


def epsilon_closure_net(eps_matrix: np.ndarray, s: np.ndarray, max_iters: int) -> tuple[np.ndarray, int]:
    """Iterate ``s <- binarize(s + ReLU(T_eps s))`` to a fixpoint.

    Returns the closed vector and the number of iterations run, counting the
    final one that observed no change. For ``n`` states the support grows at
    most ``n - 1`` times, so ``max_iters = n`` always suffices; running out
    raises ``ClosureDidNotConverge``.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    for k in range(1, max_iters + 1):
        nxt = binarize(s + relu_step(eps_matrix, s))
        if np.array_equal(nxt, s):
            return nxt, k
        s = nxt
    raise ClosureDidNotConverge(f"epsilon closure still changing after {max_iters} iterations")


@dataclass(frozen=True)
class ReluAcceptor:
    """Closure stage, per-symbol transition stage and acceptance head."""

    n: int
    alphabet: tuple[str, ...]
    per_symbol: dict[str, np.ndarray]
    eps_matrix: np.ndarray
    start_vector: np.ndarray
    accept_vector: np.ndarray
    closure_iterations: int

    def matrix(self, symbol: str) -> np.ndarray:
        if symbol == EPS:
            return self.eps_matrix
        try:
            return self.per_symbol[symbol]
        except KeyError:
            raise UnknownSymbolError(symbol, self.alphabet) from None

    @property
    def start_index(self) -> int:
        return int(np.flatnonzero(self.start_vector)[0])

    def without_epsilon(self) -> ReluAcceptor:
        return ReluAcceptor(self.n, self.alphabet, self.per_symbol, np.zeros_like(self.eps_matrix),
                            self.start_vector, self.accept_vector, self.closure_iterations)

    def with_matrix(self, symbol: str, T: np.ndarray) -> ReluAcceptor:
        """Copy with one matrix replaced (used for fault injection and scaling checks)."""
        if symbol == EPS:
            return ReluAcceptor(self.n, self.alphabet, self.per_symbol, T,
                                self.start_vector, self.accept_vector, self.closure_iterations)
        per_symbol = dict(self.per_symbol)
        per_symbol[symbol] = T
        return ReluAcceptor(self.n, self.alphabet, per_symbol, self.eps_matrix,
                            self.start_vector, self.accept_vector, self.closure_iterations)


def compile_nfa(nfa: Nfa, closure_iterations: int | None = None) -> ReluAcceptor:
    return ReluAcceptor(
        n=nfa.n,
        alphabet=nfa.alphabet,
        per_symbol={a: transition_matrix(nfa, a) for a in nfa.alphabet},
        eps_matrix=transition_matrix(nfa, EPS),
        start_vector=one_hot(nfa.n, nfa.start),
        accept_vector=indicator(nfa.n, nfa.accept),
        closure_iterations=nfa.n if closure_iterations is None else closure_iterations,
    )


def path_trace(acceptor: ReluAcceptor, text: str) -> list[np.ndarray]:
    """Raw chained ``relu_step`` activations with no thresholding in between."""
    trace = [acceptor.start_vector.copy()]
    for ch in text:
        trace.append(relu_step(acceptor.matrix(ch), trace[-1]))
    return trace


def run_subset_construction(acceptor: ReluAcceptor, text: str) -> list[np.ndarray]:
    """Binary state vectors ``[s_0, ..., s_T]`` with epsilon moves ignored."""
    trace = [binarize(acceptor.start_vector)]
    for ch in text:
        trace.append(binarize(relu_step(acceptor.matrix(ch), trace[-1])))
    return trace


def final_state_vector(acceptor: ReluAcceptor, text: str) -> np.ndarray:
    K = acceptor.closure_iterations
    s, _ = epsilon_closure_net(acceptor.eps_matrix, binarize(acceptor.start_vector), K)
    for ch in text:
        s = binarize(relu_step(acceptor.matrix(ch), s))
        s, _ = epsilon_closure_net(acceptor.eps_matrix, s, K)
    return s


def accepts_net(acceptor: ReluAcceptor, text: str) -> bool:
    for ch in text:
        acceptor.matrix(ch)
    return float(acceptor.accept_vector @ final_state_vector(acceptor, text)) > 0.0


# ---------------------------------------------------------------------------
# serialization


def _encode_matrix(M: np.ndarray) -> list[list]:
    return [[int(x) if float(x).is_integer() else float(x) for x in row] for row in M]


def acceptor_to_document(acceptor: ReluAcceptor) -> dict:
    return {
        "kind": "relu_acceptor",
        "n": acceptor.n,
        "alphabet": list(acceptor.alphabet),
        "matrices": {a: _encode_matrix(acceptor.per_symbol[a]) for a in acceptor.alphabet},
        "eps": _encode_matrix(acceptor.eps_matrix),
        "start": acceptor.start_index,
        "accept": _encode_matrix(acceptor.accept_vector[None, :])[0],
        "closure_iterations": acceptor.closure_iterations,
    }


def acceptor_from_document(doc: dict) -> ReluAcceptor:
    if doc.get("kind") != "relu_acceptor":
        raise ValueError(f"not an acceptor document (kind={doc.get('kind')!r})")
    n = doc["n"]
    alphabet = tuple(doc["alphabet"])
    per_symbol = {a: np.array(doc["matrices"][a], dtype=float).reshape(n, n) for a in alphabet}
    return ReluAcceptor(
        n=n,
        alphabet=alphabet,
        per_symbol=per_symbol,
        eps_matrix=np.array(doc["eps"], dtype=float).reshape(n, n),
        start_vector=one_hot(n, doc["start"]),
        accept_vector=np.array(doc["accept"], dtype=float),
        closure_iterations=doc["closure_iterations"],
    )


def dump_acceptor(acceptor: ReluAcceptor) -> str:
    return json.dumps(acceptor_to_document(acceptor)) + "\n"


def load_acceptor(text: str) -> ReluAcceptor:
    return acceptor_from_document(json.loads(text))
