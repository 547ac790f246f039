"""Language-level comparison of NFAs and networks, and NFA extraction from weights."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterator, Union

import numpy as np

from .nfa import EPS, Nfa, accepts_oracle
from .relu_net import ReluAcceptor, accepts_net, compile_nfa
from .training import MaskedModel, sample_string

Recognizer = Union[ReluAcceptor, MaskedModel]


@dataclass
class EquivalenceReport:
    mode: str
    total: int
    mismatches: list[tuple[str, bool, bool]] = field(default_factory=list)

    @property
    def agreement(self) -> float:
        return 1.0 - len(self.mismatches) / self.total if self.total else 1.0

    @property
    def equivalent(self) -> bool:
        return not self.mismatches

    def to_document(self) -> dict:
        return {
            "mode": self.mode,
            "total": self.total,
            "agreement": self.agreement,
            "mismatches": [{"string": s, "nfa": a, "net": b} for s, a, b in self.mismatches],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_document(), indent=2) + "\n"


def enumerate_strings(alphabet, max_len: int) -> Iterator[str]:
    """All strings over ``alphabet`` of length ``0..max_len``, shortest first."""
    for length in range(max_len + 1):
        for letters in itertools.product(alphabet, repeat=length):
            yield "".join(letters)


def net_verdict(recognizer: Recognizer, text: str) -> bool:
    if isinstance(recognizer, MaskedModel):
        return recognizer.predict(text)
    return accepts_net(recognizer, text)


def check_equivalence(nfa: Nfa, recognizer: Recognizer, *, exhaustive: int | None = None,
                      sample: int | None = None, seed: int = 0, min_len: int = 1,
                      max_len: int = 10) -> EquivalenceReport:
    """Compare NFA and network verdicts on every string up to length ``exhaustive``,
    or on ``sample`` random strings with uniform length in ``[min_len, max_len]``.
    """
    if (exhaustive is None) == (sample is None):
        raise ValueError("pass exactly one of exhaustive= or sample=")
    if tuple(recognizer.alphabet) != tuple(nfa.alphabet):
        raise ValueError(f"alphabets differ: {list(nfa.alphabet)} vs {list(recognizer.alphabet)}")
    if exhaustive is not None:
        strings = list(enumerate_strings(nfa.alphabet, exhaustive))
        mode = f"exhaustive-up-to-{exhaustive}"
    else:
        rng = np.random.default_rng(seed)
        strings = [sample_string(rng, nfa.alphabet, min_len, max_len) for _ in range(sample)]
        mode = f"sampled-{sample}"
    report = EquivalenceReport(mode, len(strings))
    for s in strings:
        expected, got = accepts_oracle(nfa, s), net_verdict(recognizer, s)
        if expected != got:
            report.mismatches.append((s, expected, got))
    return report


def extract_nfa(recognizer: Recognizer, threshold: float = 0.5) -> Nfa:
    """Read an NFA off the weights: ``i --x--> j`` iff ``W_x[j, i] > threshold``."""
    if isinstance(recognizer, MaskedModel):
        mats = recognizer.weights
    else:
        mats = dict(recognizer.per_symbol)
        mats[EPS] = recognizer.eps_matrix
    n = len(recognizer.start_vector)
    transitions: dict[tuple[int, str], set[int]] = {}
    eps: dict[int, set[int]] = {}
    for key, W in mats.items():
        for j, i in zip(*np.nonzero(W > threshold)):
            if key == EPS:
                eps.setdefault(int(i), set()).add(int(j))
            else:
                transitions.setdefault((int(i), key), set()).add(int(j))
    start = int(np.flatnonzero(recognizer.start_vector)[0])
    accept = frozenset(int(j) for j in np.flatnonzero(recognizer.accept_vector == 1))
    return Nfa(n, tuple(recognizer.alphabet), transitions, eps, start, accept)


def languages_agree(a: Nfa, b: Nfa, max_len: int) -> list[str]:
    """Witness strings up to ``max_len`` on which the two automata disagree."""
    return [s for s in enumerate_strings(a.alphabet, max_len) if accepts_oracle(a, s) != accepts_oracle(b, s)]


def round_trip_check(nfa: Nfa, max_len: int, threshold: float = 0.5) -> bool:
    """compile -> extract, then compare languages with the set-based oracle only."""
    extracted = extract_nfa(compile_nfa(nfa), threshold)
    return not languages_agree(nfa, extracted, max_len)
