"""Seeded validation experiments with mean / std / Student-t summaries."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .equivalence import check_equivalence, enumerate_strings
from .nfa import Nfa, RandomNfaConfig, epsilon_closure_oracle, generate_random_nfa, subset_trace_oracle, accepts_oracle
from .relu_net import (ReluAcceptor, accepts_net, compile_nfa, epsilon_closure_net, one_hot, path_trace,
                       run_subset_construction as subset_trace_net, support)
from .training import MaskedModel, TrainConfig, generate_dataset, sample_string, train

EXPERIMENTS = (
    "path_enumeration",
    "subset_construction",
    "epsilon_closure",
    "acceptance_accuracy",
    "weight_sparsity",
    "symbolic_equivalence",
)

# two-sided 95% critical values of Student's t, indexed by degrees of freedom
T_CRITICAL_975 = {
    1: 12.706205, 2: 4.302653, 3: 3.182446, 4: 2.776445, 5: 2.570582,
    6: 2.446912, 7: 2.364624, 8: 2.306004, 9: 2.262157, 10: 2.228139,
    11: 2.200985, 12: 2.178813, 13: 2.160369, 14: 2.144787, 15: 2.131450,
    16: 2.119905, 17: 2.109816, 18: 2.100922, 19: 2.093024, 20: 2.085963,
    21: 2.079614, 22: 2.073873, 23: 2.068658, 24: 2.063899, 25: 2.059539,
    26: 2.055529, 27: 2.051831, 28: 2.048407, 29: 2.045230, 30: 2.042272,
}
Z_975 = 1.959964


@dataclass(frozen=True)
class Setting:
    """One of the two benchmark automaton families."""

    name: str
    n: int
    alphabet: tuple[str, ...]
    min_len: int
    max_len: int
    exhaustive_len: int

    def nfa_config(self, seed: int = 0, eps_probability: float = 0.3) -> RandomNfaConfig:
        return RandomNfaConfig(self.n, self.alphabet, eps_probability, 2, seed)


SETTINGS = {
    "six": Setting("six", 6, ("a", "b"), 1, 10, 8),
    "ten": Setting("ten", 10, ("a", "b", "c", "d"), 1, 15, 5),
}

# (mean, std, ci_low, ci_high) previously published for each experiment and setting
REFERENCE_SCORES = {
    ("acceptance_accuracy", "six"): (0.9960, 0.0089, 0.9849, 1.0071),
    ("acceptance_accuracy", "ten"): (0.9540, 0.0451, 0.8981, 1.0099),
    ("symbolic_equivalence", "six"): (0.9920, 0.0179, 0.9698, 1.0142),
    ("symbolic_equivalence", "ten"): (0.9580, 0.0460, 0.9008, 1.0152),
}
for _name in ("path_enumeration", "subset_construction", "epsilon_closure", "weight_sparsity"):
    for _setting in SETTINGS:
        REFERENCE_SCORES[(_name, _setting)] = (1.0, 0.0, 1.0, 1.0)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    setting: Setting
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    samples_per_seed: int = 100
    train_size: int = 200
    learning_rate: float = 0.05
    epochs: int = 5
    init_jitter: float = 0.0
    masked: bool = True

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.name!r}")
        if not self.seeds:
            raise ValueError("seeds must be nonempty")
        if self.samples_per_seed < 1:
            raise ValueError("samples_per_seed must be >= 1")

    def echo(self) -> dict:
        return {
            "name": self.name,
            "setting": self.setting.name,
            "n": self.setting.n,
            "alphabet": list(self.setting.alphabet),
            "length_range": [self.setting.min_len, self.setting.max_len],
            "seeds": list(self.seeds),
            "samples_per_seed": self.samples_per_seed,
            "train_size": self.train_size,
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "init_jitter": self.init_jitter,
            "masked": self.masked,
        }


@dataclass(frozen=True)
class StatSummary:
    scores: tuple[float, ...]
    mean: float
    std: float | None
    ci95_low: float | None
    ci95_high: float | None

    @property
    def degenerate(self) -> bool:
        return self.ci95_low is None


def t_critical(df: int) -> float:
    return T_CRITICAL_975.get(df, Z_975)


def summarize(scores: Sequence[float]) -> StatSummary:
    """Mean, sample std and 95% Student-t interval; a single score gives no interval."""
    scores = tuple(float(s) for s in scores)
    if not scores:
        raise ValueError("cannot summarize an empty score list")
    k = len(scores)
    mean = math.fsum(scores) / k
    if k == 1:
        return StatSummary(scores, mean, None, None, None)
    std = math.sqrt(math.fsum((s - mean) ** 2 for s in scores) / (k - 1))
    half = t_critical(k - 1) * std / math.sqrt(k)
    return StatSummary(scores, mean, std, mean - half, mean + half)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    summary: StatSummary
    details: list[dict] = field(default_factory=list)

    @property
    def reference(self):
        return REFERENCE_SCORES.get((self.config.name, self.config.setting.name))

    def to_document(self) -> dict:
        s = self.summary
        return {
            "experiment": self.config.name,
            "config": self.config.echo(),
            "scores": list(s.scores),
            "mean": s.mean,
            "std": s.std,
            "ci95": None if s.degenerate else [s.ci95_low, s.ci95_high],
            "degenerate": s.degenerate,
            "reference": None if self.reference is None else dict(zip(("mean", "std", "ci95_low", "ci95_high"), self.reference)),
            "per_seed": self.details,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_document(), indent=2) + "\n"

    def csv_rows(self) -> list[tuple]:
        return [(self.config.name, self.config.setting.name, seed, score)
                for seed, score in zip(self.config.seeds, self.summary.scores)]


AcceptorFactory = Callable[[Nfa, int], ReluAcceptor]


def _compile(nfa: Nfa, seed: int) -> ReluAcceptor:
    return compile_nfa(nfa)


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, stream])


def _strings(config: ExperimentConfig, seed: int, stream: int = 1) -> list[str]:
    rng = _rng(seed, stream)
    st = config.setting
    return [sample_string(rng, st.alphabet, st.min_len, st.max_len) for _ in range(config.samples_per_seed)]


def _finish(config: ExperimentConfig, scores: list[float], details: list[dict]) -> ExperimentResult:
    return ExperimentResult(config, summarize(scores), details)


# ---------------------------------------------------------------------------
# the six experiments


def run_path_enumeration(config: ExperimentConfig, make_acceptor: AcceptorFactory = _compile) -> ExperimentResult:
    """Raw chained ReLU activations vs. the reachable-set trace, epsilon moves off."""
    scores, details = [], []
    for seed in config.seeds:
        nfa = generate_random_nfa(config.setting.nfa_config(seed, eps_probability=0.0))
        acc = make_acceptor(nfa, seed)
        witnesses = []
        for s in _strings(config, seed):
            net = [support(v) for v in path_trace(acc, s)]
            if net != subset_trace_oracle(nfa, s):
                witnesses.append(s)
        scores.append(1.0 - len(witnesses) / config.samples_per_seed)
        details.append({"seed": seed, "mismatches": witnesses})
    return _finish(config, scores, details)


def run_subset_construction(config: ExperimentConfig, make_acceptor: AcceptorFactory = _compile,
                            strings: Callable[[ExperimentConfig, int], list[str]] = _strings) -> ExperimentResult:
    """Binarized stacked-layer traces vs. the oracle subset sequence, epsilon moves off."""
    scores, details = [], []
    for seed in config.seeds:
        nfa = generate_random_nfa(config.setting.nfa_config(seed, eps_probability=0.0))
        acc = make_acceptor(nfa, seed)
        batch = strings(config, seed)
        witnesses = []
        for s in batch:
            net = [support(v) for v in subset_trace_net(acc, s)]
            if net != subset_trace_oracle(nfa, s):
                witnesses.append(s)
        scores.append(1.0 - len(witnesses) / len(batch))
        details.append({"seed": seed, "mismatches": witnesses})
    return _finish(config, scores, details)


def run_epsilon_closure(config: ExperimentConfig, nfa_for: Callable[[ExperimentConfig, int], Nfa] | None = None) -> ExperimentResult:
    """Closure of a random singleton through the accumulating ReLU recurrence."""
    scores, details = [], []
    for seed in config.seeds:
        nfa = nfa_for(config, seed) if nfa_for else generate_random_nfa(config.setting.nfa_config(seed))
        acc = compile_nfa(nfa)
        rng = _rng(seed, 1)
        ok, max_used, failures = 0, 0, []
        for _ in range(config.samples_per_seed):
            q = int(rng.integers(nfa.n))
            s, used = epsilon_closure_net(acc.eps_matrix, one_hot(nfa.n, q), acc.closure_iterations)
            max_used = max(max_used, used)
            if support(s) == epsilon_closure_oracle(nfa, {q}) and used <= nfa.n:
                ok += 1
            else:
                failures.append(q)
        scores.append(ok / config.samples_per_seed)
        details.append({"seed": seed, "max_iterations": max_used, "n": nfa.n, "failed_starts": failures})
    return _finish(config, scores, details)


def run_acceptance_accuracy(config: ExperimentConfig, make_acceptor: AcceptorFactory = _compile) -> ExperimentResult:
    """Compiled acceptor vs. oracle labels on a fresh test set per seed."""
    scores, details = [], []
    st = config.setting
    for seed in config.seeds:
        nfa = generate_random_nfa(st.nfa_config(seed))
        acc = make_acceptor(nfa, seed)
        test = generate_dataset(nfa, config.samples_per_seed, st.min_len, st.max_len, seed=[seed, 2], nfa_seed=seed)
        witnesses = [{"string": s, "label": y} for s, y in test.items if int(accepts_net(acc, s)) != y]
        scores.append(1.0 - len(witnesses) / len(test))
        details.append({"seed": seed, "mismatches": witnesses})
    return _finish(config, scores, details)


def run_weight_sparsity(config: ExperimentConfig) -> ExperimentResult:
    """Train from the symbolic weights and count entries that left the sparsity pattern."""
    scores, details = [], []
    st = config.setting
    for seed in config.seeds:
        nfa = generate_random_nfa(st.nfa_config(seed))
        acc = compile_nfa(nfa)
        data = generate_dataset(nfa, config.train_size, st.min_len, st.max_len, seed=[seed, 3], nfa_seed=seed)
        test = generate_dataset(nfa, config.samples_per_seed, st.min_len, st.max_len, seed=[seed, 2], nfa_seed=seed)
        model = MaskedModel.from_acceptor(acc, init_jitter=config.init_jitter, seed=seed)
        tc = TrainConfig(learning_rate=config.learning_rate, epochs=config.epochs, seed=seed,
                         init_jitter=config.init_jitter, masked=config.masked)
        report = train(model, data, tc, test=test, reference=acc)
        scores.append(1.0 if report.violations == 0 else 0.0)
        details.append({
            "seed": seed,
            "violations": report.violations,
            "violations_per_epoch": report.violations_per_epoch,
            "epoch_losses": report.epoch_losses,
            "test_accuracy": report.test_accuracy,
        })
    return _finish(config, scores, details)


def run_symbolic_equivalence(config: ExperimentConfig, make_acceptor: AcceptorFactory = _compile) -> ExperimentResult:
    scores, details = [], []
    st = config.setting
    for seed in config.seeds:
        nfa = generate_random_nfa(st.nfa_config(seed))
        rep = check_equivalence(nfa, make_acceptor(nfa, seed), sample=config.samples_per_seed,
                                seed=[seed, 4], min_len=st.min_len, max_len=st.max_len)
        scores.append(rep.agreement)
        details.append({"seed": seed, "mismatches": rep.to_document()["mismatches"]})
    return _finish(config, scores, details)


RUNNERS = {
    "path_enumeration": run_path_enumeration,
    "subset_construction": run_subset_construction,
    "epsilon_closure": run_epsilon_closure,
    "acceptance_accuracy": run_acceptance_accuracy,
    "weight_sparsity": run_weight_sparsity,
    "symbolic_equivalence": run_symbolic_equivalence,
}


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    return RUNNERS[config.name](config)


def exhaustive_agreement(setting: Setting, count: int = 20, max_len: int | None = None,
                         first_seed: int = 1000) -> list[list[str]]:
    """Mismatch witnesses of compiled acceptor vs. oracle over all short strings, per random NFA."""
    max_len = setting.exhaustive_len if max_len is None else max_len
    out = []
    for seed in range(first_seed, first_seed + count):
        nfa = generate_random_nfa(setting.nfa_config(seed))
        acc = compile_nfa(nfa)
        out.append([s for s in enumerate_strings(nfa.alphabet, max_len)
                    if accepts_oracle(nfa, s) != accepts_net(acc, s)])
    return out


# ---------------------------------------------------------------------------
# output


def _fmt(x: float | None) -> str:
    return "   -  " if x is None else f"{x:.4f}"


def format_table(results: Sequence[ExperimentResult]) -> str:
    header = f"{'experiment':<22}{'config':<7}{'mean':>8}{'std':>8}{'ci95':>20}   {'reference mean / ci95':<28}"
    lines = [header, "-" * len(header)]
    for r in results:
        s = r.summary
        ci = "degenerate (1 seed)" if s.degenerate else f"({_fmt(s.ci95_low)}, {_fmt(s.ci95_high)})"
        ref = r.reference
        ref_txt = "" if ref is None else f"{ref[0]:.4f} ({ref[2]:.4f}, {ref[3]:.4f})"
        lines.append(f"{r.config.name:<22}{r.config.setting.name:<7}{_fmt(s.mean):>8}{_fmt(s.std):>8}{ci:>20}   {ref_txt}")
    return "\n".join(lines)


def csv_text(results: Sequence[ExperimentResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("experiment", "config", "seed", "score"))
    for r in results:
        w.writerows(r.csv_rows())
    return buf.getvalue()


def write_reports(results: Sequence[ExperimentResult], out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for r in results:
        path = out_dir / f"{r.config.name}_{r.config.setting.name}.json"
        path.write_text(r.dumps())
        written.append(path)
    path = out_dir / "scores.csv"
    path.write_text(csv_text(results))
    written.append(path)
    return written
