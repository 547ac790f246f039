"""Exit criteria. Each test prints one PASS/FAIL line, visible even without ``-s``."""

import time

import numpy as np
import pytest

from relunfa import experiments as ex
from relunfa.equivalence import round_trip_check
from relunfa.nfa import generate_random_nfa, step_oracle, epsilon_closure_oracle
from relunfa.relu_net import binarize, compile_nfa, epsilon_closure_net, indicator, relu_step, support
from relunfa.training import (ACTIVATION_CLIP, MaskedModel, TrainConfig, backward, bce_loss, forward_smooth,
                              generate_dataset, train)

SETTINGS = ("six", "ten")
PUBLISHED_MEAN = {
    ("acceptance_accuracy", "six"): 0.9960,
    ("acceptance_accuracy", "ten"): 0.9540,
    ("symbolic_equivalence", "six"): 0.9920,
    ("symbolic_equivalence", "ten"): 0.9580,
}


@pytest.fixture
def verdict(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


def run_both(name, **kw):
    return [ex.run_experiment(ex.ExperimentConfig(name, ex.SETTINGS[s], **kw)) for s in SETTINGS]


def exact(results):
    return all(r.summary.mean == 1.0 and r.summary.std == 0.0 for r in results)


def describe(results):
    return "; ".join(f"{r.config.setting.name}: mean {r.summary.mean:.4f} std {r.summary.std:.4f}" for r in results)


def test_1_path_enumeration(verdict):
    t0 = time.perf_counter()
    results = run_both("path_enumeration")
    elapsed = time.perf_counter() - t0
    verdict(1, exact(results) and elapsed < 10, f"path enumeration {describe(results)}; {elapsed:.2f}s (< 10s)")


def test_2_subset_construction(verdict):
    t0 = time.perf_counter()
    results = run_both("subset_construction")
    elapsed = time.perf_counter() - t0
    verdict(2, exact(results) and elapsed < 10, f"subset construction {describe(results)}; {elapsed:.2f}s (< 10s)")


def test_3_epsilon_closure(verdict):
    t0 = time.perf_counter()
    results = run_both("epsilon_closure")
    elapsed = time.perf_counter() - t0
    bounded = all(d["max_iterations"] <= d["n"] for r in results for d in r.details)
    worst = max(d["max_iterations"] for r in results for d in r.details)
    verdict(3, exact(results) and bounded and elapsed < 10,
            f"epsilon closure {describe(results)}; max iterations {worst} (<= n); {elapsed:.2f}s (< 10s)")


def test_4_acceptance(verdict):
    t0 = time.perf_counter()
    results = run_both("acceptance_accuracy")
    witnesses = [(r.config.setting.name, d["seed"], m["string"]) for r in results for d in r.details for m in d["mismatches"]]
    for w in witnesses:
        print(f"acceptance mismatch witness: {w}")
    meets = all(r.summary.mean >= PUBLISHED_MEAN[("acceptance_accuracy", r.config.setting.name)] for r in results)
    exhaustive = {s: ex.exhaustive_agreement(ex.SETTINGS[s], count=20) for s in SETTINGS}
    for s, per_nfa in exhaustive.items():
        for k, ws in enumerate(per_nfa):
            for w in ws[:5]:
                print(f"exhaustive mismatch witness ({s}, nfa {k}): {w!r}")
    all_exact = all(not ws for per_nfa in exhaustive.values() for ws in per_nfa)
    elapsed = time.perf_counter() - t0
    verdict(4, meets and all_exact and elapsed < 60,
            f"acceptance {describe(results)} (published 0.9960 / 0.9540); exhaustive len<=8/5 on 20+20 NFAs: "
            f"{'all agree' if all_exact else 'MISMATCH'}; {len(witnesses)} sampled witnesses; {elapsed:.2f}s (< 60s)")


def test_5_sparsity(verdict):
    t0 = time.perf_counter()
    masked = run_both("weight_sparsity")
    violations = [d["violations"] for r in masked for d in r.details]
    every_epoch = all(v == 0 for r in masked for d in r.details for v in d["violations_per_epoch"])
    ablation = run_both("weight_sparsity", masked=False)
    ablation_v = {r.config.setting.name: [d["violations"] for d in r.details] for r in ablation}
    elapsed = time.perf_counter() - t0
    ok = all(v == 0 for v in violations) and every_epoch and max(max(v) for v in ablation_v.values()) > 0 and elapsed < 120
    verdict(5, ok, f"masked violations {violations} ({describe(masked)}); unmasked ablation violations {ablation_v}; "
                   f"{elapsed:.2f}s (< 120s)")


def test_6_symbolic_equivalence(verdict):
    t0 = time.perf_counter()
    results = run_both("symbolic_equivalence")
    meets = all(r.summary.mean >= PUBLISHED_MEAN[("symbolic_equivalence", r.config.setting.name)] for r in results)
    round_trips = {}
    for s in SETTINGS:
        st = ex.SETTINGS[s]
        round_trips[s] = sum(round_trip_check(generate_random_nfa(st.nfa_config(seed)), st.exhaustive_len)
                             for seed in range(2000, 2020))
    elapsed = time.perf_counter() - t0
    verdict(6, meets and all(v == 20 for v in round_trips.values()) and elapsed < 60,
            f"equivalence {describe(results)} (published 0.9920 / 0.9580); round trips identical {round_trips} of 20; "
            f"{elapsed:.2f}s (< 60s)")


def test_7_statistics(verdict):
    s = ex.summarize([0.98, 1.0, 1.0, 1.0, 1.0])
    got = (round(s.mean, 4), round(s.std, 4), round(s.ci95_low, 4), round(s.ci95_high, 4))
    verdict(7, got == (0.9960, 0.0089, 0.9849, 1.0071), f"summarize([0.98,1,1,1,1]) -> mean/std/ci {got}")


def _support_equivalence(rng, trials=1000):
    fails = 0
    for k in range(trials):
        st = ex.SETTINGS["six" if k % 2 else "ten"]
        nfa = generate_random_nfa(st.nfa_config(int(rng.integers(10_000)), eps_probability=0.0))
        active = {q for q in range(nfa.n) if rng.random() < 0.5}
        sym = nfa.alphabet[int(rng.integers(len(nfa.alphabet)))]
        acc = compile_nfa(nfa)
        fails += support(binarize(relu_step(acc.matrix(sym), indicator(nfa.n, active)))) != step_oracle(nfa, active, sym)
    return fails


def _closure_properties(rng, trials=300):
    fails = 0
    for _ in range(trials):
        st = ex.SETTINGS["ten"]
        nfa = generate_random_nfa(st.nfa_config(int(rng.integers(10_000)), eps_probability=float(rng.uniform(0.05, 0.6))))
        E = compile_nfa(nfa).eps_matrix
        start = {q for q in range(nfa.n) if rng.random() < 0.3}
        s, used = epsilon_closure_net(E, indicator(nfa.n, start), nfa.n)
        again, used_again = epsilon_closure_net(E, s, nfa.n)
        prev, monotone = indicator(nfa.n, start), True
        for _ in range(nfa.n):
            nxt = binarize(prev + relu_step(E, prev))
            monotone &= support(nxt) >= support(prev)
            prev = nxt
        fails += not (support(s) == epsilon_closure_oracle(nfa, start) and np.array_equal(again, s)
                      and used_again == 1 and used <= nfa.n and monotone)
    return fails


def _gradient_check(rng):
    worst, checked, h = 0.0, 0, 1e-4
    for seed in range(6):
        nfa = generate_random_nfa(ex.SETTINGS["six"].nfa_config(100 + seed, eps_probability=0.1))
        model = MaskedModel.from_acceptor(compile_nfa(nfa), init_jitter=0.1, seed=seed)
        for s in ("ab", "ba", "abb", "a", "bab"):
            _, cache = forward_smooth(model, s)
            mass = float(cache["final"] @ model.accept_vector)
            if mass > 50:
                continue
            model.acceptance_bias = mass - 0.3
            p, cache = forward_smooth(model, s)
            y = int(rng.integers(2))
            grad = backward(model, cache, y)
            coords = [(k, j, i) for k in model.keys for j, i in zip(*np.nonzero(model.masks[k]))]
            pattern = lambda: [((u > 0).tobytes(), (pre < ACTIVATION_CLIP).tobytes())
                               for *_, u, pre in forward_smooth(model, s)[1]["tape"]]
            base = pattern()
            for idx in rng.choice(len(coords), size=min(20, len(coords)), replace=False):
                k, j, i = coords[idx]
                W = model.weights[k]
                W[j, i] += h
                lp, pp = bce_loss(forward_smooth(model, s)[0], y), pattern()
                W[j, i] -= 2 * h
                lm, pm = bce_loss(forward_smooth(model, s)[0], y), pattern()
                W[j, i] += h
                if pp != base or pm != base:
                    continue
                fd, a = (lp - lm) / (2 * h), grad.weights[k][j, i]
                scale = max(abs(fd), abs(a))
                if scale > 1e-8:
                    worst = max(worst, abs(a - fd) / scale)
                    checked += 1
    return worst, checked


def test_8_property_suite(verdict):
    rng = np.random.default_rng(2024)
    step_fails = _support_equivalence(rng)
    closure_fails = _closure_properties(rng)
    worst, checked = _gradient_check(rng)

    st = ex.SETTINGS["six"]
    nfa = generate_random_nfa(st.nfa_config(0))
    acc = compile_nfa(nfa)
    data = generate_dataset(nfa, 200, st.min_len, st.max_len, seed=1)
    cfg = TrainConfig(epochs=5, seed=3, init_jitter=0.1)
    r1 = train(MaskedModel.from_acceptor(acc, init_jitter=0.1, seed=3), data, cfg, reference=acc)
    r2 = train(MaskedModel.from_acceptor(acc, init_jitter=0.1, seed=3), data, cfg, reference=acc)
    mask_ok = r1.violations_per_epoch == [0] * 5
    exp_cfg = ex.ExperimentConfig("symbolic_equivalence", st)
    deterministic = r1.dumps() == r2.dumps() and ex.run_experiment(exp_cfg).dumps() == ex.run_experiment(exp_cfg).dumps()

    ok = step_fails == 0 and closure_fails == 0 and worst < 1e-3 and checked >= 20 and mask_ok and deterministic
    verdict(8, ok, f"support-equivalence 1000 triples, {step_fails} failures; closure idempotence/monotonicity 300 cases, "
                   f"{closure_fails} failures; gradient max rel err {worst:.2e} over {checked} coords (< 1e-3); "
                   f"mask violations per epoch {r1.violations_per_epoch}; byte-identical reports {deterministic}")
