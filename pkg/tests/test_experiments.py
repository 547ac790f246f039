import csv
import dataclasses
import io
import json
import statistics

import numpy as np
import pytest
from scipy import stats

from relunfa import experiments as ex
from relunfa.nfa import Nfa
from relunfa.relu_net import compile_nfa


def cfg(name, setting="six", **kw):
    return ex.ExperimentConfig(name, ex.SETTINGS[setting], **kw)


# --- statistics ----------------------------------------------------------------

def test_summarize_zero_variance():
    s = ex.summarize([1, 1, 1, 1, 1])
    assert (s.mean, s.std, s.ci95_low, s.ci95_high) == (1.0, 0.0, 1.0, 1.0)


def test_summarize_published_numbers():
    s = ex.summarize([0.98, 1.0, 1.0, 1.0, 1.0])
    assert round(s.mean, 4) == 0.9960
    assert round(s.std, 4) == 0.0089
    assert (round(s.ci95_low, 4), round(s.ci95_high, 4)) == (0.9849, 1.0071)


def test_summarize_single_score_is_degenerate():
    s = ex.summarize([0.5])
    assert s.degenerate and s.mean == 0.5 and s.ci95_low is None


def test_summarize_empty():
    with pytest.raises(ValueError):
        ex.summarize([])


@pytest.mark.parametrize("df", range(1, 31))
def test_t_table_against_scipy(df):
    assert ex.T_CRITICAL_975[df] == pytest.approx(stats.t.ppf(0.975, df), abs=1e-6)


@pytest.mark.parametrize("scores", [[0.1, 0.5, 0.9], [0.9, 0.95, 1.0, 0.97], list(np.linspace(0, 1, 12))])
def test_summarize_against_reference_formulas(scores):
    s = ex.summarize(scores)
    assert s.mean == pytest.approx(statistics.mean(scores))
    assert s.std == pytest.approx(statistics.stdev(scores))
    lo, hi = stats.t.interval(0.95, len(scores) - 1, loc=statistics.mean(scores), scale=stats.sem(scores))
    assert (s.ci95_low, s.ci95_high) == (pytest.approx(lo, abs=1e-6), pytest.approx(hi, abs=1e-6))
    assert s.ci95_low <= s.mean <= s.ci95_high


# --- runners ---------------------------------------------------------------------

def flip_one(nfa, seed):
    acc = compile_nfa(nfa)
    T = acc.matrix("a").copy()
    T[:, 0] = 1 - T[:, 0]
    return acc.with_matrix("a", T)


@pytest.mark.parametrize("name", ex.EXPERIMENTS)
@pytest.mark.parametrize("setting", ["six", "ten"])
def test_experiments_score_perfectly(name, setting):
    result = ex.run_experiment(cfg(name, setting))
    assert result.summary.scores == (1.0,) * 5
    assert all(0.0 <= x <= 1.0 for x in result.summary.scores)


def test_path_enumeration_fault_injection():
    assert ex.run_path_enumeration(cfg("path_enumeration"), make_acceptor=flip_one).summary.mean < 1.0


def test_subset_construction_fault_injection():
    assert ex.run_subset_construction(cfg("subset_construction"), make_acceptor=flip_one).summary.mean < 1.0


def test_subset_construction_empty_strings():
    result = ex.run_subset_construction(cfg("subset_construction"), strings=lambda c, s: [""] * 10)
    assert result.summary.mean == 1.0


def complement_accepting(nfa, seed):
    acc = compile_nfa(nfa)
    return dataclasses.replace(acc, accept_vector=1 - acc.accept_vector)


def test_acceptance_fault_injection_reports_witnesses():
    result = ex.run_acceptance_accuracy(cfg("acceptance_accuracy"), make_acceptor=complement_accepting)
    assert result.summary.mean < 1.0
    assert any(d["mismatches"] for d in result.details)


def test_epsilon_closure_without_eps_edges():
    no_eps = lambda c, seed: Nfa(4, ("a",), {(0, "a"): {1}}, {}, 0, {1})
    result = ex.run_epsilon_closure(cfg("epsilon_closure"), nfa_for=no_eps)
    assert result.summary.mean == 1.0
    assert all(d["max_iterations"] == 1 for d in result.details)


def test_epsilon_closure_dense_graph():
    dense = lambda c, seed: Nfa(6, ("a",), {}, {i: set(range(6)) - {i} for i in range(6)}, 0, {1})
    result = ex.run_epsilon_closure(cfg("epsilon_closure"), nfa_for=dense)
    assert result.summary.mean == 1.0
    assert all(d["max_iterations"] <= 2 for d in result.details)


def test_epsilon_closure_iterations_bounded():
    for setting in ("six", "ten"):
        result = ex.run_epsilon_closure(cfg("epsilon_closure", setting))
        assert all(d["max_iterations"] <= d["n"] for d in result.details)


def test_symbolic_equivalence_cross_pair():
    other = lambda nfa, seed: compile_nfa(ex.generate_random_nfa(ex.SETTINGS["six"].nfa_config(seed + 100)))
    assert ex.run_symbolic_equivalence(cfg("symbolic_equivalence"), make_acceptor=other).summary.mean < 0.95


def test_weight_sparsity_zero_learning_rate():
    result = ex.run_weight_sparsity(cfg("weight_sparsity", seeds=(0, 1), learning_rate=0.0))
    assert result.summary.mean == 1.0


def test_weight_sparsity_unmasked_ablation():
    result = ex.run_weight_sparsity(cfg("weight_sparsity", masked=False))
    assert max(d["violations"] for d in result.details) > 0


# --- reports ------------------------------------------------------------------------

def test_reports_are_reproducible(tmp_path):
    c = cfg("acceptance_accuracy", seeds=(0, 1, 2))
    a, b = ex.run_experiment(c), ex.run_experiment(c)
    assert a.dumps() == b.dumps()
    paths = ex.write_reports([a], tmp_path)
    doc = json.loads(paths[0].read_text())
    assert doc["reference"]["mean"] == 0.9960
    assert doc["scores"] == [1.0, 1.0, 1.0]
    rows = list(csv.reader(io.StringIO(paths[1].read_text())))
    assert rows[0] == ["experiment", "config", "seed", "score"]
    assert rows[1:] == [["acceptance_accuracy", "six", str(s), "1.0"] for s in (0, 1, 2)]


def test_format_table_flags_degenerate():
    table = ex.format_table([ex.run_experiment(cfg("acceptance_accuracy", seeds=(0,)))])
    assert "degenerate" in table


def test_config_validation():
    with pytest.raises(ValueError):
        cfg("bogus")
    with pytest.raises(ValueError):
        cfg("path_enumeration", seeds=())
    with pytest.raises(ValueError):
        cfg("path_enumeration", samples_per_seed=0)
