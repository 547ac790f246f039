"""Exact ReLU-network simulation of epsilon-NFAs, with set-based oracles to check it."""

from .nfa import (EPS, Nfa, NfaSpecError, RandomNfaConfig, UnknownSymbolError, accepts_oracle, dump_nfa_spec,
                  epsilon_closure_oracle, generate_random_nfa, parse_nfa_spec, step_oracle)
from .regex import RegexSyntaxError, regex_to_nfa
from .relu_net import (ReluAcceptor, accepts_net, binarize, compile_nfa, epsilon_closure_net, relu_step,
                       run_subset_construction)
from .training import MaskedModel, TrainConfig, audit_sparsity, generate_dataset, train
from .equivalence import EquivalenceReport, check_equivalence, extract_nfa, round_trip_check

__version__ = "0.1.0"

__all__ = [
    "EPS", "Nfa", "NfaSpecError", "RandomNfaConfig", "UnknownSymbolError", "accepts_oracle", "dump_nfa_spec",
    "epsilon_closure_oracle", "generate_random_nfa", "parse_nfa_spec", "step_oracle",
    "RegexSyntaxError", "regex_to_nfa",
    "ReluAcceptor", "accepts_net", "binarize", "compile_nfa", "epsilon_closure_net", "relu_step",
    "run_subset_construction",
    "MaskedModel", "TrainConfig", "audit_sparsity", "generate_dataset", "train",
    "EquivalenceReport", "check_equivalence", "extract_nfa", "round_trip_check",
]
