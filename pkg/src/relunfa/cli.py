"""Command-line interface.

Exit codes: 0 success / equivalent, 1 verdict failures, 2 input errors,
3 numeric divergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments as ex
from .equivalence import check_equivalence
from .nfa import NfaSpecError, dump_nfa_spec, generate_random_nfa, parse_nfa_spec
from .regex import RegexSyntaxError, regex_to_nfa
from .relu_net import (ReluAcceptor, acceptor_from_document, accepts_net, binarize, compile_nfa, dump_acceptor,
                       epsilon_closure_net, relu_step, support)
from .training import (LabeledDataset, MaskedModel, TrainConfig, TrainingDiverged, generate_dataset,
                       model_from_document, model_to_document, train)

EXIT_OK, EXIT_VERDICT, EXIT_INPUT, EXIT_DIVERGED = 0, 1, 2, 3


class InputError(Exception):
    pass


def _err(msg: str):
    print(f"error: {msg}", file=sys.stderr)


def _read(path: str) -> str:
    try:
        return sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def _load_nfa(path: str):
    try:
        return parse_nfa_spec(_read(path))
    except NfaSpecError as exc:
        raise InputError(f"{path}: {exc}") from None


def _load_network(path: str) -> ReluAcceptor | MaskedModel:
    try:
        doc = json.loads(_read(path))
        if doc.get("kind") == "masked_model":
            return model_from_document(doc)
        return acceptor_from_document(doc)
    except (json.JSONDecodeError, ValueError, KeyError, AttributeError) as exc:
        raise InputError(f"{path}: not a network file ({exc})") from None


def cmd_generate(args) -> int:
    setting = ex.SETTINGS[args.config]
    cfg = setting.nfa_config(args.seed, eps_probability=args.eps)
    text = dump_nfa_spec(generate_random_nfa(cfg))
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_compile(args) -> int:
    if (args.spec is None) == (args.regex is None):
        raise InputError("give either an NFA spec file or --regex")
    if args.regex is not None:
        try:
            nfa = regex_to_nfa(args.regex)
        except RegexSyntaxError as exc:
            raise InputError(str(exc)) from None
    else:
        nfa = _load_nfa(args.spec)
    Path(args.output).write_text(dump_acceptor(compile_nfa(nfa)))
    print(f"n={nfa.n} alphabet_size={len(nfa.alphabet)} eps_edges={nfa.eps_edge_count}")
    return EXIT_OK


def _trace(acc: ReluAcceptor, text: str) -> list[list[int]]:
    K = acc.closure_iterations
    s, _ = epsilon_closure_net(acc.eps_matrix, binarize(acc.start_vector), K)
    out = [sorted(support(s))]
    for ch in text:
        s, _ = epsilon_closure_net(acc.eps_matrix, binarize(relu_step(acc.matrix(ch), s)), K)
        out.append(sorted(support(s)))
    return out


def cmd_run(args) -> int:
    acc = _load_network(args.acceptor)
    if not isinstance(acc, ReluAcceptor):
        raise InputError(f"{args.acceptor}: expected a compiled acceptor")
    strings = args.strings if args.strings else sys.stdin.read().splitlines()
    status = EXIT_OK
    for text in strings:
        bad = [c for c in text if c not in acc.alphabet]
        if bad:
            _err(f"{text!r}: unknown symbol {bad[0]!r}")
            status = EXIT_VERDICT
            continue
        line = f"{'ACCEPT' if accepts_net(acc, text) else 'REJECT'}\t{text}"
        if args.trace:
            line += "\t" + " ".join("{" + ",".join(map(str, t)) + "}" for t in _trace(acc, text))
        print(line)
    return status


def cmd_train(args) -> int:
    nfa = _load_nfa(args.spec)
    if args.dataset:
        try:
            data = LabeledDataset.loads(_read(args.dataset))
        except (json.JSONDecodeError, KeyError) as exc:
            raise InputError(f"{args.dataset}: bad dataset ({exc})") from None
    else:
        data = generate_dataset(nfa, args.train_size, args.min_len, args.max_len, seed=[args.seed, 3])
    test = generate_dataset(nfa, args.test_size, args.min_len, args.max_len, seed=[args.seed, 2]) if args.test_size else None
    acc = compile_nfa(nfa)
    model = MaskedModel.from_acceptor(acc, init_jitter=args.jitter, seed=args.seed)
    config = TrainConfig(learning_rate=args.lr, epochs=args.epochs, batch_size=args.batch_size,
                         seed=args.seed, init_jitter=args.jitter, masked=not args.unmasked)
    try:
        report = train(model, data, config, test=test, reference=acc)
    except TrainingDiverged as exc:
        _err(str(exc))
        return EXIT_DIVERGED
    Path(args.output).write_text(json.dumps(model_to_document(report.model)) + "\n")
    report_path = Path(args.report) if args.report else Path(args.output).with_suffix(".report.json")
    report_path.write_text(report.dumps())
    print("epoch losses: " + " ".join(f"{x:.6f}" for x in report.epoch_losses))
    test_acc = "n/a" if report.test_accuracy is None else f"{report.test_accuracy:.4f}"
    print(f"train accuracy {report.train_accuracy:.4f}  test accuracy {test_acc}  violations {report.violations}")
    return EXIT_OK


def cmd_verify(args) -> int:
    nfa = _load_nfa(args.spec)
    net = _load_network(args.network)
    if tuple(net.alphabet) != nfa.alphabet:
        raise InputError(f"alphabet mismatch: {list(nfa.alphabet)} vs {list(net.alphabet)}")
    if args.exhaustive is not None:
        rep = check_equivalence(nfa, net, exhaustive=args.exhaustive)
    else:
        rep = check_equivalence(nfa, net, sample=args.sample, seed=args.seed,
                                min_len=args.min_len, max_len=args.max_len)
    print(f"{rep.mode}: agreement {rep.agreement:.4f} ({rep.total - len(rep.mismatches)}/{rep.total})")
    for s, a, b in rep.mismatches[: args.max_witnesses]:
        print(f"  mismatch {s!r}: nfa={'ACCEPT' if a else 'REJECT'} net={'ACCEPT' if b else 'REJECT'}")
    if args.report:
        Path(args.report).write_text(rep.dumps())
    return EXIT_OK if rep.equivalent else EXIT_VERDICT


def cmd_experiment(args) -> int:
    names = ex.EXPERIMENTS if args.name == "all" else (args.name,)
    settings = list(ex.SETTINGS) if args.config == "both" else [args.config]
    seeds = tuple(range(args.first_seed, args.first_seed + args.seeds))
    results = []
    for setting in settings:
        for name in names:
            cfg = ex.ExperimentConfig(name, ex.SETTINGS[setting], seeds=seeds, samples_per_seed=args.samples)
            result = ex.run_experiment(cfg)
            results.append(result)
            for d in result.details:
                for w in d.get("mismatches", [])[:5]:
                    _err(f"{name}/{setting} seed {d['seed']}: mismatch on {w!r}")
    print(ex.format_table(results))
    if any(r.summary.degenerate for r in results):
        print("note: a single seed gives no confidence interval")
    if args.output:
        ex.write_reports(results, Path(args.output))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relunfa", description="Compile epsilon-NFAs into ReLU acceptors and check them.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random NFA spec")
    g.add_argument("--config", choices=sorted(ex.SETTINGS), default="six")
    g.add_argument("--eps", type=float, default=0.3, help="epsilon edge probability per state pair")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("compile", help="compile an NFA spec or regex to an acceptor file")
    c.add_argument("spec", nargs="?")
    c.add_argument("--regex")
    c.add_argument("-o", "--output", required=True)
    c.set_defaults(func=cmd_compile)

    r = sub.add_parser("run", help="run strings through a compiled acceptor")
    r.add_argument("acceptor")
    r.add_argument("strings", nargs="*", help="input strings; read one per line from stdin if omitted")
    r.add_argument("--trace", action="store_true", help="print the active state set after each symbol")
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("train", help="masked training from the symbolic weights")
    t.add_argument("spec")
    t.add_argument("--dataset", help="JSON-lines file of {string, label}; generated if omitted")
    t.add_argument("--train-size", type=int, default=200)
    t.add_argument("--test-size", type=int, default=100)
    t.add_argument("--min-len", type=int, default=1)
    t.add_argument("--max-len", type=int, default=10)
    t.add_argument("--lr", type=float, default=0.05)
    t.add_argument("--epochs", type=int, default=5)
    t.add_argument("--batch-size", type=int)
    t.add_argument("--jitter", type=float, default=0.0)
    t.add_argument("--unmasked", action="store_true", help="ablation: skip the mask projection")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("-o", "--output", required=True)
    t.add_argument("--report")
    t.set_defaults(func=cmd_train)

    v = sub.add_parser("verify", help="compare an acceptor or trained model against an NFA")
    v.add_argument("spec")
    v.add_argument("network")
    mode = v.add_mutually_exclusive_group(required=True)
    mode.add_argument("--exhaustive", type=int, metavar="L")
    mode.add_argument("--sample", type=int, metavar="K")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--min-len", type=int, default=1)
    v.add_argument("--max-len", type=int, default=10)
    v.add_argument("--max-witnesses", type=int, default=20)
    v.add_argument("--report")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("experiment", help="run the seeded validation experiments")
    e.add_argument("name", choices=ex.EXPERIMENTS + ("all",))
    e.add_argument("--config", choices=sorted(ex.SETTINGS) + ["both"], default="both")
    e.add_argument("--seeds", type=int, default=5)
    e.add_argument("--first-seed", type=int, default=0)
    e.add_argument("--samples", type=int, default=100)
    e.add_argument("-o", "--output", help="directory for JSON reports and scores.csv")
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        _err(str(exc))
        return EXIT_INPUT
    except OSError as exc:
        _err(str(exc))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
