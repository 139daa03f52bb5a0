"""Command-line entry point: ``ebr extract|train|retrieve|oracle|corrupt|bench``.

Exit codes: 0 success, 1 usage or parse error, 2 strict oracle refused an
inconsistent KB, 3 I/O or file-format error. Results go to stdout,
diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import kge
from .dl import DLSyntaxError, NameKindError, UnknownNameError, parse_concept, parse_kb, render_kb
from .harness import CorruptionError, CorruptionSpec, DegenerateSignatureError, corrupt_kb, run_benchmark
from .neural import NeuralDomain, PerfectPredictor, EmbeddingPredictor, retrieve
from .oracle import InconsistentKBError, materialize, oracle_retrieve
from .triples import NTriplesError, export_ntriples, extract_triples

EXIT_OK, EXIT_USAGE, EXIT_INCONSISTENT, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for strict refusals here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_kb(path):
    return parse_kb(Path(path).read_text(encoding="utf-8"))


def _write(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def _predictor(args, kb):
    if args.oracle == "perfect":
        return PerfectPredictor(materialize(kb))
    model = kge.load_model(args.model, extract_triples(kb))
    return EmbeddingPredictor(model)


def cmd_extract(args) -> int:
    kb = _read_kb(args.kb)
    _write(args.out, export_ntriples(extract_triples(kb), args.base))
    return EXIT_OK


def cmd_train(args) -> int:
    try:
        cfg = kge.TrainConfig(epochs=args.epochs, lr=args.lr, negatives=args.neg, batch_size=args.batch,
                              seed=args.seed, scorer=args.model, dim=args.dim)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    kb = _read_kb(args.kb)
    g = extract_triples(kb)
    if len(g) == 0:
        raise UsageError("the KB yields no triples to train on")
    out = sys.stdout

    def report(epoch, loss):
        out.write(f"{epoch},{loss:.8f}\n")

    model = kge.train(g, cfg, on_epoch=report)
    kge.save_model(model, args.out)
    return EXIT_OK


def cmd_retrieve(args) -> int:
    kb = _read_kb(args.kb)
    concept = parse_concept(args.concept)
    dom = NeuralDomain.from_kb(kb, args.gamma)
    result = retrieve(concept, _predictor(args, kb), dom)
    sys.stdout.write("".join(f"{name}\n" for name in sorted(result)))
    return EXIT_OK


def cmd_oracle(args) -> int:
    kb = _read_kb(args.kb)
    concept = parse_concept(args.concept)
    kb.signature.check_concept(concept)
    mkb = materialize(kb)
    try:
        result = oracle_retrieve(concept, mkb, strict=args.strict)
    except InconsistentKBError as exc:
        for clash in exc.clashes:
            print(clash.describe(), file=sys.stderr)
        return EXIT_INCONSISTENT
    sys.stdout.write("".join(f"{name}\n" for name in sorted(result)))
    return EXIT_OK


def cmd_corrupt(args) -> int:
    try:
        spec = CorruptionSpec(args.mode, args.ratio, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    kb = _read_kb(args.kb)
    out = corrupt_kb(kb, spec)
    _write(args.out, render_kb(out))
    if spec.mode == "noise":
        print(f"added {len(out.abox) - len(kb.abox)}")
    else:
        print(f"removed {len(kb.abox) - len(out.abox)}")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.samples < 1 or args.depth < 1:
        raise UsageError("--samples and --depth must be >= 1")
    kb = _read_kb(args.kb)
    clean = _read_kb(args.clean_kb) if args.clean_kb else None
    if args.oracle == "perfect":
        predictor = "perfect"
    else:
        predictor = kge.load_model(args.model)
    NeuralDomain((), args.gamma)  # validates gamma before any work
    report = run_benchmark(kb, predictor, gamma=args.gamma, samples=args.samples, depth=args.depth,
                           seed=args.seed, clean_kb=clean)
    _write(args.report, report.to_csv(timing=not args.no_timing))
    for cls, mean in report.class_means().items():
        print(f"{cls},{mean:.6f}")
    print(f"all,{report.mean_jaccard():.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ebr", description="Embedding-based instance retrieval over description-logic KBs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("extract", help="write the KB's triples as N-Triples")
    s.add_argument("--kb", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--base", required=True, help="base IRI for local names")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("train", help="train an embedding model on the KB's triples")
    s.add_argument("--kb", required=True)
    s.add_argument("--model", choices=kge.SCORERS, default="complex")
    s.add_argument("--dim", type=int, default=128)
    s.add_argument("--epochs", type=int, default=256)
    s.add_argument("--lr", type=float, default=0.01)
    s.add_argument("--neg", type=int, default=8)
    s.add_argument("--batch", type=int, default=512)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    for name, func, help_ in (("retrieve", cmd_retrieve, "neural instance retrieval"),
                              ("bench", cmd_bench, "benchmark neural retrieval against the oracle")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--kb", required=True)
        src = s.add_mutually_exclusive_group(required=True)
        src.add_argument("--model", help="trained model file")
        src.add_argument("--oracle", choices=("perfect",))
        s.add_argument("--gamma", type=float, default=0.5)
        s.set_defaults(func=func)
        if name == "retrieve":
            s.add_argument("--concept", required=True)
        else:
            s.add_argument("--samples", type=int, default=100)
            s.add_argument("--depth", type=int, default=3)
            s.add_argument("--seed", type=int, default=7)
            s.add_argument("--report", required=True)
            s.add_argument("--clean-kb", help="uncorrupted KB used for ground truth and sampling")
            s.add_argument("--no-timing", action="store_true", help="leave the millis column empty")

    s = sub.add_parser("oracle", help="symbolic instance retrieval")
    s.add_argument("--kb", required=True)
    s.add_argument("--concept", required=True)
    s.add_argument("--strict", action="store_true", help="refuse inconsistent KBs (exit 2)")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("corrupt", help="inject noise into or remove assertions from a KB")
    s.add_argument("--kb", required=True)
    s.add_argument("--mode", choices=("noise", "remove"), required=True)
    s.add_argument("--ratio", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_corrupt)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DLSyntaxError, NameKindError, UnknownNameError, CorruptionError,
            DegenerateSignatureError, ValueError) as exc:
        if isinstance(exc, (kge.ModelFormatError, NTriplesError)):
            print(f"ebr: format error: {exc}", file=sys.stderr)
            return EXIT_IO
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"ebr: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except kge.TrainingError as exc:
        print(f"ebr: training failed: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"ebr: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
