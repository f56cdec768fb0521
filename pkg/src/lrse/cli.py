"""Command-line interface.

One binary with subcommands covering the three protocol roles plus
verification and benchmarking: the owner runs ``keygen`` and ``index``,
the user runs ``trapdoor`` (and keeps the printed blinding values), the
server role is ``search``. ``similar`` demonstrates vocabulary-space fuzzy
matching, ``verify`` runs the correctness battery, ``bench`` the timing
harness.

Exit codes: 0 success, 1 usage error, 2 I/O or format error,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, core, engine, linalg
from .embeddings import (
    EmbeddingSide,
    EmbeddingStore,
    attach_text,
    load_text,
    nearest_words,
    save_text,
    synthesize,
)
from .errors import LrseError, UnindexableDocument
from .pipeline import build_index, make_trapdoor
from .text_analysis import DEFAULT_KEYWORDS_PER_DOC, Corpus

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_VERIFY = 3

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage failures exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _side(text: str) -> EmbeddingSide:
    return EmbeddingSide(text)


def _load_store(args) -> EmbeddingStore:
    store = load_text(args.embeddings, lowercase=getattr(args, "lowercase", False))
    out_path = getattr(args, "embeddings_out", None)
    if out_path:
        attach_text(store, out_path, EmbeddingSide.OUT,
                    lowercase=getattr(args, "lowercase", False))
    return store


def _add_embedding_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--embeddings", required=True, help="word2vec-format text file (IN vectors)")
    p.add_argument("--embeddings-out", help="optional second file with OUT vectors")
    p.add_argument("--lowercase", action="store_true",
                   help="fold vocabulary and tokens to lower case")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lrse", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth-embeddings", help="write a deterministic synthetic vector file")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--vocab-size", type=int, default=200)
    p.add_argument("--vocab-file", help="one word per line; overrides --vocab-size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--dual-out", help="also write OUT vectors to this path")

    p = sub.add_parser("keygen", help="generate a secret key")
    p.add_argument("--dim", type=int, required=True, help="embedding dimension n")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--cond-max", type=float, default=linalg.DEFAULT_COND_MAX)
    p.add_argument("--out", required=True)

    p = sub.add_parser("index", help="build an encrypted index from a corpus directory")
    p.add_argument("--key", required=True)
    _add_embedding_args(p)
    p.add_argument("--corpus", required=True, help="directory of plain-text documents")
    p.add_argument("--out", required=True)
    p.add_argument("--sigma", type=float, default=0.05,
                   help="noise deviation traded against ranking precision")
    p.add_argument("--keywords", type=int, default=DEFAULT_KEYWORDS_PER_DOC,
                   help="keywords kept per document")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--doc-side", choices=["auto", "in", "out"], default="auto")

    p = sub.add_parser("trapdoor", help="encrypt a multi-keyword query")
    p.add_argument("--key", required=True)
    _add_embedding_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--query-side", type=_side, choices=list(EmbeddingSide), default=EmbeddingSide.IN)
    p.add_argument("--normalize-query", action="store_true",
                   help="normalize the query mean for cosine-style scoring")
    p.add_argument("--blinding-out", help="write the blinding secrets to this JSON file")
    p.add_argument("terms", nargs="+", help="query keywords")

    p = sub.add_parser("search", help="rank an index against a trapdoor")
    p.add_argument("--index", required=True)
    p.add_argument("--trapdoor", required=True)
    p.add_argument("--k", type=int, default=50)

    p = sub.add_parser("similar", help="nearest vocabulary words by cosine similarity")
    _add_embedding_args(p)
    p.add_argument("--side", type=_side, choices=list(EmbeddingSide), default=EmbeddingSide.IN)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("term")

    p = sub.add_parser("verify", help="run the correctness battery")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quick", action="store_true", help="smaller sample sizes")
    p.add_argument("--plot-dir", help="also write the precision/noise curve and CSV here")

    p = sub.add_parser("bench", help="run the timing harness")
    p.add_argument("--scheme", choices=["lrse", "mrse", "both"], default="both")
    p.add_argument("--dims", type=_int_list,
                   help="dimension list for the selected scheme (requires --scheme lrse|mrse)")
    p.add_argument("--lrse-dims", type=_int_list, default=(50, 100, 200, 300))
    p.add_argument("--mrse-dims", type=_int_list, default=(2000, 4000))
    p.add_argument("--doc-counts", type=_int_list, default=(200, 500, 1000))
    p.add_argument("--docs", type=int, default=1000, help="document count for dimension sweeps")
    p.add_argument("--keywords", type=int, default=25)
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--trapdoor-reps", type=int, default=200)
    p.add_argument("--query-reps", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="bench_out")
    return parser


# -- subcommands -------------------------------------------------------------


def cmd_synth_embeddings(args) -> int:
    if args.vocab_file:
        vocab = [w for w in Path(args.vocab_file).read_text(encoding="utf-8").split() if w]
    else:
        vocab = [f"word{i:04d}" for i in range(args.vocab_size)]
    store = synthesize(args.dim, vocab, args.seed, dual=bool(args.dual_out))
    save_text(store, args.out, EmbeddingSide.IN)
    print(f"wrote {store.size} x {store.dimension} vectors to {args.out}")
    if args.dual_out:
        save_text(store, args.dual_out, EmbeddingSide.OUT)
        print(f"wrote OUT vectors to {args.dual_out}")
    return EXIT_OK


def cmd_keygen(args) -> int:
    key = core.gen_key(args.dim, args.seed, cond_max=args.cond_max)
    engine.save_key(key, args.out)
    print(f"wrote key for dimension {key.embed_dim} (vectors {key.dim} long) to {args.out}")
    return EXIT_OK


def cmd_index(args) -> int:
    key = engine.load_key(args.key)
    store = _load_store(args)
    corpus = Corpus.from_directory(args.corpus, lowercase=args.lowercase)
    doc_side = None if args.doc_side == "auto" else EmbeddingSide(args.doc_side)
    index, report = build_index(
        corpus,
        store,
        key,
        sigma=args.sigma,
        keywords_per_doc=args.keywords,
        seed=args.seed,
        doc_side=doc_side,
    )
    run_meta = report.as_meta()
    run_meta["lowercase"] = args.lowercase
    engine.save_index(index, args.out, run_meta=run_meta)
    print(
        f"indexed {report.indexed}/{corpus.size} documents at dimension {key.embed_dim} "
        f"-> {args.out}"
    )
    if report.side_fallback:
        print("note: OUT vectors unavailable, document side fell back to IN")
    if report.skipped_docs:
        print(f"skipped unindexable documents: {report.skipped_docs}")
    if report.missing_keywords:
        print(f"keywords without vectors (skipped): {report.missing_keywords}")
    return EXIT_OK


def cmd_trapdoor(args) -> int:
    key = engine.load_key(args.key)
    store = _load_store(args)
    terms = [t.lower() for t in args.terms] if args.lowercase else list(args.terms)
    td, blinding, missed = make_trapdoor(
        terms,
        store,
        key,
        seed=args.seed,
        query_side=args.query_side,
        normalize_query=args.normalize_query,
    )
    engine.save_trapdoor(td, args.out)
    print(f"wrote trapdoor for {len(terms)} terms to {args.out}")
    print(f"blinding scale={blinding.scale!r} offset={blinding.offset!r} (keep private)")
    if missed:
        print(f"terms without vectors (skipped): {missed}")
    if args.blinding_out:
        Path(args.blinding_out).write_text(
            json.dumps({"scale": blinding.scale, "offset": blinding.offset}) + "\n"
        )
    return EXIT_OK


def cmd_search(args) -> int:
    store, _ = engine.load_index(args.index)
    td = engine.load_trapdoor(args.trapdoor)
    results = engine.execute_query(store, td, args.k)
    for doc_id, blinded in results:
        ref = store.payload_refs.get(doc_id)
        if ref is not None:
            print(f"{doc_id}\t{blinded:.12g}\t{ref}")
        else:
            print(f"{doc_id}\t{blinded:.12g}")
    return EXIT_OK


def cmd_similar(args) -> int:
    store = _load_store(args)
    term = args.term.lower() if args.lowercase else args.term
    try:
        neighbors = nearest_words(store, term, args.k, store.resolve_side(args.side))
    except KeyError:
        print(f"term {term!r} is not in the vocabulary", file=sys.stderr)
        return EXIT_IO
    for word, sim in neighbors:
        print(f"{word}\t{sim:.6f}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import verify

    results = verify.run_all(seed=args.seed, quick=args.quick)
    failed = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{status}  {res.name}: {res.detail} ({res.elapsed:.2f}s)")
        failed += not res.passed
        if args.plot_dir and res.name == "precision-noise-tradeoff" and res.data:
            _write_precision_report(res, Path(args.plot_dir))
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


def _write_precision_report(res, out_dir: Path) -> None:
    import csv

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir.mkdir(parents=True, exist_ok=True)
    sigmas = res.data["sigmas"]
    precision = res.data["precision"]
    with open(out_dir / "precision_vs_sigma.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sigma", "precision_at_10"])
        writer.writerows(zip(sigmas, precision))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(sigmas, precision, marker="o")
    ax.set_xlabel("noise deviation")
    ax.set_ylabel("mean precision@10")
    ax.set_ylim(0, 1.05)
    ax.grid(True, alpha=0.3)
    ax.set_title("Ranking precision vs noise deviation")
    fig.tight_layout()
    fig.savefig(out_dir / "precision_vs_sigma.png", dpi=150)
    plt.close(fig)
    print(f"wrote precision report to {out_dir}")


def cmd_bench(args) -> int:
    from . import bench

    schemes = ("lrse", "mrse") if args.scheme == "both" else (args.scheme,)
    lrse_dims, mrse_dims = args.lrse_dims, args.mrse_dims
    if args.dims:
        if args.scheme == "both":
            print("--dims requires --scheme lrse or --scheme mrse", file=sys.stderr)
            return EXIT_USAGE
        if args.scheme == "lrse":
            lrse_dims = args.dims
        else:
            mrse_dims = args.dims
    config = bench.BenchConfig(
        lrse_dims=lrse_dims,
        mrse_dims=mrse_dims,
        doc_counts=args.doc_counts,
        main_docs=args.docs,
        keywords_per_doc=args.keywords,
        top_k=args.k,
        trapdoor_reps=args.trapdoor_reps,
        query_reps=args.query_reps,
        seed=args.seed,
        schemes=schemes,
    )
    rows = bench.run(config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "bench.csv"
    bench.write_csv(rows, csv_path)
    figures = bench.render_figures(rows, out_dir)
    print(bench.summarize(rows))
    print(f"wrote {csv_path}")
    for path in figures:
        print(f"wrote {path}")
    return EXIT_OK


_COMMANDS = {
    "synth-embeddings": cmd_synth_embeddings,
    "keygen": cmd_keygen,
    "index": cmd_index,
    "trapdoor": cmd_trapdoor,
    "search": cmd_search,
    "similar": cmd_similar,
    "verify": cmd_verify,
    "bench": cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return _COMMANDS[args.command](args)
    except (UnindexableDocument, LrseError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
