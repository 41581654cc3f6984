"""Command-line pipeline: ingest -> graph -> classify -> sample -> mask.

Configuration comes from a flat ``key = value`` file plus CLI flags; flags
win over file values. Progress goes to stderr; each run writes a
machine-readable ``manifest.json`` into its output directory. Reruns with
identical config and seed produce byte-identical shard files, and manifests
that differ only in timestamps and timings.

The ``LINKSHARD_THREADS`` environment variable overrides the default worker
thread count (used by the masking stage; output is identical at any count).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .documents import CorpusStats
from .graph import GraphConsistencyError, LinkGraph
from .ingest import ParseReport, ingest, parse_canonical, parse_wikiextractor
from .masking import MaskConfig, Vocabulary, mask_shard_file
from .relations import LinkRelation, partition_neighbors
from .sampling import SamplerConfig, Stage, enumerate_queries, generate_shards
from .store import DocumentStore, StoreError, write_store
from .synth import SynthSpec, generate_files, reference_spec

MANIFEST_NAME = "manifest.json"
INPUT_FORMATS = ("wikiextractor", "jsonl")

# Option name -> coercion used when the value comes from a config file.
_CASTS = {
    "input": str,
    "format": str,
    "store": str,
    "out": str,
    "export": str,
    "vocab": str,
    "truth": str,
    "shards": str,
    "stage": str,
    "k_neg": int,
    "max_queries_per_doc": int,
    "seed": int,
    "mask_seed": int,
    "vocab_size": int,
    "anchor_ratio": float,
    "base_ratio": float,
    "allow_replacement": "bool",
    "query_side_only": "bool",
    "all_pairs": "bool",
    "overwrite": "bool",
    "docs": int,
    "queries": int,
    "min_segments": int,
    "max_segments": int,
    "topic_tokens": int,
    "signal": str,
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def log(message: str) -> None:
    print(message, file=sys.stderr)


def thread_count() -> int:
    raw = os.environ.get("LINKSHARD_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise SystemExit(f"LINKSHARD_THREADS must be an integer, got {raw!r}")
    return max(1, value)


def load_config_file(path: Path) -> dict[str, str]:
    """Flat ``key = value`` pairs; blank lines and # comments ignored."""
    config: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SystemExit(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        config[key.strip().replace("-", "_")] = value.strip()
    return config


def merge_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> argparse.Namespace:
    """Fill unset options (None) from the config file, coercing per option."""
    if not getattr(args, "config", None):
        return args
    config = load_config_file(Path(args.config))
    for key, raw in config.items():
        if not hasattr(args, key):
            continue  # other subcommands' keys may share one file
        if getattr(args, key) is not None:
            continue  # explicit flag wins
        cast = _CASTS.get(key, str)
        try:
            if cast == "bool":
                lowered = raw.lower()
                if lowered in _TRUE:
                    value = True
                elif lowered in _FALSE:
                    value = False
                else:
                    raise ValueError(f"not a boolean: {raw!r}")
            else:
                value = cast(raw)
        except ValueError as exc:
            parser.error(f"config field {key!r}: {exc}")
        setattr(args, key, value)
    return args


def require(args: argparse.Namespace, parser: argparse.ArgumentParser, *names: str) -> None:
    for name in names:
        if getattr(args, name) in (None, ""):
            parser.error(f"missing required option --{name.replace('_', '-')}")


def require_path(parser: argparse.ArgumentParser, name: str, value: str) -> Path:
    path = Path(value)
    if not path.exists():
        parser.error(f"--{name.replace('_', '-')}: path does not exist: {path}")
    return path


class Manifest:
    """Run record written to a fixed filename in the output directory."""

    def __init__(self, command: str, config: dict):
        self.data: dict = {
            "tool": "linkshard",
            "version": __version__,
            "command": command,
            "created_utc": datetime.now(timezone.utc).isoformat(),
            "config": config,
            "threads": thread_count(),
            "steps": [],
            "counts": {},
            "warnings": [],
            "errors": [],
        }
        self._start = time.monotonic()

    def step(self, name: str, seconds: float, **counts) -> None:
        self.data["steps"].append({"name": name, "seconds": round(seconds, 3), "counts": counts})

    def write(self, out_dir: Path) -> Path:
        self.data["elapsed_seconds"] = round(time.monotonic() - self._start, 3)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / MANIFEST_NAME
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump(self.data, handle, indent=2, sort_keys=True)
            handle.write("\n")
        return path


def _ingest_to_store(
    input_path: Path, input_format: str, store_path: Path, overwrite: bool
) -> tuple[DocumentStore, CorpusStats, ParseReport]:
    report = ParseReport()
    if input_format == "wikiextractor":
        with open(input_path, "rb") as stream:
            docs = list(parse_wikiextractor(stream, report))
    elif input_format == "jsonl":
        with open(input_path, "r", encoding="utf-8") as stream:
            docs = list(parse_canonical(stream, report))
    else:
        raise SystemExit(f"unknown input format {input_format!r}")
    kept, stats = ingest(docs, report)
    store = write_store(kept, store_path, stats=stats, overwrite=overwrite)
    return store, stats, report


def _cmd_ingest(args, parser) -> int:
    require(args, parser, "input", "store")
    input_path = require_path(parser, "input", args.input)
    input_format = args.format or "wikiextractor"
    if input_format not in INPUT_FORMATS:
        parser.error(f"--format: expected one of {INPUT_FORMATS}, got {input_format!r}")
    manifest = Manifest("ingest", {"input": str(input_path), "format": input_format,
                                   "store": args.store})
    started = time.monotonic()
    store, stats, report = _ingest_to_store(
        input_path, input_format, Path(args.store), bool(args.overwrite)
    )
    manifest.step("ingest", time.monotonic() - started, **stats.as_dict())
    manifest.data["counts"] = stats.as_dict()
    manifest.data["corpus_fingerprint"] = store.fingerprint
    manifest.data["warnings"] = [f"offset {w.byte_offset}: {w.message}" for w in report.warnings]
    manifest.data["errors"] = [f"offset {e.byte_offset}: {e.message}" for e in report.errors]
    manifest.write(Path(args.store))
    log(
        f"ingest: kept {stats.docs_kept}/{stats.docs_total} documents, "
        f"{stats.anchors_resolved} resolved / {stats.anchors_dangling} dangling anchors"
    )
    store.close()
    return 0 if not report.errors else 1


def _cmd_build_graph(args, parser) -> int:
    require(args, parser, "store")
    store_path = require_path(parser, "store", args.store)
    with DocumentStore.open(store_path) as store:
        started = time.monotonic()
        graph = LinkGraph.build(store)
        elapsed = time.monotonic() - started
        log(
            f"graph: {graph.edge_count()} occurrences, "
            f"{len(graph.backlink_seg)} backlinked pairs in {elapsed:.2f}s"
        )
        if args.export:
            graph.export(Path(args.export))
            log(f"graph: exported edge list to {args.export}")
    return 0


def _cmd_classify_stats(args, parser) -> int:
    require(args, parser, "store")
    store_path = require_path(parser, "store", args.store)
    cfg = SamplerConfig(max_queries_per_doc=args.max_queries_per_doc or 3)
    with DocumentStore.open(store_path) as store:
        graph = LinkGraph.build(store)
        queries = enumerate_queries(store, graph, cfg)
        totals = {relation.wire: 0 for relation in LinkRelation}
        histogram: dict[str, dict[str, int]] = {relation.wire: {} for relation in LinkRelation}
        for doc_id, segment_index in queries:
            partition = partition_neighbors(graph, doc_id, segment_index)
            for relation in LinkRelation:
                size = len(partition.groups[relation])
                totals[relation.wire] += size
                bucket = histogram[relation.wire]
                bucket[str(size)] = bucket.get(str(size), 0) + 1
    payload = {"queries": len(queries), "group_totals": totals, "group_size_histogram": histogram}
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        log(f"classify-stats: wrote {args.out}")
    else:
        print(text)
    return 0


def _stages_from(arg: str | None) -> list[Stage]:
    if arg in (None, "all"):
        return [Stage.HYPERLINK, Stage.SYMMETRIC, Stage.MOST_RELEVANT]
    return [Stage.from_wire(arg)]


def _sampler_config(args) -> SamplerConfig:
    cfg = SamplerConfig(
        k_neg=args.k_neg if args.k_neg is not None else 24,
        allow_replacement=(
            args.allow_replacement if args.allow_replacement is not None else True
        ),
        max_queries_per_doc=args.max_queries_per_doc or 3,
        seed=args.seed if args.seed is not None else 0,
    )
    cfg.validate()
    return cfg


def _cmd_sample(args, parser) -> int:
    require(args, parser, "store", "out")
    store_path = require_path(parser, "store", args.store)
    stages = _stages_from(args.stage)
    cfg = _sampler_config(args)
    manifest = Manifest(
        "sample",
        {
            "store": str(store_path),
            "stage": args.stage or "all",
            "k_neg": cfg.k_neg,
            "allow_replacement": cfg.allow_replacement,
            "max_queries_per_doc": cfg.max_queries_per_doc,
            "seed": cfg.seed,
        },
    )
    with DocumentStore.open(store_path) as store:
        started = time.monotonic()
        graph = LinkGraph.build(store)
        manifest.step("build-graph", time.monotonic() - started, edges=graph.edge_count())
        started = time.monotonic()
        shard_manifest = generate_shards(store, graph, stages, cfg, Path(args.out))
        manifest.step("sample", time.monotonic() - started, **shard_manifest.counts)
        manifest.data["counts"] = shard_manifest.counts
        manifest.data["corpus_fingerprint"] = store.fingerprint
        manifest.data["warnings"] = shard_manifest.warnings
    manifest.write(Path(args.out))
    log(f"sample: wrote {shard_manifest.counts} examples to {args.out}")
    return 0


def _mask_config(args) -> MaskConfig:
    cfg = MaskConfig(
        anchor_ratio=args.anchor_ratio if args.anchor_ratio is not None else 0.50,
        base_ratio=args.base_ratio if args.base_ratio is not None else 0.15,
        seed=args.mask_seed if args.mask_seed is not None else (args.seed or 0),
        mask_doc_side_anchors=not args.query_side_only,
        mask_all_pairs=bool(args.all_pairs),
    )
    cfg.validate()
    return cfg


def _cmd_mask(args, parser) -> int:
    require(args, parser, "store", "shards", "vocab", "out")
    store_path = require_path(parser, "store", args.store)
    shards_dir = require_path(parser, "shards", args.shards)
    vocab_path = require_path(parser, "vocab", args.vocab)
    stages = _stages_from(args.stage)
    cfg = _mask_config(args)
    vocab = Vocabulary.load(vocab_path)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(
        "mask",
        {
            "store": str(store_path),
            "shards": str(shards_dir),
            "vocab": str(vocab_path),
            "stage": args.stage or "all",
            "anchor_ratio": cfg.anchor_ratio,
            "base_ratio": cfg.base_ratio,
            "mask_seed": cfg.seed,
            "query_side_only": not cfg.mask_doc_side_anchors,
            "all_pairs": cfg.mask_all_pairs,
        },
    )
    counts: dict[str, int] = {}
    with DocumentStore.open(store_path) as store:
        for stage in stages:
            shard_path = shards_dir / f"{stage.value}.jsonl"
            if not shard_path.exists():
                parser.error(f"--shards: missing shard file {shard_path}")
            started = time.monotonic()
            count = mask_shard_file(
                store, shard_path, out_dir / f"{stage.value}.jsonl", cfg, vocab,
                threads=thread_count(),
            )
            counts[stage.value] = count
            manifest.step(f"mask-{stage.value}", time.monotonic() - started, records=count)
    manifest.data["counts"] = counts
    manifest.write(out_dir)
    log(f"mask: wrote {counts} masked records to {out_dir}")
    return 0


def _synth_spec(args, parser) -> SynthSpec:
    spec = reference_spec()
    if args.docs is not None:
        spec.n_docs = args.docs
    if args.queries is not None:
        spec.n_queries = args.queries
    if args.seed is not None:
        spec.seed = args.seed
    if args.min_segments is not None or args.max_segments is not None:
        lo = args.min_segments or spec.segments_per_doc[0]
        hi = args.max_segments or spec.segments_per_doc[1]
        spec.segments_per_doc = (lo, hi)
    if args.topic_tokens is not None:
        spec.topic_tokens_per_doc = args.topic_tokens
    if args.signal is not None:
        try:
            parts = tuple(float(p) for p in args.signal.split(","))
        except ValueError:
            parser.error(f"--signal: expected comma-separated floats, got {args.signal!r}")
        spec.signal_strength = parts  # type: ignore[assignment]
    try:
        spec.validate()
    except ValueError as exc:
        parser.error(f"synthetic spec: {exc}")
    return spec


def _cmd_synth(args, parser) -> int:
    require(args, parser, "out", "truth")
    spec = _synth_spec(args, parser)
    docs, rows = generate_files(spec, Path(args.out), Path(args.truth))
    log(f"synth: wrote {docs} documents to {args.out} and {rows} truth rows to {args.truth}")
    return 0


def _cmd_all(args, parser) -> int:
    require(args, parser, "input", "out")
    input_path = require_path(parser, "input", args.input)
    input_format = args.format or "jsonl"
    if input_format not in INPUT_FORMATS:
        parser.error(f"--format: expected one of {INPUT_FORMATS}, got {input_format!r}")
    out_dir = Path(args.out)
    sampler_cfg = _sampler_config(args)
    mask_cfg = _mask_config(args)
    vocab_size = args.vocab_size if args.vocab_size is not None else 5000
    stages = [Stage.HYPERLINK, Stage.SYMMETRIC, Stage.MOST_RELEVANT]
    manifest = Manifest(
        "all",
        {
            "input": str(input_path),
            "format": input_format,
            "out": str(out_dir),
            "k_neg": sampler_cfg.k_neg,
            "allow_replacement": sampler_cfg.allow_replacement,
            "max_queries_per_doc": sampler_cfg.max_queries_per_doc,
            "seed": sampler_cfg.seed,
            "vocab_size": vocab_size,
            "anchor_ratio": mask_cfg.anchor_ratio,
            "base_ratio": mask_cfg.base_ratio,
            "mask_seed": mask_cfg.seed,
            "query_side_only": not mask_cfg.mask_doc_side_anchors,
            "all_pairs": mask_cfg.mask_all_pairs,
        },
    )
    failed = False
    try:
        started = time.monotonic()
        store, stats, report = _ingest_to_store(
            input_path, input_format, out_dir / "store", overwrite=bool(args.overwrite)
        )
        manifest.step("ingest", time.monotonic() - started, **stats.as_dict())
        manifest.data["corpus_fingerprint"] = store.fingerprint
        manifest.data["warnings"].extend(
            f"offset {w.byte_offset}: {w.message}" for w in report.warnings
        )
        manifest.data["errors"].extend(
            f"offset {e.byte_offset}: {e.message}" for e in report.errors
        )
        log(f"all: ingested {stats.docs_kept} documents")

        started = time.monotonic()
        graph = LinkGraph.build(store)
        manifest.step("build-graph", time.monotonic() - started, edges=graph.edge_count())
        log(f"all: graph has {graph.edge_count()} link occurrences")

        started = time.monotonic()
        vocab = Vocabulary.from_store(store, size=vocab_size)
        vocab_path = out_dir / "vocab.txt"
        vocab.save(vocab_path)
        manifest.step("vocab", time.monotonic() - started, tokens=len(vocab))
        log(f"all: vocabulary of {len(vocab)} tokens")

        started = time.monotonic()
        shard_manifest = generate_shards(store, graph, stages, sampler_cfg, out_dir / "shards")
        manifest.step("sample", time.monotonic() - started, **shard_manifest.counts)
        manifest.data["counts"]["examples"] = shard_manifest.counts
        manifest.data["warnings"].extend(shard_manifest.warnings)
        log(f"all: sampled {shard_manifest.counts}")

        masked_dir = out_dir / "masked"
        masked_dir.mkdir(parents=True, exist_ok=True)
        masked_counts: dict[str, int] = {}
        started = time.monotonic()
        for stage in stages:
            masked_counts[stage.value] = mask_shard_file(
                store,
                out_dir / "shards" / f"{stage.value}.jsonl",
                masked_dir / f"{stage.value}.jsonl",
                mask_cfg,
                vocab,
                threads=thread_count(),
            )
        manifest.step("mask", time.monotonic() - started, **masked_counts)
        manifest.data["counts"]["masked"] = masked_counts
        log(f"all: masked {masked_counts}")
        store.close()
        if report.errors:
            failed = True
    except Exception as exc:  # surface partial failure in the manifest
        manifest.data["errors"].append(f"{type(exc).__name__}: {exc}")
        manifest.write(out_dir)
        raise
    manifest.write(out_dir)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linkshard",
        description="Turn a hyperlinked corpus into staged contrastive pre-training shards.",
    )
    parser.add_argument("--version", action="version", version=f"linkshard {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", help="flat key = value config file; flags win")
        return sub

    sub = add("ingest", "parse a corpus, resolve anchors, clean, and write the store")
    sub.add_argument("--input", help="input corpus file")
    sub.add_argument("--format", choices=INPUT_FORMATS, help="input format (default wikiextractor)")
    sub.add_argument("--store", help="store directory to create")
    sub.add_argument("--overwrite", action="store_true", default=None,
                     help="replace an existing store")

    sub = add("build-graph", "build the link graph and report its size")
    sub.add_argument("--store", help="store directory")
    sub.add_argument("--export", help="directory for edges.tsv / backlinks.tsv")

    sub = add("classify-stats", "emit per-corpus relation group-size histograms as JSON")
    sub.add_argument("--store", help="store directory")
    sub.add_argument("--out", help="output JSON file (default: stdout)")
    sub.add_argument("--max-queries-per-doc", type=int, help="query cap per document")

    sub = add("sample", "draw stage-specific training examples into shard files")
    sub.add_argument("--store", help="store directory")
    sub.add_argument("--stage", choices=["hp", "shp", "mrds", "all"], help="stage (default all)")
    sub.add_argument("--k-neg", type=int, help="negatives per example (default 24)")
    sub.add_argument("--no-replacement", dest="allow_replacement", action="store_false",
                     default=None, help="skip queries whose negative pool is smaller than k-neg")
    sub.add_argument("--max-queries-per-doc", type=int, help="query cap per document (default 3)")
    sub.add_argument("--seed", type=int, help="sampling seed (default 0)")
    sub.add_argument("--out", help="output directory for shards")

    sub = add("mask", "plan anchor-aware masking over sampled shards")
    sub.add_argument("--store", help="store directory")
    sub.add_argument("--shards", help="directory holding <stage>.jsonl shards")
    sub.add_argument("--stage", choices=["hp", "shp", "mrds", "all"], help="stage (default all)")
    sub.add_argument("--vocab", help="vocabulary file")
    sub.add_argument("--out", help="output directory for masked shards")
    sub.add_argument("--anchor-ratio", type=float, help="anchor-token selection rate (default 0.5)")
    sub.add_argument("--base-ratio", type=float, help="base selection rate (default 0.15)")
    sub.add_argument("--mask-seed", type=int, help="masking seed (default: --seed or 0)")
    sub.add_argument("--seed", type=int, help=argparse.SUPPRESS)
    sub.add_argument("--query-side-only", action="store_true", default=None,
                     help="flag anchors on the query side only")
    sub.add_argument("--all-pairs", action="store_true", default=None,
                     help="also plan masks for negative pairs")

    sub = add("synth", "generate a synthetic corpus with planted link structure")
    sub.add_argument("--out", help="output corpus JSONL")
    sub.add_argument("--truth", help="output ground-truth TSV")
    sub.add_argument("--docs", type=int, help="number of documents")
    sub.add_argument("--queries", type=int, help="number of query documents")
    sub.add_argument("--seed", type=int, help="generation seed")
    sub.add_argument("--min-segments", type=int, help="minimum segments per document")
    sub.add_argument("--max-segments", type=int, help="maximum segments per document")
    sub.add_argument("--topic-tokens", type=int, help="topic tokens per document")
    sub.add_argument("--signal", help="comma-separated share probabilities per relation class")

    sub = add("all", "run ingest, graph, vocabulary, sampling, and masking end to end")
    sub.add_argument("--input", help="input corpus file")
    sub.add_argument("--format", choices=INPUT_FORMATS, help="input format (default jsonl)")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--overwrite", action="store_true", default=None,
                     help="replace existing outputs")
    sub.add_argument("--k-neg", type=int, help="negatives per example (default 24)")
    sub.add_argument("--no-replacement", dest="allow_replacement", action="store_false",
                     default=None, help="skip queries whose negative pool is smaller than k-neg")
    sub.add_argument("--max-queries-per-doc", type=int, help="query cap per document (default 3)")
    sub.add_argument("--seed", type=int, help="sampling seed (default 0)")
    sub.add_argument("--vocab-size", type=int, help="vocabulary size (default 5000)")
    sub.add_argument("--anchor-ratio", type=float, help="anchor-token selection rate (default 0.5)")
    sub.add_argument("--base-ratio", type=float, help="base selection rate (default 0.15)")
    sub.add_argument("--mask-seed", type=int, help="masking seed (default: --seed)")
    sub.add_argument("--query-side-only", action="store_true", default=None,
                     help="flag anchors on the query side only")
    sub.add_argument("--all-pairs", action="store_true", default=None,
                     help="also plan masks for negative pairs")
    return parser


_HANDLERS = {
    "ingest": _cmd_ingest,
    "build-graph": _cmd_build_graph,
    "classify-stats": _cmd_classify_stats,
    "sample": _cmd_sample,
    "mask": _cmd_mask,
    "synth": _cmd_synth,
    "all": _cmd_all,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args = merge_config(args, parser)
    try:
        return _HANDLERS[args.command](args, parser)
    except BrokenPipeError:
        return 1
    except (OSError, ValueError, StoreError, GraphConsistencyError) as exc:
        log(f"linkshard: error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
