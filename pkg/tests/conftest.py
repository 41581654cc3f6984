from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

import pytest

from linkshard.cli import main as cli_main
from linkshard.documents import Document
from linkshard.ingest import ingest
from linkshard.relations import LinkRelation
from linkshard.store import DocumentStore, write_store
from linkshard.synth import SynthSpec, generate, generate_files, reference_spec

DATA_DIR = Path(__file__).parent / "data"
WIKI_FIXTURE = DATA_DIR / "wikiextractor_sample.txt"


@dataclass
class ReferencePipeline:
    root: Path
    corpus: Path
    truth: Path
    store_dir: Path
    vocab: Path
    shards_dir: Path
    masked_dir: Path
    manifest: Path


@pytest.fixture(scope="session")
def reference_pipeline(tmp_path_factory) -> ReferencePipeline:
    """One full `synth` + `all` run over the frozen reference spec."""
    root = tmp_path_factory.mktemp("reference")
    corpus = root / "corpus.jsonl"
    truth = root / "truth.tsv"
    generate_files(reference_spec(), corpus, truth)
    out = root / "run"
    rc = cli_main(["all", "--input", str(corpus), "--format", "jsonl", "--out", str(out)])
    assert rc == 0
    return ReferencePipeline(
        root=root,
        corpus=corpus,
        truth=truth,
        store_dir=out / "store",
        vocab=out / "vocab.txt",
        shards_dir=out / "shards",
        masked_dir=out / "masked",
        manifest=out / "manifest.json",
    )


@pytest.fixture(scope="session")
def reference_store(reference_pipeline) -> DocumentStore:
    store = DocumentStore.open(reference_pipeline.store_dir)
    yield store
    store.close()


def small_spec(seed: int = 3, n_docs: int = 60, n_queries: int = 30) -> SynthSpec:
    """A fast spec for unit tests: one neighbor per class per query."""
    return SynthSpec(
        n_docs=n_docs,
        n_queries=n_queries,
        segments_per_doc=(2, 4),
        class_counts={relation: 1 for relation in LinkRelation},
        vocab_size=300,
        topic_tokens_per_doc=8,
        signal_strength=(0.9, 0.7, 0.5, 0.3),
        words_per_segment=(30, 45),
        seed=seed,
    )


def ingested_docs(spec: SynthSpec) -> list[Document]:
    docs, _ = generate(spec)
    kept, _ = ingest(docs)
    return kept


@pytest.fixture()
def small_store(tmp_path) -> DocumentStore:
    store = write_store(ingested_docs(small_spec()), tmp_path / "store")
    yield store
    store.close()


def random_synth_spec(rng: random.Random) -> SynthSpec:
    """A feasible random spec for oracle-equivalence sweeps."""
    n_docs = rng.randint(40, 200)
    counts = {relation: rng.randint(0, 3) for relation in LinkRelation}
    needed = sum(counts.values())
    n_queries = rng.randint(1, max(1, n_docs - max(needed, 1) - 5))
    strengths = sorted((round(rng.uniform(0.1, 0.95), 2) for _ in range(4)), reverse=True)
    return SynthSpec(
        n_docs=n_docs,
        n_queries=n_queries,
        segments_per_doc=(2, rng.randint(2, 5)),
        class_counts=counts,
        vocab_size=rng.randint(150, 600),
        topic_tokens_per_doc=rng.randint(4, 12),
        signal_strength=tuple(strengths),
        words_per_segment=(20, 40),
        seed=rng.randint(0, 2**32),
    )
