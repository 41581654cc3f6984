"""Stage-specific listwise example sampling.

Each training example pairs one query segment with one positive and k
negative documents drawn from the query's neighborhood partition. The three
curriculum stages pull positives and negatives from progressively closer
relation classes, so negatives get harder stage by stage:

    hp    positives: strong/weak symmetric + asymmetric-in-segment
          negatives: asymmetric-outside
    shp   positives: strong/weak symmetric
          negatives: asymmetric-in-segment
    mrds  positives: strong symmetric
          negatives: weak symmetric

Queries whose positive or negative pool is empty are skipped for that
stage. Sampling is keyed per query from (seed, doc, segment), so output is
byte-identical for a given (corpus, config, seed) regardless of execution
order.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .documents import Document
from .graph import LinkGraph
from .relations import LinkRelation, partition_neighbors
from .seeding import derive_rng
from .store import DocumentStore


class Stage(str, Enum):
    HYPERLINK = "hp"  # does a link exist
    SYMMETRIC = "shp"  # is the link mutual
    MOST_RELEVANT = "mrds"  # is the mutual link front-and-center

    @classmethod
    def from_wire(cls, label: str) -> "Stage":
        for stage in cls:
            if stage.value == label:
                return stage
        raise ValueError(f"unknown stage {label!r} (expected hp, shp, or mrds)")


POSITIVE_SOURCES: dict[Stage, tuple[LinkRelation, ...]] = {
    Stage.HYPERLINK: (
        LinkRelation.STRONG_SYMMETRIC,
        LinkRelation.WEAK_SYMMETRIC,
        LinkRelation.ASYMMETRIC_IN_SEGMENT,
    ),
    Stage.SYMMETRIC: (LinkRelation.STRONG_SYMMETRIC, LinkRelation.WEAK_SYMMETRIC),
    Stage.MOST_RELEVANT: (LinkRelation.STRONG_SYMMETRIC,),
}

NEGATIVE_SOURCES: dict[Stage, tuple[LinkRelation, ...]] = {
    Stage.HYPERLINK: (LinkRelation.ASYMMETRIC_OUTSIDE,),
    Stage.SYMMETRIC: (LinkRelation.ASYMMETRIC_IN_SEGMENT,),
    Stage.MOST_RELEVANT: (LinkRelation.WEAK_SYMMETRIC,),
}


@dataclass
class SamplerConfig:
    k_neg: int = 24
    allow_replacement: bool = True  # repeat negatives when the pool is small
    max_queries_per_doc: int = 3
    seed: int = 0

    def validate(self) -> None:
        if self.k_neg < 1:
            raise ValueError(f"k_neg must be >= 1, got {self.k_neg}")
        if self.max_queries_per_doc < 1:
            raise ValueError(
                f"max_queries_per_doc must be >= 1, got {self.max_queries_per_doc}"
            )


@dataclass
class PretrainExample:
    stage: Stage
    query_doc: int
    query_segment: int
    query_text: str
    positive: int
    negatives: list[int]
    relations: dict[int, LinkRelation]  # relation of every listed document

    def validate(self, k_neg: int) -> None:
        if len(self.negatives) != k_neg:
            raise ValueError(f"expected {k_neg} negatives, got {len(self.negatives)}")
        if self.relations[self.positive] not in POSITIVE_SOURCES[self.stage]:
            raise ValueError("positive drawn outside the stage's positive classes")
        for neg in self.negatives:
            if self.relations[neg] not in NEGATIVE_SOURCES[self.stage]:
                raise ValueError("negative drawn outside the stage's negative classes")
        if self.positive in self.negatives:
            raise ValueError("positive also listed as a negative")
        if self.query_doc == self.positive or self.query_doc in self.negatives:
            raise ValueError("query document leaked into its own example")


def enumerate_queries(
    store: DocumentStore, graph: LinkGraph, cfg: SamplerConfig
) -> list[tuple[int, int]]:
    """Deterministic query stream: (doc id, segment index) pairs.

    A segment qualifies if it holds at least one resolved anchor. At most
    ``max_queries_per_doc`` segments are taken per document, preferring
    segments with more resolved anchors and breaking ties toward the lowest
    index; the selection is emitted in ascending segment order.
    """
    queries: list[tuple[int, int]] = []
    for doc in store:
        anchor_counts: dict[int, int] = {}
        for segment in doc.segments:
            resolved = sum(1 for anchor in segment.anchors if anchor.resolved)
            if resolved:
                anchor_counts[segment.index] = resolved
        if not anchor_counts:
            continue
        ranked = sorted(anchor_counts.items(), key=lambda item: (-item[1], item[0]))
        chosen = sorted(index for index, _ in ranked[: cfg.max_queries_per_doc])
        queries.extend((doc.id, index) for index in chosen)
    return queries


def sample_example(
    graph: LinkGraph,
    store: DocumentStore,
    doc_id: int,
    segment_index: int,
    stage: Stage,
    cfg: SamplerConfig,
    rng: random.Random,
) -> PretrainExample | None:
    """Draw one example for a query, or None when the stage is infeasible.

    The positive is uniform over the stage's positive pool. Negatives are
    drawn without replacement when the pool is large enough; with
    replacement when it is smaller than k_neg and replacement is allowed;
    otherwise the query is skipped (an example must carry exactly k_neg
    negatives).
    """
    partition = partition_neighbors(graph, doc_id, segment_index)
    positive_pool = sorted(
        doc
        for relation in POSITIVE_SOURCES[stage]
        for doc in partition.groups[relation]
    )
    negative_pool = sorted(
        doc
        for relation in NEGATIVE_SOURCES[stage]
        for doc in partition.groups[relation]
    )
    if not positive_pool or not negative_pool:
        return None
    if len(negative_pool) >= cfg.k_neg:
        negatives = rng.sample(negative_pool, cfg.k_neg)
    elif cfg.allow_replacement:
        negatives = [rng.choice(negative_pool) for _ in range(cfg.k_neg)]
    else:
        return None
    positive = rng.choice(positive_pool)
    relations: dict[int, LinkRelation] = {}
    for relation in LinkRelation:
        for member in partition.groups[relation]:
            relations[member] = relation
    query_doc = store.get(doc_id)
    example = PretrainExample(
        stage=stage,
        query_doc=doc_id,
        query_segment=segment_index,
        query_text=query_doc.segments[segment_index - 1].text,
        positive=positive,
        negatives=negatives,
        relations={doc: relations[doc] for doc in {positive, *negatives}},
    )
    example.validate(cfg.k_neg)
    return example


def example_to_json(example: PretrainExample, store: DocumentStore) -> str:
    """One shard line: the example with full document texts attached."""
    positive_doc = store.get(example.positive)
    payload = {
        "stage": example.stage.value,
        "query_doc": example.query_doc,
        "query_segment": example.query_segment,
        "query_text": example.query_text,
        "relation_of_positive": example.relations[example.positive].wire,
        "positive": {"id": example.positive, "text": positive_doc.text()},
        "negatives": [
            {
                "id": neg,
                "text": store.get(neg).text(),
                "relation": example.relations[neg].wire,
            }
            for neg in example.negatives
        ],
    }
    return json.dumps(payload, ensure_ascii=False, separators=(",", ":"))


@dataclass
class ShardManifest:
    config: dict
    corpus_fingerprint: str
    counts: dict[str, int] = field(default_factory=dict)
    queries_total: int = 0
    warnings: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "config": self.config,
            "corpus_fingerprint": self.corpus_fingerprint,
            "queries_total": self.queries_total,
            "counts": self.counts,
            "warnings": self.warnings,
        }


def generate_shards(
    store: DocumentStore,
    graph: LinkGraph,
    stages: list[Stage],
    cfg: SamplerConfig,
    out_dir: str | Path,
) -> ShardManifest:
    """Stream every query through the sampler and write one shard per stage.

    Output is byte-identical for identical (corpus, config, seed): the
    query order is deterministic and each query's draws are keyed from
    (seed, stage, doc, segment).
    """
    cfg.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    queries = enumerate_queries(store, graph, cfg)
    manifest = ShardManifest(
        config={
            "k_neg": cfg.k_neg,
            "allow_replacement": cfg.allow_replacement,
            "max_queries_per_doc": cfg.max_queries_per_doc,
            "seed": cfg.seed,
            "stages": [stage.value for stage in stages],
        },
        corpus_fingerprint=store.fingerprint,
        queries_total=len(queries),
    )
    for stage in stages:
        shard_path = out_dir / f"{stage.value}.jsonl"
        count = 0
        with open(shard_path, "w", encoding="utf-8", newline="\n") as handle:
            for doc_id, segment_index in queries:
                rng = derive_rng(cfg.seed, stage.value, doc_id, segment_index)
                example = sample_example(graph, store, doc_id, segment_index, stage, cfg, rng)
                if example is None:
                    continue
                handle.write(example_to_json(example, store))
                handle.write("\n")
                count += 1
        manifest.counts[stage.value] = count
        if count == 0:
            manifest.warnings.append(f"stage {stage.value} produced no examples")
    manifest_path = out_dir / "shards_manifest.json"
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(manifest.as_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")
    return manifest
