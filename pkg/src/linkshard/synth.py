"""Synthetic hyperlinked corpora with planted link structure and a planted
lexical relevance signal.

Documents are split into query documents and a neighbor pool. Each query
document's lead segment is its designated query segment; its anchors
realize exactly the requested number of neighbors per relation class, and
back-anchors land in the neighbor's first segment (strong symmetric) or a
later one (weak symmetric). Because pool documents are never queries and
query documents only link into the pool, the classifier's partition of
each planted query equals the emitted ground truth by construction.

Documents look wiki-like: the lead segment opens with the document's own
title token. Back-anchors therefore put the query's title inside a strong
neighbor's lead, and anchors inside the query segment put each in-segment
neighbor's title inside the query text.

The relevance signal is lexical: each query document owns a set of topic
tokens - its own title plus drawn words - all present in its query
segment; a planted neighbor of class c carries each topic token
independently with probability ``signal_strength[c]``, so token overlap
with the query decreases from class to class. Shared topics land in the
neighbor's first segment (the lead acts as the summary), which keeps the
signal visible to consumers that truncate long documents.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .documents import Anchor, Document, Segment, write_corpus
from .relations import LinkRelation

MIN_SYNTH_WORDS = 110  # stay clear of the ingest cleaning threshold


class SynthSpecError(ValueError):
    """The spec is infeasible; the message names the violated constraint."""


@dataclass
class SynthSpec:
    n_docs: int = 200
    n_queries: int = 72
    segments_per_doc: tuple[int, int] = (3, 5)
    class_counts: dict[LinkRelation, int] = field(
        default_factory=lambda: {relation: 3 for relation in LinkRelation}
    )
    vocab_size: int = 500
    topic_tokens_per_doc: int = 12
    signal_strength: tuple[float, float, float, float] = (1.0, 0.72, 0.45, 0.18)
    words_per_segment: tuple[int, int] = (14, 22)
    seed: int = 7

    def neighbors_per_query(self) -> int:
        return sum(self.class_counts.values())

    def validate(self) -> None:
        if self.n_docs < 1:
            raise SynthSpecError("n_docs must be >= 1")
        if not 0 <= self.n_queries <= self.n_docs:
            raise SynthSpecError("n_queries must be between 0 and n_docs")
        lo, hi = self.segments_per_doc
        if not 1 <= lo <= hi:
            raise SynthSpecError("segments_per_doc must satisfy 1 <= lo <= hi")
        if any(count < 0 for count in self.class_counts.values()):
            raise SynthSpecError("class counts must be non-negative")
        pool = self.n_docs - self.n_queries
        if self.neighbors_per_query() > 0 and pool < self.neighbors_per_query():
            raise SynthSpecError(
                f"neighbor pool of {pool} documents cannot supply "
                f"{self.neighbors_per_query()} distinct neighbors per query"
            )
        if self.class_counts.get(LinkRelation.WEAK_SYMMETRIC, 0) > 0 and lo < 2:
            raise SynthSpecError(
                "weak symmetric neighbors need back-anchors beyond segment 1; "
                "segments_per_doc minimum must be >= 2"
            )
        if self.class_counts.get(LinkRelation.ASYMMETRIC_OUTSIDE, 0) > 0 and lo < 2:
            raise SynthSpecError(
                "asymmetric-outside anchors need a second segment in query "
                "documents; segments_per_doc minimum must be >= 2"
            )
        if len(self.signal_strength) != len(LinkRelation):
            raise SynthSpecError("signal_strength needs one probability per relation class")
        if any(not 0.0 <= p <= 1.0 for p in self.signal_strength):
            raise SynthSpecError("signal_strength probabilities must be in [0, 1]")
        if any(
            earlier < later
            for earlier, later in zip(self.signal_strength, self.signal_strength[1:])
        ):
            raise SynthSpecError("signal_strength must be non-increasing across classes")
        if self.vocab_size < self.topic_tokens_per_doc + 10:
            raise SynthSpecError("vocab_size too small for the requested topic pools")
        if self.words_per_segment[0] < 1 or self.words_per_segment[0] > self.words_per_segment[1]:
            raise SynthSpecError("words_per_segment must satisfy 1 <= lo <= hi")


def reference_spec() -> SynthSpec:
    """The frozen 200-document spec used by the acceptance suite and the
    desk-scale training run."""
    return SynthSpec()


@dataclass
class TruthRow:
    query_doc: int
    segment: int
    neighbor: int
    relation: LinkRelation


def _doc_title(doc_id: int) -> str:
    return f"entry{doc_id:04d}"


class _SegmentDraft:
    """Word/anchor item list for one segment; rendered space-joined."""

    def __init__(self, pinned: int = 0) -> None:
        self.items: list[tuple[str, int | None]] = []  # (word, anchor target or None)
        self.pinned = pinned  # leading items random insertion may not displace

    def add_words(self, words: Iterable[str]) -> None:
        self.items.extend((word, None) for word in words)

    def insert_word(self, rng: random.Random, word: str) -> None:
        self.items.insert(rng.randint(self.pinned, len(self.items)), (word, None))

    def insert_anchor(self, rng: random.Random, target: int) -> None:
        self.items.insert(rng.randint(self.pinned, len(self.items)), (_doc_title(target), target))

    def word_count(self) -> int:
        return len(self.items)

    def render(self, index: int) -> Segment:
        words: list[str] = []
        anchors: list[Anchor] = []
        offset = 0
        for word, target in self.items:
            if words:
                offset += 1  # joining space
            if target is not None:
                anchors.append(
                    Anchor(
                        target_title=_doc_title(target),
                        surface=word,
                        start=offset,
                        end=offset + len(word),
                    )
                )
            words.append(word)
            offset += len(word)
        return Segment(index=index, text=" ".join(words), anchors=anchors)


def generate(spec: SynthSpec) -> tuple[list[Document], list[TruthRow]]:
    """Build the corpus and its ground-truth relation table.

    Deterministic per seed; documents come out in id order with unresolved
    anchor titles, ready for the normal ingest pipeline.
    """
    spec.validate()
    rng = random.Random(spec.seed)
    words = [f"w{i:05d}" for i in range(spec.vocab_size)]
    segment_counts = [
        rng.randint(spec.segments_per_doc[0], spec.segments_per_doc[1])
        for _ in range(spec.n_docs)
    ]
    # A document's own title is its most identifying topic token; the rest
    # are drawn from the shared word list.
    topics = [
        [_doc_title(doc_id)] + rng.sample(words, spec.topic_tokens_per_doc - 1)
        for doc_id in range(spec.n_docs)
    ]
    pool = list(range(spec.n_queries, spec.n_docs))

    # Layout phase: decide anchors, back-anchors, and topic injections before
    # any text exists. injections[doc][segment] collects plain words to add;
    # anchors[doc][segment] collects link targets.
    anchors: list[dict[int, list[int]]] = [dict() for _ in range(spec.n_docs)]
    injections: list[dict[int, list[str]]] = [dict() for _ in range(spec.n_docs)]
    truth: list[TruthRow] = []

    def add_anchor(doc_id: int, segment: int, target: int) -> None:
        anchors[doc_id].setdefault(segment, []).append(target)

    def add_injection(doc_id: int, segment: int, word: str) -> None:
        injections[doc_id].setdefault(segment, []).append(word)

    for query_doc in range(spec.n_queries):
        n_segments = segment_counts[query_doc]
        query_segment = 1  # the lead doubles as the query segment
        needed = spec.neighbors_per_query()
        neighbors = rng.sample(pool, needed) if needed else []
        cursor = 0
        for relation in LinkRelation:
            for _ in range(spec.class_counts.get(relation, 0)):
                neighbor = neighbors[cursor]
                cursor += 1
                if relation is LinkRelation.ASYMMETRIC_OUTSIDE:
                    other_segments = [s for s in range(1, n_segments + 1) if s != query_segment]
                    add_anchor(query_doc, rng.choice(other_segments), neighbor)
                else:
                    add_anchor(query_doc, query_segment, neighbor)
                if relation is LinkRelation.STRONG_SYMMETRIC:
                    add_anchor(neighbor, 1, query_doc)
                elif relation is LinkRelation.WEAK_SYMMETRIC:
                    add_anchor(neighbor, rng.randint(2, segment_counts[neighbor]), query_doc)
                share_p = spec.signal_strength[relation - 1]
                for token in topics[query_doc]:
                    if rng.random() < share_p:
                        add_injection(neighbor, 1, token)
                truth.append(TruthRow(query_doc, query_segment, neighbor, relation))
        # The query segment carries the full topic set; its title is already
        # pinned at the head of the lead.
        for token in topics[query_doc][1:]:
            add_injection(query_doc, query_segment, token)

    # Text phase: filler plus the planned insertions, padded past the
    # cleaning threshold.
    docs: list[Document] = []
    for doc_id in range(spec.n_docs):
        n_segments = segment_counts[doc_id]
        drafts = []
        for segment in range(1, n_segments + 1):
            draft = _SegmentDraft(pinned=1 if segment == 1 else 0)
            if segment == 1:
                draft.add_words([_doc_title(doc_id)])  # wiki-style lead
            draft.add_words(
                rng.choices(words, k=rng.randint(*spec.words_per_segment))
            )
            for word in injections[doc_id].get(segment, []):
                draft.insert_word(rng, word)
            for target in anchors[doc_id].get(segment, []):
                draft.insert_anchor(rng, target)
            drafts.append(draft)
        shortfall = MIN_SYNTH_WORDS - sum(draft.word_count() for draft in drafts)
        if shortfall > 0:
            drafts[-1].add_words(rng.choices(words, k=shortfall))
        docs.append(
            Document(
                id=doc_id,
                title=_doc_title(doc_id),
                segments=[draft.render(i + 1) for i, draft in enumerate(drafts)],
            )
        )
    return docs, truth


def write_truth(rows: list[TruthRow], path: str | Path) -> None:
    """Tab-separated ground truth: query_doc, segment, neighbor, relation."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("query_doc\tsegment\tneighbor\trelation\n")
        for row in rows:
            handle.write(
                f"{row.query_doc}\t{row.segment}\t{row.neighbor}\t{row.relation.wire}\n"
            )


def read_truth(path: str | Path) -> list[TruthRow]:
    rows: list[TruthRow] = []
    with open(path, "r", encoding="utf-8") as handle:
        header = handle.readline()
        if header.strip() != "query_doc\tsegment\tneighbor\trelation":
            raise ValueError(f"unexpected truth table header: {header!r}")
        for line in handle:
            line = line.strip()
            if not line:
                continue
            query_doc, segment, neighbor, relation = line.split("\t")
            rows.append(
                TruthRow(
                    int(query_doc), int(segment), int(neighbor), LinkRelation.from_wire(relation)
                )
            )
    return rows


def generate_files(spec: SynthSpec, corpus_path: str | Path, truth_path: str | Path) -> tuple[int, int]:
    """Generate and persist corpus + truth table; returns (docs, truth rows)."""
    docs, truth = generate(spec)
    count = write_corpus(docs, corpus_path)
    write_truth(truth, truth_path)
    return count, len(truth)
