"""Ordering evaluation against a labeled corpus.

Scores every (query segment, linked neighbor) pair of a ground-truth
table, reports mean score per relation class, and for each class pair
(i, j) with i more relevant than j, the fraction of cross pairs the model
orders correctly (strict inequality). Classes without members are
excluded and flagged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import torch

from .data import build_input
from .model import pad_batch
from .text import Vocab, tokenize_text
from .train import TrainState

RELATIONS = (
    "strong_symmetric",
    "weak_symmetric",
    "asymmetric_in_segment",
    "asymmetric_outside",
)

SEGMENT_JOINER = "\n\n"


@dataclass
class CorpusDoc:
    id: int
    segments: list[str]

    def text(self) -> str:
        return SEGMENT_JOINER.join(self.segments)


def read_corpus(path: str | Path) -> dict[int, CorpusDoc]:
    docs: dict[int, CorpusDoc] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            payload = json.loads(line)
            docs[payload["id"]] = CorpusDoc(
                id=payload["id"],
                segments=[segment["text"] for segment in payload["segments"]],
            )
    return docs


@dataclass
class TruthEntry:
    query_doc: int
    segment: int
    neighbor: int
    relation: str


def read_truth(path: str | Path) -> list[TruthEntry]:
    entries: list[TruthEntry] = []
    with open(path, "r", encoding="utf-8") as handle:
        header = handle.readline().strip()
        if header != "query_doc\tsegment\tneighbor\trelation":
            raise ValueError(f"unexpected truth table header {header!r}")
        for line in handle:
            line = line.strip()
            if not line:
                continue
            query_doc, segment, neighbor, relation = line.split("\t")
            if relation not in RELATIONS:
                raise ValueError(f"unknown relation {relation!r}")
            entries.append(TruthEntry(int(query_doc), int(segment), int(neighbor), relation))
    return entries


@dataclass
class OrderingReport:
    queries: int
    pairs_scored: int
    mean_scores: dict[str, float]
    pairwise_accuracy: dict[str, float]  # "relA>relB" -> fraction ordered correctly
    empty_classes: list[str] = field(default_factory=list)

    def adjacent_accuracies(self) -> list[float]:
        keys = [f"{a}>{b}" for a, b in zip(RELATIONS, RELATIONS[1:])]
        return [self.pairwise_accuracy[key] for key in keys if key in self.pairwise_accuracy]

    def as_dict(self) -> dict:
        return {
            "queries": self.queries,
            "pairs_scored": self.pairs_scored,
            "mean_scores": self.mean_scores,
            "pairwise_accuracy": self.pairwise_accuracy,
            "empty_classes": self.empty_classes,
        }


ScoreFn = Callable[[str, Sequence[str]], list[float]]
"""(query text, document texts) -> one score per document."""


def model_score_fn(state: TrainState, vocab: Vocab) -> ScoreFn:
    model = state.model
    model.eval()

    def score(query_text: str, doc_texts: Sequence[str]) -> list[float]:
        query_ids = vocab.encode(tokenize_text(query_text))
        inputs = [
            build_input(query_ids, vocab.encode(tokenize_text(text)), model.cfg.max_len, vocab)
            for text in doc_texts
        ]
        with torch.no_grad():
            return model.score(pad_batch(inputs, model.pad_id)).tolist()

    return score


def eval_ordering(
    score_fn: ScoreFn,
    corpus: dict[int, CorpusDoc],
    truth: list[TruthEntry],
    query_filter: Callable[[int], bool] | None = None,
) -> OrderingReport:
    """Aggregate class means and cross-class ordering over all queries that
    pass the filter."""
    by_query: dict[tuple[int, int], list[TruthEntry]] = {}
    for entry in truth:
        if query_filter is not None and not query_filter(entry.query_doc):
            continue
        by_query.setdefault((entry.query_doc, entry.segment), []).append(entry)

    score_sums = {relation: 0.0 for relation in RELATIONS}
    score_counts = {relation: 0 for relation in RELATIONS}
    pair_wins = {}
    pair_totals = {}
    pairs_scored = 0
    for (query_doc, segment), entries in sorted(by_query.items()):
        query_text = corpus[query_doc].segments[segment - 1]
        doc_texts = [corpus[entry.neighbor].text() for entry in entries]
        scores = score_fn(query_text, doc_texts)
        pairs_scored += len(scores)
        by_relation: dict[str, list[float]] = {}
        for entry, score in zip(entries, scores):
            score_sums[entry.relation] += score
            score_counts[entry.relation] += 1
            by_relation.setdefault(entry.relation, []).append(score)
        for i, better in enumerate(RELATIONS):
            for worse in RELATIONS[i + 1 :]:
                if better not in by_relation or worse not in by_relation:
                    continue
                key = f"{better}>{worse}"
                for score_better in by_relation[better]:
                    for score_worse in by_relation[worse]:
                        pair_totals[key] = pair_totals.get(key, 0) + 1
                        if score_better > score_worse:
                            pair_wins[key] = pair_wins.get(key, 0) + 1

    empty = [relation for relation in RELATIONS if score_counts[relation] == 0]
    return OrderingReport(
        queries=len(by_query),
        pairs_scored=pairs_scored,
        mean_scores={
            relation: score_sums[relation] / score_counts[relation]
            for relation in RELATIONS
            if score_counts[relation]
        },
        pairwise_accuracy={
            key: pair_wins.get(key, 0) / pair_totals[key] for key in sorted(pair_totals)
        },
        empty_classes=empty,
    )
