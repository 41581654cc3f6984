"""Masked-shard reading and model input construction.

Shard records pair one query segment with one positive and k negative
documents; the positive pair additionally carries its tokens and a mask
plan (token index, action, original, replacement). Model inputs follow
the cross-encoder convention: [CLS] query [SEP] document [SEP]. When a
pair exceeds the length budget the document side is truncated first,
then the query; the three markers always survive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .text import Vocab, tokenize_text

ACTION_MASK = "mask"
ACTION_RANDOM = "random"
ACTION_KEEP = "keep"


def pair_layout(query_len: int, doc_len: int, max_len: int) -> tuple[int, int]:
    """How many query/document tokens survive the length budget."""
    if max_len < 4:
        raise ValueError(f"max_len must be at least 4, got {max_len}")
    budget = max_len - 3  # [CLS] + two [SEP]
    doc_keep = min(doc_len, max(0, budget - query_len))
    query_keep = min(query_len, budget)
    return query_keep, doc_keep


def build_input(query_ids: list[int], doc_ids: list[int], max_len: int, vocab: Vocab) -> list[int]:
    """[CLS] q [SEP] d [SEP] with document-first truncation."""
    query_keep, doc_keep = pair_layout(len(query_ids), len(doc_ids), max_len)
    return (
        [vocab.cls_id]
        + query_ids[:query_keep]
        + [vocab.sep_id]
        + doc_ids[:doc_keep]
        + [vocab.sep_id]
    )


@dataclass
class MaskedPositive:
    """The positive pair's inputs: clean ids for scoring, masked ids plus
    prediction positions/targets for the token-recovery objective."""

    clean_ids: list[int]
    masked_ids: list[int]
    positions: list[int]  # positions in the built sequence
    targets: list[int]  # vocabulary ids of the original tokens


def masked_positive_from_record(record: dict, vocab: Vocab, max_len: int) -> MaskedPositive:
    tokens: list[str] = record["tokens"]
    boundary: int = record["query_token_count"]
    query_ids = vocab.encode(tokens[:boundary])
    doc_ids = vocab.encode(tokens[boundary:])
    query_keep, doc_keep = pair_layout(len(query_ids), len(doc_ids), max_len)
    clean_ids = build_input(query_ids, doc_ids, max_len, vocab)
    masked_ids = list(clean_ids)
    positions: list[int] = []
    targets: list[int] = []
    for index, action, original, replacement in record["mask_plan"]:
        if index < boundary:
            if index >= query_keep:
                continue  # truncated away
            position = 1 + index
        else:
            doc_index = index - boundary
            if doc_index >= doc_keep:
                continue
            position = 2 + query_keep + doc_index
        if action == ACTION_MASK:
            masked_ids[position] = vocab.mask_id
        elif action == ACTION_RANDOM:
            masked_ids[position] = vocab.id_of(replacement)
        elif action != ACTION_KEEP:
            raise ValueError(f"unknown mask action {action!r}")
        positions.append(position)
        targets.append(vocab.id_of(original))
    return MaskedPositive(clean_ids, masked_ids, positions, targets)


@dataclass
class TrainingRecord:
    query_doc: int
    query_segment: int
    query_ids: list[int]
    positive_id: int
    negative_ids: list[int]
    pair_inputs: list[list[int]]  # scoring inputs: positive first, then negatives
    positive: MaskedPositive

    @property
    def n_pairs(self) -> int:
        return len(self.pair_inputs)


def record_from_json(record: dict, vocab: Vocab, max_len: int) -> TrainingRecord:
    query_ids = vocab.encode(tokenize_text(record["query_text"]))
    pair_inputs = []
    positive_doc_ids = vocab.encode(tokenize_text(record["positive"]["text"]))
    pair_inputs.append(build_input(query_ids, positive_doc_ids, max_len, vocab))
    for negative in record["negatives"]:
        doc_ids = vocab.encode(tokenize_text(negative["text"]))
        pair_inputs.append(build_input(query_ids, doc_ids, max_len, vocab))
    return TrainingRecord(
        query_doc=record["query_doc"],
        query_segment=record["query_segment"],
        query_ids=query_ids,
        positive_id=record["positive"]["id"],
        negative_ids=[negative["id"] for negative in record["negatives"]],
        pair_inputs=pair_inputs,
        positive=masked_positive_from_record(record, vocab, max_len),
    )


def iter_shard(path: str | Path) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                yield json.loads(line)


def load_records(
    path: str | Path,
    vocab: Vocab,
    max_len: int,
    holdout_mod: int = 0,
    holdout_only: bool = False,
) -> list[TrainingRecord]:
    """Load a masked shard; with holdout_mod > 0, records whose query doc id
    is 0 modulo it are reserved for evaluation (excluded unless
    ``holdout_only``)."""
    records = []
    for raw in iter_shard(path):
        held_out = holdout_mod > 0 and raw["query_doc"] % holdout_mod == 0
        if held_out != holdout_only and holdout_mod > 0:
            continue
        records.append(record_from_json(raw, vocab, max_len))
    return records
