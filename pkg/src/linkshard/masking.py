"""Anchor-aware mask planning over tokenized example text.

Tokens overlapping an anchor span are selected for masking at an elevated
rate (default 0.50) versus the base rate (default 0.15); each selected
token is then replaced by the mask symbol, replaced by a random vocabulary
token, or kept unchanged with probabilities 0.80/0.10/0.10. Plans record
the original token (and any replacement) per decision, so applying a plan
and then restoring originals reconstructs the input exactly.

All randomness is hash-keyed per (example, token position): decisions for a
token depend only on its own stream and flags, never on neighboring tokens,
which makes batch-parallel planning order-independent.
"""

from __future__ import annotations

import json
import random
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .documents import Document, SEGMENT_JOINER
from .sampling import Stage
from .seeding import derive_key, derive_rng, unit_floats
from .store import DocumentStore

# Words are maximal alphanumeric runs; every other non-space character is a
# standalone punctuation token.
TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)

PAD, CLS, SEP, MASK, UNK = "[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]"
SPECIAL_TOKENS = (PAD, CLS, SEP, MASK, UNK)


class MaskConfigError(ValueError):
    pass


@dataclass
class TokenSpan:
    text: str  # lowercased token
    start: int  # character offsets into the source text
    end: int
    is_anchor: bool = False
    is_special: bool = False


class MaskAction(str, Enum):
    MASK = "mask"
    RANDOM_REPLACE = "random"
    KEEP = "keep"


@dataclass(frozen=True)
class MaskDecision:
    index: int
    action: MaskAction
    original: str
    replacement: str | None = None  # set for RANDOM_REPLACE only


@dataclass
class MaskPlan:
    decisions: list[MaskDecision]
    seed: int  # per-example stream key; enough to re-derive the plan

    def validate(self, tokens: Sequence[TokenSpan]) -> None:
        previous = -1
        for decision in self.decisions:
            if not 0 <= decision.index < len(tokens):
                raise ValueError(f"mask decision index {decision.index} out of range")
            if decision.index <= previous:
                raise ValueError("mask decision indices must be strictly increasing")
            if tokens[decision.index].is_special:
                raise ValueError("mask plan touches a special token")
            previous = decision.index


@dataclass
class MaskConfig:
    anchor_ratio: float = 0.50
    base_ratio: float = 0.15
    action_split: tuple[float, float, float] = (0.80, 0.10, 0.10)
    seed: int = 0
    mask_doc_side_anchors: bool = True  # False restricts anchor masking to the query side
    mask_all_pairs: bool = False  # also plan masks for negative-pair inputs

    def validate(self) -> None:
        for name, value in (("anchor_ratio", self.anchor_ratio), ("base_ratio", self.base_ratio)):
            if not 0.0 <= value <= 1.0:
                raise MaskConfigError(f"{name} must be in [0, 1], got {value}")
        if abs(sum(self.action_split) - 1.0) > 1e-9:
            raise MaskConfigError(f"action split must sum to 1, got {self.action_split}")
        if any(p < 0 for p in self.action_split):
            raise MaskConfigError(f"action split must be non-negative, got {self.action_split}")


class Vocabulary:
    """Frequency-built vocabulary: specials first, then top tokens by count.

    File format: one token per line; line number (0-based) is the id.
    """

    def __init__(self, tokens: list[str]):
        if tokens[: len(SPECIAL_TOKENS)] != list(SPECIAL_TOKENS):
            raise MaskConfigError(f"vocabulary must start with {SPECIAL_TOKENS}")
        self.tokens = tokens
        self.index = {token: i for i, token in enumerate(tokens)}
        if len(self.index) != len(tokens):
            raise MaskConfigError("vocabulary contains duplicate tokens")
        self.replacement_pool = tokens[len(SPECIAL_TOKENS) :]

    def __len__(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        return self.index.get(token, self.index[UNK])

    @classmethod
    def build(cls, texts: Iterable[str], size: int = 5000) -> "Vocabulary":
        """Top ``size`` tokens by frequency (ties broken alphabetically),
        after the special tokens."""
        counts: Counter[str] = Counter()
        for text in texts:
            counts.update(match.group().lower() for match in TOKEN_RE.finditer(text))
        ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
        keep = max(0, size - len(SPECIAL_TOKENS))
        return cls(list(SPECIAL_TOKENS) + [token for token, _ in ranked[:keep]])

    @classmethod
    def from_store(cls, store: DocumentStore, size: int = 5000) -> "Vocabulary":
        return cls.build((doc.text() for doc in store), size=size)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            for token in self.tokens:
                handle.write(token + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        with open(path, "r", encoding="utf-8") as handle:
            return cls([line.rstrip("\n") for line in handle if line.rstrip("\n")])


def tokenize(text: str, anchor_spans: Sequence[tuple[int, int]] = ()) -> list[TokenSpan]:
    """Lowercased word/punctuation tokens with exact source offsets.

    A token is flagged as anchor when its character range intersects any of
    the given half-open spans (overlap, not containment, so a trailing
    punctuation token straddling a span boundary still counts).
    """
    tokens: list[TokenSpan] = []
    for match in TOKEN_RE.finditer(text):
        start, end = match.span()
        is_anchor = any(start < span_end and span_start < end for span_start, span_end in anchor_spans)
        tokens.append(TokenSpan(match.group().lower(), start, end, is_anchor=is_anchor))
    return tokens


def plan_mask(
    tokens: Sequence[TokenSpan],
    cfg: MaskConfig,
    rng: random.Random,
    vocab: Vocabulary,
) -> MaskPlan:
    """Plan masking for one token sequence.

    ``rng`` must be seeded per example; the plan pulls one 64-bit stream key
    from it and derives all per-token draws from that key, so the decision
    at position i is independent of every other position.
    """
    cfg.validate()
    stream_key = rng.getrandbits(64)
    mask_p, random_p, _keep_p = cfg.action_split
    decisions: list[MaskDecision] = []
    for i, token in enumerate(tokens):
        if token.is_special:
            continue
        select_ratio = cfg.anchor_ratio if token.is_anchor else cfg.base_ratio
        u_select, u_action, u_replace = unit_floats(stream_key, i)
        if u_select >= select_ratio:
            continue
        if u_action < mask_p:
            decisions.append(MaskDecision(i, MaskAction.MASK, token.text))
        elif u_action < mask_p + random_p:
            if not vocab.replacement_pool:
                raise MaskConfigError(
                    "random replacement requested but the vocabulary has no non-special tokens"
                )
            replacement = vocab.replacement_pool[int(u_replace * len(vocab.replacement_pool))]
            decisions.append(MaskDecision(i, MaskAction.RANDOM_REPLACE, token.text, replacement))
        else:
            decisions.append(MaskDecision(i, MaskAction.KEEP, token.text))
    return MaskPlan(decisions=decisions, seed=stream_key)


def apply_mask(tokens: Sequence[TokenSpan], plan: MaskPlan, vocab: Vocabulary) -> list[str]:
    """Materialize a plan: returns the masked token strings."""
    plan.validate(tokens)
    out = [token.text for token in tokens]
    for decision in plan.decisions:
        if decision.action is MaskAction.MASK:
            out[decision.index] = MASK
        elif decision.action is MaskAction.RANDOM_REPLACE:
            assert decision.replacement is not None
            out[decision.index] = decision.replacement
        # KEEP leaves the planned position unchanged (but it still trains).
    return out


def restore_originals(masked: Sequence[str], plan: MaskPlan) -> list[str]:
    """Inverse of apply_mask over the planned positions."""
    out = list(masked)
    for decision in plan.decisions:
        out[decision.index] = decision.original
    return out


def _doc_anchor_spans(doc: Document, target_id: int) -> list[tuple[int, int]]:
    """Spans of anchors pointing at ``target_id``, as offsets into the
    document's flattened text."""
    spans: list[tuple[int, int]] = []
    offset = 0
    for segment in doc.segments:
        for anchor in segment.anchors:
            if anchor.target_id == target_id:
                spans.append((offset + anchor.start, offset + anchor.end))
        offset += len(segment.text) + len(SEGMENT_JOINER)
    return spans


def _segment_anchor_spans(doc: Document, segment_index: int, target_id: int) -> list[tuple[int, int]]:
    segment = doc.segments[segment_index - 1]
    return [
        (anchor.start, anchor.end)
        for anchor in segment.anchors
        if anchor.target_id == target_id
    ]


def _plan_payload(plan: MaskPlan) -> list[list]:
    return [
        [decision.index, decision.action.value, decision.original, decision.replacement]
        for decision in plan.decisions
    ]


def plan_pair_tokens(
    store: DocumentStore,
    record: dict,
    pair_doc_id: int,
    cfg: MaskConfig,
    vocab: Vocabulary,
) -> dict:
    """Tokenize one (query, document) pair of a shard record and plan its mask.

    The anchor spans fed to the tokenizer are the links that connect the
    pair: on the query side, anchors in the query segment pointing at the
    paired document; on the document side (unless disabled), anchors in the
    paired document pointing back at the query document. The mask stream is
    keyed from (seed, stage, query doc, query segment, paired doc).
    """
    query_doc = store.get(record["query_doc"])
    pair_doc = store.get(pair_doc_id)
    query_spans = _segment_anchor_spans(query_doc, record["query_segment"], pair_doc_id)
    doc_spans = (
        _doc_anchor_spans(pair_doc, record["query_doc"]) if cfg.mask_doc_side_anchors else []
    )
    query_tokens = tokenize(record["query_text"], query_spans)
    doc_tokens = tokenize(pair_doc.text(), doc_spans)
    tokens = query_tokens + doc_tokens
    rng = derive_rng(
        cfg.seed, record["stage"], record["query_doc"], record["query_segment"], pair_doc_id
    )
    plan = plan_mask(tokens, cfg, rng, vocab)
    return {
        "tokens": [token.text for token in tokens],
        "query_token_count": len(query_tokens),
        "mask_seed": plan.seed,
        "mask_plan": _plan_payload(plan),
    }


def mask_record(store: DocumentStore, record: dict, cfg: MaskConfig, vocab: Vocabulary) -> dict:
    """Extend one shard record with tokens and mask plans.

    The positive pair is always planned; with ``mask_all_pairs`` every
    negative pair gets its own tokens and plan as well.
    """
    out = dict(record)
    out.update(plan_pair_tokens(store, record, record["positive"]["id"], cfg, vocab))
    if cfg.mask_all_pairs:
        masked_negatives = []
        for negative in record["negatives"]:
            entry = dict(negative)
            entry.update(plan_pair_tokens(store, record, negative["id"], cfg, vocab))
            masked_negatives.append(entry)
        out["negatives"] = masked_negatives
    return out


def mask_shard_file(
    store: DocumentStore,
    shard_path: str | Path,
    out_path: str | Path,
    cfg: MaskConfig,
    vocab: Vocabulary,
    threads: int = 1,
) -> int:
    """Write the masked edition of one shard; returns the record count.

    Records are independent (per-example stream keys), so the optional
    thread pool cannot change the output, only the wall time.
    """
    cfg.validate()
    with open(shard_path, "r", encoding="utf-8") as handle:
        records = [json.loads(line) for line in handle if line.strip()]

    def process(record: dict) -> str:
        return json.dumps(mask_record(store, record, cfg, vocab), ensure_ascii=False, separators=(",", ":"))

    if threads > 1 and len(records) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            lines = list(pool.map(process, records))
    else:
        lines = [process(record) for record in records]
    with open(out_path, "w", encoding="utf-8", newline="\n") as handle:
        for line in lines:
            handle.write(line)
            handle.write("\n")
    return len(lines)
