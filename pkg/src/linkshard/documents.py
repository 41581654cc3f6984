"""Canonical document model for hyperlinked corpora.

A corpus is a sequence of documents; each document is a list of 1-based
segments (paragraphs), and each segment carries the hyperlink anchors that
occur in its text. The canonical on-disk form is JSON-lines, one document
per line, UTF-8, LF-terminated. Serialization is byte-stable: loading a
canonical line and re-serializing it reproduces the input bytes exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator

# Separator used when a document's segments are flattened into one text.
SEGMENT_JOINER = "\n\n"


class DocumentFormatError(ValueError):
    """A document or its serialized form violates the canonical format."""


@dataclass
class Anchor:
    """One hyperlink occurrence inside a segment.

    ``target_title`` is the raw link target as written in the source.
    ``target_id`` is filled in once the title has been resolved against the
    corpus; ``None`` marks a dangling anchor, which keeps its surface text
    but never contributes a graph edge. ``[start, end)`` are character
    offsets into the owning segment's text; ``surface`` always equals that
    slice.
    """

    target_title: str
    surface: str
    start: int
    end: int
    target_id: int | None = None

    @property
    def resolved(self) -> bool:
        return self.target_id is not None


@dataclass
class Segment:
    index: int  # 1-based ordinal within the document
    text: str
    anchors: list[Anchor] = field(default_factory=list)

    def validate(self) -> None:
        if self.index < 1:
            raise DocumentFormatError(f"segment index must be >= 1, got {self.index}")
        prev_end = 0
        for anchor in self.anchors:
            if not (0 <= anchor.start < anchor.end <= len(self.text)):
                raise DocumentFormatError(
                    f"anchor span [{anchor.start}, {anchor.end}) out of bounds "
                    f"for segment {self.index} of length {len(self.text)}"
                )
            if anchor.start < prev_end:
                raise DocumentFormatError(
                    f"overlapping or unsorted anchor spans in segment {self.index}"
                )
            if self.text[anchor.start : anchor.end] != anchor.surface:
                raise DocumentFormatError(
                    f"anchor surface {anchor.surface!r} does not match segment text "
                    f"slice at [{anchor.start}, {anchor.end})"
                )
            prev_end = anchor.end


@dataclass
class Document:
    id: int
    title: str
    segments: list[Segment]
    url: str | None = None

    @property
    def word_count(self) -> int:
        """Whitespace-token count over all segment texts."""
        return sum(len(segment.text.split()) for segment in self.segments)

    def text(self) -> str:
        """Full document text: segment texts joined by blank lines."""
        return SEGMENT_JOINER.join(segment.text for segment in self.segments)

    def validate(self) -> None:
        if self.id < 0:
            raise DocumentFormatError(f"document id must be >= 0, got {self.id}")
        if not self.segments:
            raise DocumentFormatError(f"document {self.id} has no segments")
        for position, segment in enumerate(self.segments, start=1):
            if segment.index != position:
                raise DocumentFormatError(
                    f"document {self.id}: segment indices must be consecutive "
                    f"from 1, got {segment.index} at position {position}"
                )
            segment.validate()


@dataclass
class CorpusStats:
    """Bookkeeping counters accumulated across ingest steps."""

    docs_total: int = 0
    docs_kept: int = 0
    docs_dropped_short: int = 0
    anchors_total: int = 0
    anchors_resolved: int = 0
    anchors_dangling: int = 0
    title_collisions: int = 0

    def validate(self) -> None:
        if self.docs_total != self.docs_kept + self.docs_dropped_short:
            raise ValueError("docs_total != docs_kept + docs_dropped_short")
        if self.anchors_total != self.anchors_resolved + self.anchors_dangling:
            raise ValueError("anchors_total != anchors_resolved + anchors_dangling")

    def as_dict(self) -> dict:
        return {
            "docs_total": self.docs_total,
            "docs_kept": self.docs_kept,
            "docs_dropped_short": self.docs_dropped_short,
            "anchors_total": self.anchors_total,
            "anchors_resolved": self.anchors_resolved,
            "anchors_dangling": self.anchors_dangling,
            "title_collisions": self.title_collisions,
        }


def document_to_json(doc: Document) -> str:
    """Serialize one document to its canonical JSON line (without newline).

    Field order and separators are fixed so identical documents always
    produce identical bytes.
    """
    payload: dict = {"id": doc.id, "title": doc.title}
    if doc.url is not None:
        payload["url"] = doc.url
    payload["segments"] = [
        {
            "index": segment.index,
            "text": segment.text,
            "anchors": [_anchor_to_dict(anchor) for anchor in segment.anchors],
        }
        for segment in doc.segments
    ]
    return json.dumps(payload, ensure_ascii=False, separators=(",", ":"))


def _anchor_to_dict(anchor: Anchor) -> dict:
    entry: dict = {"target_title": anchor.target_title}
    if anchor.target_id is not None:
        entry["target_id"] = anchor.target_id
    entry["start"] = anchor.start
    entry["end"] = anchor.end
    return entry


def document_from_json(line: str) -> Document:
    """Parse one canonical JSON line back into a Document.

    Anchor surfaces are not stored on disk; they are recovered by slicing
    the segment text, then checked by ``validate``.
    """
    try:
        payload = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DocumentFormatError(f"invalid JSON document line: {exc}") from exc
    try:
        segments = []
        for raw_segment in payload["segments"]:
            text = raw_segment["text"]
            anchors = [
                Anchor(
                    target_title=raw_anchor["target_title"],
                    surface=text[raw_anchor["start"] : raw_anchor["end"]],
                    start=raw_anchor["start"],
                    end=raw_anchor["end"],
                    target_id=raw_anchor.get("target_id"),
                )
                for raw_anchor in raw_segment.get("anchors", [])
            ]
            segments.append(Segment(index=raw_segment["index"], text=text, anchors=anchors))
        doc = Document(
            id=payload["id"],
            title=payload["title"],
            segments=segments,
            url=payload.get("url"),
        )
    except (KeyError, TypeError) as exc:
        raise DocumentFormatError(f"malformed document record: {exc}") from exc
    doc.validate()
    return doc


def write_corpus(docs: Iterable[Document], path) -> int:
    """Write documents as canonical JSON-lines; returns the document count."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for doc in docs:
            handle.write(document_to_json(doc))
            handle.write("\n")
            count += 1
    return count


def read_corpus(path) -> Iterator[Document]:
    """Stream documents from a canonical JSON-lines file."""
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                yield document_from_json(line)

