"""Corpus ingestion: parse hyperlink-preserving extractor output, resolve
anchor titles to document ids, and apply the short-document cleaning rule.

The expected input is WikiExtractor-style text: ``<doc id=.. url=.. title=..>``
blocks whose body consists of paragraphs separated by blank lines, with
hyperlinks encoded as ``<a href="Target Title">surface</a>``. Each paragraph
becomes one segment; anchor tags are stripped and their spans recorded
against the stripped text.
"""

from __future__ import annotations

import re
import urllib.parse
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Iterator

from .documents import Anchor, CorpusStats, Document, Segment, document_from_json

DOC_OPEN_RE = re.compile(r'<doc id="(?P<id>[^"]*)" url="(?P<url>[^"]*)" title="(?P<title>[^"]+)">')
DOC_CLOSE = "</doc>"
ANCHOR_OPEN_RE = re.compile(r'<a href="(?P<href>[^"]*)">')
ANCHOR_CLOSE = "</a>"

# Documents shorter than this many whitespace tokens are removed by clean_corpus.
MIN_WORDS = 100


@dataclass
class ParseIssue:
    byte_offset: int
    message: str


@dataclass
class ParseReport:
    """Record-level errors (skipped blocks) and warnings collected while parsing."""

    errors: list[ParseIssue] = field(default_factory=list)
    warnings: list[ParseIssue] = field(default_factory=list)

    def error(self, offset: int, message: str) -> None:
        self.errors.append(ParseIssue(offset, message))

    def warn(self, offset: int, message: str) -> None:
        self.warnings.append(ParseIssue(offset, message))


def normalize_title(title: str) -> str:
    """Uppercase the first character (wiki convention); no other rewriting."""
    return title[:1].upper() + title[1:]


def strip_anchor_markup(raw: str, offset: int = 0, report: ParseReport | None = None) -> tuple[str, list[Anchor]]:
    """Strip ``<a href=..>..</a>`` markup from one paragraph.

    Returns the cleaned text plus anchors whose spans index into it. An
    anchor tag without a closing tag leaves the remainder of the paragraph
    untouched (kept as plain text) and counts as a parse warning.
    """
    out: list[str] = []
    anchors: list[Anchor] = []
    pos = 0
    clean_len = 0
    while True:
        match = ANCHOR_OPEN_RE.search(raw, pos)
        if match is None:
            out.append(raw[pos:])
            break
        out.append(raw[pos : match.start()])
        clean_len += match.start() - pos
        close = raw.find(ANCHOR_CLOSE, match.end())
        if close == -1:
            if report is not None:
                report.warn(offset, "unclosed anchor tag; remainder kept as plain text")
            out.append(raw[match.start() :])
            break
        surface = raw[match.end() : close]
        # Extractor output URL-quotes titles; undo that to get the raw title.
        title = urllib.parse.unquote(match.group("href"))
        anchors.append(
            Anchor(
                target_title=title,
                surface=surface,
                start=clean_len,
                end=clean_len + len(surface),
            )
        )
        out.append(surface)
        clean_len += len(surface)
        pos = close + len(ANCHOR_CLOSE)
    return "".join(out), anchors


def _build_document(
    doc_id: int,
    title: str,
    url: str | None,
    paragraphs: list[tuple[int, str]],
    report: ParseReport,
) -> Document | None:
    """Assemble a Document from raw paragraphs, dropping empty-surface ones.

    A leading paragraph that merely repeats the title (the extractor writes
    the title as the first line of every block) is dropped so that segment 1
    is the real lead paragraph.
    """
    if paragraphs and paragraphs[0][1].strip() == title.strip():
        paragraphs = paragraphs[1:]
    segments: list[Segment] = []
    for offset, raw in paragraphs:
        text, anchors = strip_anchor_markup(raw, offset, report)
        if not text.strip():
            continue
        segments.append(Segment(index=len(segments) + 1, text=text, anchors=anchors))
    if not segments:
        report.warn(paragraphs[0][0] if paragraphs else 0, f"document {title!r} has no content; skipped")
        return None
    return Document(id=doc_id, title=title, segments=segments, url=url or None)


def parse_wikiextractor(stream: BinaryIO, report: ParseReport | None = None) -> Iterator[Document]:
    """Parse WikiExtractor-style output into Documents.

    Ids are assigned in input order starting at 0 (the extractor's own id
    attribute is not reused). Malformed block headers are recorded in the
    report with their byte offset and the block is skipped.
    """
    if report is None:
        report = ParseReport()
    next_id = 0
    offset = 0
    in_block = False
    skipping = False
    title = ""
    url: str | None = None
    block_offset = 0
    paragraphs: list[tuple[int, str]] = []
    pending: list[str] = []
    pending_offset = 0

    def flush_paragraph() -> None:
        nonlocal pending
        if pending:
            paragraphs.append((pending_offset, "\n".join(pending)))
            pending = []

    for raw_line in stream:
        line_offset = offset
        offset += len(raw_line)
        line = raw_line.decode("utf-8", errors="replace").rstrip("\n").rstrip("\r")
        stripped = line.strip()
        if not in_block:
            if not stripped:
                continue
            if stripped.startswith("<doc"):
                match = DOC_OPEN_RE.match(stripped)
                if match is None:
                    report.error(line_offset, f"malformed doc header: {stripped[:80]!r}")
                    in_block = True
                    skipping = True
                    continue
                in_block = True
                skipping = False
                title = match.group("title")
                url = match.group("url")
                block_offset = line_offset
                paragraphs = []
                pending = []
            else:
                report.error(line_offset, f"content outside <doc> block: {stripped[:80]!r}")
            continue
        if stripped == DOC_CLOSE:
            if not skipping:
                flush_paragraph()
                doc = _build_document(next_id, title, url, paragraphs, report)
                if doc is not None:
                    yield doc
                    next_id += 1
            in_block = False
            skipping = False
            continue
        if skipping:
            continue
        if not stripped:
            flush_paragraph()
        else:
            if not pending:
                pending_offset = line_offset
            pending.append(line)
    if in_block and not skipping:
        # EOF inside a block: keep what was gathered, note the anomaly.
        report.warn(block_offset, f"unterminated doc block {title!r} at end of input")
        flush_paragraph()
        doc = _build_document(next_id, title, url, paragraphs, report)
        if doc is not None:
            yield doc


def parse_canonical(stream: Iterable[str], report: ParseReport | None = None) -> Iterator[Document]:
    """Parse a canonical JSON-lines corpus (e.g. synthetic output).

    Ids from the file are kept: they are already canonical and downstream
    artifacts (ground-truth tables) reference them. Duplicate ids are a
    record-level error.
    """
    if report is None:
        report = ParseReport()
    seen: set[int] = set()
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        doc = document_from_json(line)
        if doc.id in seen:
            report.error(lineno, f"duplicate document id {doc.id}")
            continue
        seen.add(doc.id)
        yield doc


def resolve_anchors(docs: list[Document], stats: CorpusStats | None = None) -> CorpusStats:
    """Match anchor titles to document ids, in place.

    Matching is exact after first-character uppercasing. When two documents
    normalize to the same title the first one wins and the collision is
    counted. Unmatched anchors stay dangling but keep their surface text.
    """
    if stats is None:
        stats = CorpusStats()
    title_index: dict[str, int] = {}
    for doc in docs:
        key = normalize_title(doc.title)
        if key in title_index:
            stats.title_collisions += 1
        else:
            title_index[key] = doc.id
    stats.docs_total = len(docs)
    stats.docs_kept = len(docs)
    for doc in docs:
        for segment in doc.segments:
            for anchor in segment.anchors:
                stats.anchors_total += 1
                target = title_index.get(normalize_title(anchor.target_title))
                anchor.target_id = target
                if target is None:
                    stats.anchors_dangling += 1
                else:
                    stats.anchors_resolved += 1
    return stats


def clean_corpus(docs: list[Document], stats: CorpusStats) -> list[Document]:
    """Remove documents with fewer than MIN_WORDS whitespace tokens.

    Anchors pointing at removed documents become dangling, and the anchor
    counters are recomputed over the kept corpus (anchors inside dropped
    documents leave the stats). Idempotent: a second pass removes nothing
    and flips nothing.
    """
    kept = [doc for doc in docs if doc.word_count >= MIN_WORDS]
    dropped_ids = {doc.id for doc in docs} - {doc.id for doc in kept}
    stats.docs_kept = len(kept)
    stats.docs_dropped_short += len(docs) - len(kept)
    stats.docs_total = stats.docs_kept + stats.docs_dropped_short
    stats.anchors_total = 0
    stats.anchors_resolved = 0
    stats.anchors_dangling = 0
    for doc in kept:
        for segment in doc.segments:
            for anchor in segment.anchors:
                if anchor.target_id in dropped_ids:
                    anchor.target_id = None
                stats.anchors_total += 1
                if anchor.resolved:
                    stats.anchors_resolved += 1
                else:
                    stats.anchors_dangling += 1
    return kept


def ingest(
    docs: Iterable[Document],
    report: ParseReport | None = None,
) -> tuple[list[Document], CorpusStats]:
    """Run resolve + clean over parsed documents; returns the kept documents."""
    materialized = list(docs)
    stats = resolve_anchors(materialized)
    kept = clean_corpus(materialized, stats)
    stats.validate()
    return kept, stats
