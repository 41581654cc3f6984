"""Hyperlink adjacency over a document store.

The graph records every resolved anchor occurrence as a forward edge and,
for each linked pair, the smallest segment index of the reverse link (the
"backlink segment"). Self-links are discarded at build time. A finished
graph is immutable and safe to share across readers.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .store import DocumentStore


class GraphConsistencyError(Exception):
    """The store references document ids it does not contain."""


@dataclass(frozen=True)
class LinkOccurrence:
    src: int
    dst: int
    segment_index: int  # 1-based segment in src where the anchor occurs
    anchor_ordinal: int  # 0-based position among that segment's anchors


class LinkGraph:
    def __init__(
        self,
        forward: dict[int, list[LinkOccurrence]],
        backlink_seg: dict[tuple[int, int], int],
    ):
        self.forward = forward
        self.backlink_seg = backlink_seg

    @classmethod
    def build(cls, store: DocumentStore) -> "LinkGraph":
        """Single deterministic pass over the store.

        ``backlink_seg[(d, n)]`` ends up as the smallest segment index in n
        holding an anchor back to d; it is present exactly when n links d.
        """
        forward: dict[int, list[LinkOccurrence]] = {}
        backlink_seg: dict[tuple[int, int], int] = {}
        for doc in store:
            occurrences: list[LinkOccurrence] = []
            for segment in doc.segments:
                for ordinal, anchor in enumerate(segment.anchors):
                    if anchor.target_id is None:
                        continue
                    if anchor.target_id == doc.id:
                        continue  # self-links carry no relevance relation
                    if anchor.target_id not in store:
                        raise GraphConsistencyError(
                            f"document {doc.id} links to {anchor.target_id}, "
                            f"which is not in the store"
                        )
                    occurrences.append(
                        LinkOccurrence(doc.id, anchor.target_id, segment.index, ordinal)
                    )
                    key = (anchor.target_id, doc.id)
                    seg = backlink_seg.get(key)
                    if seg is None or segment.index < seg:
                        backlink_seg[key] = segment.index
            if occurrences:
                forward[doc.id] = occurrences
        return cls(forward, backlink_seg)

    def occurrences(self, doc_id: int) -> list[LinkOccurrence]:
        return self.forward.get(doc_id, [])

    def forward_targets(self, doc_id: int) -> list[int]:
        """Distinct forward targets of a document, ascending."""
        return sorted({occ.dst for occ in self.forward.get(doc_id, [])})

    def links_in_segment(self, doc_id: int, segment_index: int) -> set[int]:
        """Targets of anchors occurring in one specific segment."""
        return {
            occ.dst
            for occ in self.forward.get(doc_id, [])
            if occ.segment_index == segment_index
        }

    def backlink_segment(self, doc_id: int, neighbor_id: int) -> int | None:
        """Smallest segment index in ``neighbor_id`` holding an anchor back to
        ``doc_id``; None when the neighbor does not link back."""
        return self.backlink_seg.get((doc_id, neighbor_id))

    def edge_count(self) -> int:
        return sum(len(occs) for occs in self.forward.values())

    def export(self, out_dir: str | Path) -> None:
        """Write the edge list and backlink table as TSV for external tools.

        edges.tsv:     src, dst, segment_index (one line per occurrence)
        backlinks.tsv: doc, neighbor, backlink segment index
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "edges.tsv", "w", encoding="utf-8", newline="\n") as handle:
            for src in sorted(self.forward):
                for occ in self.forward[src]:
                    handle.write(f"{occ.src}\t{occ.dst}\t{occ.segment_index}\n")
        with open(out_dir / "backlinks.tsv", "w", encoding="utf-8", newline="\n") as handle:
            for (doc_id, neighbor_id), seg in sorted(self.backlink_seg.items()):
                handle.write(f"{doc_id}\t{neighbor_id}\t{seg}\n")
