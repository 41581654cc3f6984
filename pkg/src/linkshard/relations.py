"""Four-way classification of a document's hyperlinked neighbors.

Given a query pair (document d, segment s), every forward target of d falls
into exactly one relevance-ordered class, driven by two predicates: does the
neighbor link back, and does an anchor to it occur inside s. A neighbor
that links back but is only anchored outside s is classified asymmetric-
outside by default, keeping the four classes a true partition of the
forward-neighbor set; a strictness flag drops such neighbors instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

from .graph import LinkGraph


class LinkRelation(IntEnum):
    """Relevance-ordered link classes; smaller value = more relevant."""

    STRONG_SYMMETRIC = 1  # mutual link, anchored in s, backlink in neighbor's first segment
    WEAK_SYMMETRIC = 2  # mutual link, anchored in s, backlink beyond the first segment
    ASYMMETRIC_IN_SEGMENT = 3  # one-way link anchored in s
    ASYMMETRIC_OUTSIDE = 4  # anchored only outside s

    @property
    def wire(self) -> str:
        return self.name.lower()

    @classmethod
    def from_wire(cls, label: str) -> "LinkRelation":
        try:
            return cls[label.upper()]
        except KeyError:
            raise ValueError(f"unknown link relation {label!r}") from None



@dataclass
class NeighborhoodPartition:
    query_doc: int
    segment_index: int
    groups: dict[LinkRelation, set[int]] = field(
        default_factory=lambda: {relation: set() for relation in LinkRelation}
    )

    def all_neighbors(self) -> set[int]:
        result: set[int] = set()
        for members in self.groups.values():
            result |= members
        return result

    def sizes(self) -> dict[LinkRelation, int]:
        return {relation: len(self.groups[relation]) for relation in LinkRelation}


def classify_link(
    graph: LinkGraph, doc_id: int, segment_index: int, neighbor_id: int
) -> LinkRelation:
    """Classify one forward neighbor of (doc, segment).

    Pure function of the graph; requires that ``neighbor_id`` actually is a
    forward target of ``doc_id``.
    """
    if neighbor_id not in {occ.dst for occ in graph.occurrences(doc_id)}:
        raise ValueError(
            f"document {neighbor_id} is not a forward target of document {doc_id}"
        )
    anchored_in_segment = neighbor_id in graph.links_in_segment(doc_id, segment_index)
    if not anchored_in_segment:
        # Applies whether or not the neighbor links back; this keeps the
        # four groups a partition of the forward-neighbor set.
        return LinkRelation.ASYMMETRIC_OUTSIDE
    backlink = graph.backlink_segment(doc_id, neighbor_id)
    if backlink is None:
        return LinkRelation.ASYMMETRIC_IN_SEGMENT
    if backlink == 1:
        return LinkRelation.STRONG_SYMMETRIC
    return LinkRelation.WEAK_SYMMETRIC


def partition_neighbors(
    graph: LinkGraph,
    doc_id: int,
    segment_index: int,
    drop_backlinked_outside: bool = False,
) -> NeighborhoodPartition:
    """Partition every distinct forward target of (doc, segment).

    With ``drop_backlinked_outside`` the strictness flag excludes neighbors
    that link back but are anchored only outside the segment, at the cost
    of the partition-covers-all-targets property.
    """
    partition = NeighborhoodPartition(query_doc=doc_id, segment_index=segment_index)
    for neighbor_id in graph.forward_targets(doc_id):
        relation = classify_link(graph, doc_id, segment_index, neighbor_id)
        if (
            drop_backlinked_outside
            and relation is LinkRelation.ASYMMETRIC_OUTSIDE
            and graph.backlink_segment(doc_id, neighbor_id) is not None
        ):
            continue
        partition.groups[relation].add(neighbor_id)
    return partition
