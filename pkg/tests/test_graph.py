import pytest

from linkshard.documents import Anchor, Document, Segment
from linkshard.graph import GraphConsistencyError, LinkGraph
from linkshard.ingest import ingest
from linkshard.store import write_store

from .conftest import ingested_docs, small_spec
from .oracles import brute_force_graph


def linked_doc(doc_id, title, links):
    """links: list of (segment_index, target_title) pairs."""
    n_segments = max((seg for seg, _ in links), default=1)
    segments = []
    for index in range(1, n_segments + 1):
        titles = [t for seg, t in links if seg == index]
        words, anchors = ["filler"], []
        for t in titles:
            pos = sum(len(w) + 1 for w in words)
            words.append(t)
            anchors.append(Anchor(t, t, pos, pos + len(t)))
        segments.append(Segment(index, " ".join(words), anchors))
    return Document(doc_id, title, segments)


def build_from(docs, tmp_path):
    # pad past the cleaning threshold; these fixtures are intentionally tiny
    for doc in docs:
        doc.segments[-1].text += " " + " ".join(["pad"] * 120)
    resolved, _ = ingest(docs)
    store = write_store(resolved, tmp_path / "store", overwrite=True)
    return store, LinkGraph.build(store)


def test_mutual_first_segment_links(tmp_path):
    docs = [linked_doc(0, "A", [(1, "B")]), linked_doc(1, "B", [(1, "A")])]
    store, graph = build_from(docs, tmp_path)
    assert graph.backlink_segment(0, 1) == 1
    assert graph.backlink_segment(1, 0) == 1
    store.close()


def test_one_way_link(tmp_path):
    docs = [linked_doc(0, "A", [(2, "B")]), linked_doc(1, "B", [])]
    store, graph = build_from(docs, tmp_path)
    assert graph.backlink_segment(0, 1) is None  # B does not link back
    assert graph.backlink_segment(1, 0) == 2  # A links B from its segment 2
    assert graph.forward_targets(0) == [1]
    assert graph.forward_targets(1) == []
    store.close()


def test_backlink_takes_minimum_segment(tmp_path):
    docs = [
        linked_doc(0, "A", [(1, "B")]),
        linked_doc(1, "B", [(3, "A"), (5, "A")]),
    ]
    store, graph = build_from(docs, tmp_path)
    assert graph.backlink_segment(0, 1) == 3
    store.close()


def test_self_links_discarded(tmp_path):
    docs = [linked_doc(0, "A", [(1, "A"), (1, "B")]), linked_doc(1, "B", [])]
    store, graph = build_from(docs, tmp_path)
    assert graph.forward_targets(0) == [1]
    assert graph.backlink_segment(0, 0) is None
    store.close()


def test_dangling_anchors_never_create_edges(tmp_path):
    docs = [linked_doc(0, "A", [(1, "Nowhere")]), linked_doc(1, "B", [])]
    store, graph = build_from(docs, tmp_path)
    assert graph.edge_count() == 0
    store.close()


def test_inconsistent_store_is_a_hard_error(tmp_path):
    docs = [linked_doc(0, "A", [(1, "B")]), linked_doc(1, "B", [])]
    for doc in docs:
        doc.segments[-1].text += " " + " ".join(["pad"] * 120)
    resolved, _ = ingest(docs)
    resolved = [doc for doc in resolved if doc.id == 0]  # drop B after resolution
    store = write_store(resolved, tmp_path / "store")
    with pytest.raises(GraphConsistencyError):
        LinkGraph.build(store)
    store.close()


def test_graph_matches_brute_force_oracle(tmp_path):
    docs = ingested_docs(small_spec(seed=11, n_docs=200, n_queries=120))
    store = write_store(docs, tmp_path / "store")
    graph = LinkGraph.build(store)
    forward_oracle, backlink_oracle = brute_force_graph(docs)

    produced_forward = {}
    for src, occurrences in graph.forward.items():
        for occ in occurrences:
            produced_forward.setdefault((occ.src, occ.dst), []).append(occ.segment_index)
    produced_forward = {pair: sorted(segs) for pair, segs in produced_forward.items()}
    assert produced_forward == forward_oracle
    assert graph.backlink_seg == backlink_oracle
    store.close()


def test_rebuild_is_deterministic(tmp_path):
    docs = ingested_docs(small_spec(seed=5))
    store = write_store(docs, tmp_path / "store")
    first = LinkGraph.build(store)
    second = LinkGraph.build(store)
    assert first.forward == second.forward
    assert first.backlink_seg == second.backlink_seg
    store.close()


def test_export_writes_tsv(tmp_path):
    docs = ingested_docs(small_spec(seed=5, n_docs=40, n_queries=10))
    store = write_store(docs, tmp_path / "store")
    graph = LinkGraph.build(store)
    graph.export(tmp_path / "export")
    edges = (tmp_path / "export" / "edges.tsv").read_text().splitlines()
    assert len(edges) == graph.edge_count()
    src, dst, seg = edges[0].split("\t")
    assert int(seg) >= 1 and int(src) != int(dst)
    store.close()
