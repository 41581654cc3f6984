import json
import random

import pytest

from linkshard.graph import LinkGraph
from linkshard.relations import LinkRelation, partition_neighbors
from linkshard.sampling import (
    NEGATIVE_SOURCES,
    POSITIVE_SOURCES,
    PretrainExample,
    SamplerConfig,
    Stage,
    enumerate_queries,
    generate_shards,
    sample_example,
)
from linkshard.seeding import derive_rng
from linkshard.store import write_store

from .conftest import ingested_docs, small_spec
from .test_graph import build_from, linked_doc


def test_stage_source_sets():
    assert POSITIVE_SOURCES[Stage.HYPERLINK] == (
        LinkRelation.STRONG_SYMMETRIC,
        LinkRelation.WEAK_SYMMETRIC,
        LinkRelation.ASYMMETRIC_IN_SEGMENT,
    )
    assert NEGATIVE_SOURCES[Stage.HYPERLINK] == (LinkRelation.ASYMMETRIC_OUTSIDE,)
    assert POSITIVE_SOURCES[Stage.SYMMETRIC] == (
        LinkRelation.STRONG_SYMMETRIC,
        LinkRelation.WEAK_SYMMETRIC,
    )
    assert NEGATIVE_SOURCES[Stage.SYMMETRIC] == (LinkRelation.ASYMMETRIC_IN_SEGMENT,)
    assert POSITIVE_SOURCES[Stage.MOST_RELEVANT] == (LinkRelation.STRONG_SYMMETRIC,)
    assert NEGATIVE_SOURCES[Stage.MOST_RELEVANT] == (LinkRelation.WEAK_SYMMETRIC,)


@pytest.fixture()
def forced_layout(tmp_path):
    """Partition {strong: none, weak: none, in-segment: {3}, outside: {4}}."""
    docs = [
        linked_doc(0, "Q", [(1, "N3"), (2, "N4")]),
        linked_doc(3, "N3", []),
        linked_doc(4, "N4", []),
    ]
    store, graph = build_from(docs, tmp_path)
    yield store, graph
    store.close()


def test_forced_example_repeats_the_single_negative(forced_layout):
    store, graph = forced_layout
    cfg = SamplerConfig(k_neg=5, seed=1)
    example = sample_example(graph, store, 0, 1, Stage.HYPERLINK, cfg, random.Random(0))
    assert example.positive == 3
    assert example.negatives == [4] * 5
    assert example.relations[3] is LinkRelation.ASYMMETRIC_IN_SEGMENT


def test_empty_negative_pool_skips_query(forced_layout):
    store, graph = forced_layout
    cfg = SamplerConfig(k_neg=5, seed=1)
    # most-relevant stage needs strong positives and weak negatives: neither exists
    assert sample_example(graph, store, 0, 1, Stage.MOST_RELEVANT, cfg, random.Random(0)) is None


def test_nonempty_positive_but_empty_negative_pool_still_skips(tmp_path):
    # strong pair exists but no weak neighbor: most-relevant has P nonempty, N empty
    docs = [linked_doc(0, "Q", [(1, "N1")]), linked_doc(1, "N1", [(1, "Q")])]
    store, graph = build_from(docs, tmp_path)
    cfg = SamplerConfig(k_neg=3, seed=1)
    assert sample_example(graph, store, 0, 1, Stage.MOST_RELEVANT, cfg, random.Random(0)) is None
    # the same partition feeds symmetric-stage queries only once negatives exist
    assert sample_example(graph, store, 0, 1, Stage.SYMMETRIC, cfg, random.Random(0)) is None
    store.close()


def test_replacement_disabled_skips_small_pools(forced_layout):
    store, graph = forced_layout
    cfg = SamplerConfig(k_neg=5, allow_replacement=False, seed=1)
    assert sample_example(graph, store, 0, 1, Stage.HYPERLINK, cfg, random.Random(0)) is None
    cfg_fits = SamplerConfig(k_neg=1, allow_replacement=False, seed=1)
    example = sample_example(graph, store, 0, 1, Stage.HYPERLINK, cfg_fits, random.Random(0))
    assert example.negatives == [4]


def test_enumerate_skips_dangling_only_docs(tmp_path):
    docs = [linked_doc(0, "A", [(1, "Ghost"), (2, "Ghost")]), linked_doc(1, "B", [(1, "A")])]
    store, graph = build_from(docs, tmp_path)
    queries = enumerate_queries(store, graph, SamplerConfig())
    assert queries == [(1, 1)]
    store.close()


def test_enumerate_prefers_anchor_rich_segments_and_low_index_ties(tmp_path):
    docs = [
        linked_doc(0, "A", [(2, "B"), (5, "C"), (5, "D")]),
        linked_doc(1, "B", []),
        linked_doc(2, "C", []),
        linked_doc(3, "D", []),
    ]
    store, graph = build_from(docs, tmp_path)
    cfg = SamplerConfig(max_queries_per_doc=1)
    assert enumerate_queries(store, graph, cfg) == [(0, 5)]  # two anchors beat one

    docs = [
        linked_doc(0, "A", [(2, "B"), (5, "C")]),
        linked_doc(1, "B", []),
        linked_doc(2, "C", []),
    ]
    store2, graph2 = build_from(docs, tmp_path / "tie")
    assert enumerate_queries(store2, graph2, cfg) == [(0, 2)]  # tie -> lowest index
    store.close()
    store2.close()


def test_planted_corpus_yields_expected_queries(tmp_path):
    spec = small_spec(seed=9, n_docs=40, n_queries=8)
    docs = ingested_docs(spec)
    store = write_store(docs, tmp_path / "store")
    graph = LinkGraph.build(store)
    queries = enumerate_queries(store, graph, SamplerConfig(max_queries_per_doc=99))
    # recompute the expectation straight from the documents
    expected = []
    for doc in docs:
        for segment in doc.segments:
            if any(anchor.resolved for anchor in segment.anchors):
                expected.append((doc.id, segment.index))
    assert queries == expected
    store.close()


def test_emitted_counts_match_partition_recount(tmp_path):
    docs = ingested_docs(small_spec(seed=13, n_docs=200, n_queries=120))
    store = write_store(docs, tmp_path / "store")
    graph = LinkGraph.build(store)
    cfg = SamplerConfig(seed=42)
    stages = [Stage.HYPERLINK, Stage.SYMMETRIC, Stage.MOST_RELEVANT]
    manifest = generate_shards(store, graph, stages, cfg, tmp_path / "shards")
    queries = enumerate_queries(store, graph, cfg)
    for stage in stages:
        feasible = 0
        for doc_id, segment_index in queries:
            partition = partition_neighbors(graph, doc_id, segment_index)
            has_pos = any(partition.groups[r] for r in POSITIVE_SOURCES[stage])
            has_neg = any(partition.groups[r] for r in NEGATIVE_SOURCES[stage])
            feasible += has_pos and has_neg
        assert manifest.counts[stage.value] == feasible
    store.close()


def replay_records(path):
    with open(path, encoding="utf-8") as handle:
        return [json.loads(line) for line in handle]


def test_shard_records_are_stage_sound_and_strictly_ordered(reference_pipeline):
    for stage in Stage:
        for record in replay_records(reference_pipeline.shards_dir / f"{stage.value}.jsonl"):
            positive_relation = LinkRelation.from_wire(record["relation_of_positive"])
            assert positive_relation in POSITIVE_SOURCES[stage]
            assert record["positive"]["id"] != record["query_doc"]
            assert len(record["negatives"]) == 24
            for negative in record["negatives"]:
                neg_relation = LinkRelation.from_wire(negative["relation"])
                assert neg_relation in NEGATIVE_SOURCES[stage]
                assert positive_relation < neg_relation  # relevance order is strict
                assert negative["id"] != record["query_doc"]
                assert negative["id"] != record["positive"]["id"]


def test_same_seed_is_byte_identical_different_seed_is_not(tmp_path, small_store):
    graph = LinkGraph.build(small_store)
    stages = [Stage.HYPERLINK]
    generate_shards(small_store, graph, stages, SamplerConfig(seed=5), tmp_path / "a")
    generate_shards(small_store, graph, stages, SamplerConfig(seed=5), tmp_path / "b")
    generate_shards(small_store, graph, stages, SamplerConfig(seed=6), tmp_path / "c")
    a = (tmp_path / "a" / "hp.jsonl").read_bytes()
    b = (tmp_path / "b" / "hp.jsonl").read_bytes()
    c = (tmp_path / "c" / "hp.jsonl").read_bytes()
    assert a == b
    assert a != c


def test_per_query_streams_are_order_independent(forced_layout):
    store, graph = forced_layout
    cfg = SamplerConfig(k_neg=3, seed=7)
    rng = derive_rng(cfg.seed, Stage.HYPERLINK.value, 0, 1)
    first = sample_example(graph, store, 0, 1, Stage.HYPERLINK, cfg, rng)
    # drawing for other queries in between must not disturb this query's draw
    derive_rng(cfg.seed, Stage.HYPERLINK.value, 9, 9).random()
    rng = derive_rng(cfg.seed, Stage.HYPERLINK.value, 0, 1)
    second = sample_example(graph, store, 0, 1, Stage.HYPERLINK, cfg, rng)
    assert first == second


def test_zero_example_run_writes_warning(tmp_path):
    kept = ingested_docs(small_spec(seed=2, n_docs=10, n_queries=0))
    store = write_store(kept, tmp_path / "store")
    graph = LinkGraph.build(store)
    manifest = generate_shards(
        store, graph, [Stage.MOST_RELEVANT], SamplerConfig(seed=0), tmp_path / "shards"
    )
    assert manifest.counts["mrds"] == 0
    assert any("no examples" in warning for warning in manifest.warnings)
    assert (tmp_path / "shards" / "mrds.jsonl").read_bytes() == b""
    store.close()


def test_invalid_config_rejected():
    with pytest.raises(ValueError, match="k_neg"):
        SamplerConfig(k_neg=0).validate()
