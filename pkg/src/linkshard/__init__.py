"""linkshard: hyperlink-structured corpora to staged contrastive pre-training shards.

The pipeline parses a hyperlink-preserving corpus into a canonical document
store, builds the link graph, classifies each query segment's linked
neighbors into four relevance-ordered groups, samples listwise training
examples for three progressively harder stages, and plans anchor-aware
token masking over the sampled pairs.
"""

__version__ = "0.1.0"

from .documents import Anchor, CorpusStats, Document, Segment
from .graph import LinkGraph, LinkOccurrence
from .ingest import clean_corpus, ingest, parse_canonical, parse_wikiextractor, resolve_anchors
from .masking import MaskAction, MaskConfig, MaskPlan, Vocabulary, apply_mask, plan_mask, tokenize
from .relations import LinkRelation, NeighborhoodPartition, classify_link, partition_neighbors
from .sampling import (
    PretrainExample,
    SamplerConfig,
    Stage,
    enumerate_queries,
    generate_shards,
    sample_example,
)
from .store import DocumentStore, write_store
from .synth import SynthSpec, generate, reference_spec

__all__ = [
    "__version__",
    "Anchor",
    "CorpusStats",
    "Document",
    "Segment",
    "LinkGraph",
    "LinkOccurrence",
    "clean_corpus",
    "ingest",
    "parse_canonical",
    "parse_wikiextractor",
    "resolve_anchors",
    "MaskAction",
    "MaskConfig",
    "MaskPlan",
    "Vocabulary",
    "apply_mask",
    "plan_mask",
    "tokenize",
    "LinkRelation",
    "NeighborhoodPartition",
    "classify_link",
    "partition_neighbors",
    "PretrainExample",
    "SamplerConfig",
    "Stage",
    "enumerate_queries",
    "generate_shards",
    "sample_example",
    "DocumentStore",
    "write_store",
    "SynthSpec",
    "generate",
    "reference_spec",
]
