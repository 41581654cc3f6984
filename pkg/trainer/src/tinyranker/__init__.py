"""tinyranker: desk-scale cross-encoder trainer for staged link-relation shards.

Consumes the shard toolkit's file interfaces only: masked shard JSON-lines,
the vocabulary file, the canonical corpus, and the ground-truth relation
table.
"""

__version__ = "0.1.0"

from .data import build_input, load_records, pair_layout
from .evaluate import eval_ordering, model_score_fn, read_corpus, read_truth
from .losses import lce_loss, mlm_loss_from_logits
from .model import CrossScorer, ModelConfig, build_model
from .text import Vocab, tokenize_text
from .train import LossReport, TrainConfig, TrainState, train_curriculum

__all__ = [
    "__version__",
    "build_input",
    "load_records",
    "pair_layout",
    "eval_ordering",
    "model_score_fn",
    "read_corpus",
    "read_truth",
    "lce_loss",
    "mlm_loss_from_logits",
    "CrossScorer",
    "ModelConfig",
    "build_model",
    "Vocab",
    "tokenize_text",
    "LossReport",
    "TrainConfig",
    "TrainState",
    "train_curriculum",
]
