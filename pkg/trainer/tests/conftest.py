from __future__ import annotations

import shutil
import subprocess
from dataclasses import dataclass
from pathlib import Path

import pytest

from tinyranker.text import Vocab

LINKSHARD = shutil.which("linkshard")


@dataclass
class ShardArtifacts:
    corpus: Path
    truth: Path
    vocab_path: Path
    masked_dir: Path
    shards_dir: Path


def run_linkshard(*argv: str) -> None:
    subprocess.run([LINKSHARD, *argv], check=True, capture_output=True, text=True)


@pytest.fixture(scope="session")
def artifacts(tmp_path_factory) -> ShardArtifacts:
    """Reference training data, produced through the shard toolkit's public
    CLI (the only interface this package consumes)."""
    if LINKSHARD is None:
        pytest.skip("linkshard CLI not installed")
    root = tmp_path_factory.mktemp("shards")
    corpus = root / "corpus.jsonl"
    truth = root / "truth.tsv"
    out = root / "run"
    run_linkshard("synth", "--out", str(corpus), "--truth", str(truth))
    run_linkshard("all", "--input", str(corpus), "--format", "jsonl", "--out", str(out))
    return ShardArtifacts(
        corpus=corpus,
        truth=truth,
        vocab_path=out / "vocab.txt",
        masked_dir=out / "masked",
        shards_dir=out / "shards",
    )


@pytest.fixture(scope="session")
def vocab(artifacts) -> Vocab:
    return Vocab.load(artifacts.vocab_path)


def tiny_vocab(extra: list[str] | None = None) -> Vocab:
    from tinyranker.text import SPECIAL_TOKENS

    return Vocab(list(SPECIAL_TOKENS) + (extra or [f"t{i:02d}" for i in range(30)]))
