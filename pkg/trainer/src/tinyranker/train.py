"""Three-stage curriculum training with parameter inheritance.

Stage order is fixed: hp, shp, mrds, with epochs in 1:1:2 proportion. At
full scale one epoch covers millions of documents; a desk corpus yields a
few hundred steps per pass, which is not enough for the ranking circuit to
form, so the desk schedule repeats each stage ``stage_repeats`` times
(default 3, i.e. 3/3/6 epochs; set to 1 for the literal full-scale
schedule). Each stage starts from the previous stage's final parameters
(verified bitwise before the first optimizer step) with a fresh optimizer.
Every step optimizes the contrastive listwise loss over one query's pair
list plus the weighted token-recovery loss on the positive pair's masked
input.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

import torch

from .data import TrainingRecord, load_records
from .losses import lce_loss, mlm_loss_from_logits
from .model import CrossScorer, ModelConfig, build_model, pad_batch
from .text import Vocab

STAGE_EPOCHS = (("hp", 1), ("shp", 1), ("mrds", 2))


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    weight_decay: float = 0.01
    warmup_ratio: float = 0.0
    grad_clip: float = 0.0  # max gradient norm; 0 disables clipping
    stage_repeats: int = 6  # desk-scale multiplier over the 1:1:2 stage schedule
    seed: int = 0
    holdout_mod: int = 5  # query docs with id % mod == 0 are held out; 0 disables
    allow_missing_stages: bool = False
    log_every: int = 50

    def validate(self) -> None:
        if self.stage_repeats < 1:
            raise ValueError("stage_repeats must be >= 1")


@dataclass
class LossReport:
    mlm_weight: float
    config: dict = field(default_factory=dict)  # optimizer + schedule echo
    stages: dict[str, dict] = field(default_factory=dict)
    inheritance_bitwise_equal: list[bool] = field(default_factory=list)

    def add_stage(self, name: str, epochs: list[list[tuple[float, float, float]]]) -> None:
        self.stages[name] = {
            "epochs": [
                {
                    "lce_mean": sum(l for l, _, _ in epoch) / len(epoch),
                    "mlm_mean": sum(m for _, m, _ in epoch) / len(epoch),
                    "total_mean": sum(t for _, _, t in epoch) / len(epoch),
                    "steps": len(epoch),
                }
                for epoch in epochs
            ]
        }

    def epoch_means(self) -> list[float]:
        """Mean contrastive loss per epoch, in training order."""
        return [
            epoch["lce_mean"]
            for name, _ in STAGE_EPOCHS
            if name in self.stages
            for epoch in self.stages[name]["epochs"]
        ]

    def as_dict(self) -> dict:
        return {
            "mlm_weight": self.mlm_weight,
            "config": self.config,
            "stages": self.stages,
            "inheritance_bitwise_equal": self.inheritance_bitwise_equal,
        }


@dataclass
class TrainState:
    model: CrossScorer
    config: ModelConfig
    stage: str = "init"
    step: int = 0

    def parameter_digest(self) -> str:
        digest = hashlib.sha256()
        for name, tensor in sorted(self.model.state_dict().items()):
            digest.update(name.encode("utf-8"))
            digest.update(tensor.detach().cpu().contiguous().numpy().tobytes())
        return digest.hexdigest()


def _make_optimizer(model: CrossScorer, cfg: TrainConfig) -> torch.optim.Optimizer:
    return torch.optim.AdamW(
        model.parameters(), lr=cfg.learning_rate, weight_decay=cfg.weight_decay
    )


def train_step(
    state: TrainState,
    optimizer: torch.optim.Optimizer,
    record: TrainingRecord,
    mlm_weight: float,
    grad_clip: float = 0.0,
) -> tuple[float, float, float]:
    """One query: score positive + negatives jointly, recover masked tokens
    on the positive pair, step once. Returns (lce, mlm, total).

    Repeated sampling makes many negative pair inputs identical; only the
    distinct sequences are forwarded and the scores are expanded back, which
    leaves the loss bit-for-bit equivalent while cutting most of the work.
    """
    model = state.model
    distinct: dict[tuple[int, ...], int] = {}
    expansion = []
    for pair in record.pair_inputs:
        key = tuple(pair)
        if key not in distinct:
            distinct[key] = len(distinct)
        expansion.append(distinct[key])
    batch = pad_batch([list(key) for key in distinct], model.pad_id)
    scores = model.score(batch)[torch.tensor(expansion)]
    contrastive = lce_loss(scores[0], scores[1:])
    masked = torch.tensor([record.positive.masked_ids], dtype=torch.long)
    logits = model.mlm_logits(masked)[0]
    recovery, n_predicted = mlm_loss_from_logits(
        logits, record.positive.positions, record.positive.targets
    )
    total = contrastive + mlm_weight * recovery
    optimizer.zero_grad()
    total.backward()
    if grad_clip:
        torch.nn.utils.clip_grad_norm_(model.parameters(), grad_clip)
    optimizer.step()
    state.step += 1
    return contrastive.item(), recovery.item(), total.item()


def train_stage(
    state: TrainState,
    records: list[TrainingRecord],
    epochs: int,
    cfg: TrainConfig,
    mlm_weight: float,
) -> list[list[tuple[float, float, float]]]:
    optimizer = _make_optimizer(state.model, cfg)
    warmup_steps = int(cfg.warmup_ratio * epochs * len(records))
    order_rng = random.Random(f"{cfg.seed}:{state.stage}")  # str seeding is stable
    epoch_logs = []
    stage_step = 0
    for epoch in range(epochs):
        order = list(range(len(records)))
        order_rng.shuffle(order)
        losses = []
        for position, index in enumerate(order):
            if warmup_steps and stage_step < warmup_steps:
                scale = (stage_step + 1) / warmup_steps
                for group in optimizer.param_groups:
                    group["lr"] = cfg.learning_rate * scale
            stage_step += 1
            losses.append(
                train_step(state, optimizer, records[index], mlm_weight, cfg.grad_clip)
            )
            if cfg.log_every and (position + 1) % cfg.log_every == 0:
                lce_value, mlm_value, _ = losses[-1]
                print(
                    f"  {state.stage} epoch {epoch + 1} step {position + 1}/{len(records)}"
                    f" lce {lce_value:.4f} mlm {mlm_value:.4f}",
                    flush=True,
                )
        epoch_logs.append(losses)
    return epoch_logs


def train_curriculum(
    shards_dir: str | Path,
    vocab: Vocab,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
) -> tuple[TrainState, LossReport]:
    """Run the full hp -> shp -> mrds curriculum over masked shards."""
    shards_dir = Path(shards_dir)
    train_cfg.validate()
    torch.manual_seed(train_cfg.seed)
    state = TrainState(model=build_model(model_cfg, vocab, train_cfg.seed), config=model_cfg)
    report = LossReport(
        mlm_weight=model_cfg.mlm_weight,
        config={
            "optimizer": "adamw",
            "learning_rate": train_cfg.learning_rate,
            "weight_decay": train_cfg.weight_decay,
            "warmup_ratio": train_cfg.warmup_ratio,
            "grad_clip": train_cfg.grad_clip,
            "stage_repeats": train_cfg.stage_repeats,
            "seed": train_cfg.seed,
            "holdout_mod": train_cfg.holdout_mod,
            "model": model_cfg.as_dict(),
        },
    )
    previous_digest: str | None = None
    for stage_name, base_epochs in STAGE_EPOCHS:
        epochs = base_epochs * train_cfg.stage_repeats
        shard_path = shards_dir / f"{stage_name}.jsonl"
        if not shard_path.exists():
            if train_cfg.allow_missing_stages:
                print(f"stage {stage_name}: shard missing, skipped", flush=True)
                continue
            raise FileNotFoundError(
                f"missing shard for stage {stage_name}: {shard_path} "
                f"(pass allow_missing_stages to skip)"
            )
        records = load_records(
            shard_path, vocab, model_cfg.max_len, holdout_mod=train_cfg.holdout_mod
        )
        if not records:
            raise ValueError(f"stage {stage_name}: no training records after holdout split")
        state.stage = stage_name
        if previous_digest is not None:
            # parameters must arrive untouched from the previous stage
            report.inheritance_bitwise_equal.append(
                state.parameter_digest() == previous_digest
            )
        print(f"stage {stage_name}: {len(records)} records x {epochs} epoch(s)", flush=True)
        epoch_logs = train_stage(state, records, epochs, train_cfg, model_cfg.mlm_weight)
        report.add_stage(stage_name, epoch_logs)
        previous_digest = state.parameter_digest()
    return state, report


def save_checkpoint(state: TrainState, report: LossReport, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "checkpoint.pt"
    torch.save(
        {
            "model_state": state.model.state_dict(),
            "model_config": state.config.as_dict(),
            "stage": state.stage,
            "step": state.step,
        },
        path,
    )
    with open(out_dir / "loss_report.json", "w", encoding="utf-8") as handle:
        json.dump(report.as_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")
    return path


def load_checkpoint(path: str | Path, vocab: Vocab) -> TrainState:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    cfg = ModelConfig(**payload["model_config"])
    model = CrossScorer(cfg, pad_id=vocab.pad_id)
    model.load_state_dict(payload["model_state"])
    model.eval()
    return TrainState(model=model, config=cfg, stage=payload["stage"], step=payload["step"])
