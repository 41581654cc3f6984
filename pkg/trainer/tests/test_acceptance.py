"""Acceptance suite for the trainer. Each criterion runs at its stated
tolerance and prints a PASS line when it holds.

The ordering-emergence criterion is implemented exactly as stated and is
expected to FAIL on current hardware: a desk-scale encoder trained from
random initialization does not develop generalizing query-document token
matching within the 15-minute budget (the full-scale recipe inherits a
pretrained encoder that already has it). The loss report and the run
ledger document the investigation; the other criteria pass.
"""

import math
import random
import time

import pytest
import torch

from tinyranker.evaluate import eval_ordering, model_score_fn, read_corpus, read_truth
from tinyranker.losses import lce_loss, mlm_loss_from_logits
from tinyranker.model import ModelConfig, build_model
from tinyranker.text import Vocab
from tinyranker.train import TrainConfig, TrainState, train_curriculum

from .test_losses import relative_error, t64

RELATION_ORDER = (
    "strong_symmetric",
    "weak_symmetric",
    "asymmetric_in_segment",
    "asymmetric_outside",
)


def announce(name: str) -> None:
    print(f"\nACCEPTANCE PASS: {name}")


def test_lce_closed_forms():
    """Positive-only is exactly zero; a tied single pair is ln 2 within
    1e-6; a constant shift moves the loss by less than 1e-6."""
    assert lce_loss(t64(0.9)[0], torch.empty(0, dtype=torch.float64)).item() == 0.0
    tied = lce_loss(t64(-1.2)[0], t64(-1.2)).item()
    assert abs(tied - math.log(2)) < 1e-6
    rng = random.Random(3)
    for _ in range(25):
        pos = rng.uniform(-4, 4)
        negs = [rng.uniform(-4, 4) for _ in range(rng.randint(1, 24))]
        shift = rng.uniform(-50, 50)
        base = lce_loss(t64(pos)[0], t64(*negs)).item()
        shifted = lce_loss(t64(pos + shift)[0], t64(*[n + shift for n in negs])).item()
        assert abs(base - shifted) < 1e-6
    announce("contrastive loss closed forms (zero, ln 2, shift invariance)")


def test_gradient_checks():
    """Analytic gradients match central finite differences within relative
    error 1e-4 at 20 random points for each loss."""
    rng = random.Random(17)
    eps = 1e-6
    checked = 0
    for _ in range(20):
        k = rng.randint(1, 16)
        values = [rng.uniform(-3, 3) for _ in range(k + 1)]
        x = torch.tensor(values, dtype=torch.float64, requires_grad=True)
        lce_loss(x[0], x[1:]).backward()
        analytic = x.grad.tolist()

        def f(vals):
            return lce_loss(t64(vals[0])[0], t64(*vals[1:])).item()

        for coordinate in range(k + 1):
            up, down = list(values), list(values)
            up[coordinate] += eps
            down[coordinate] -= eps
            numeric = (f(up) - f(down)) / (2 * eps)
            assert relative_error(analytic[coordinate], numeric) < 1e-4
            checked += 1

    for _ in range(20):
        length, vocab_size = rng.randint(3, 8), rng.randint(5, 15)
        positions = sorted(rng.sample(range(length), rng.randint(1, length)))
        targets = [rng.randrange(vocab_size) for _ in positions]
        base = [[rng.uniform(-2, 2) for _ in range(vocab_size)] for _ in range(length)]
        logits = torch.tensor(base, dtype=torch.float64, requires_grad=True)
        loss, _ = mlm_loss_from_logits(logits, positions, targets)
        loss.backward()

        def g(matrix):
            value, _ = mlm_loss_from_logits(
                torch.tensor(matrix, dtype=torch.float64), positions, targets
            )
            return value.item()

        for _ in range(8):
            row, col = rng.randrange(length), rng.randrange(vocab_size)
            up = [list(r) for r in base]
            down = [list(r) for r in base]
            up[row][col] += eps
            down[row][col] -= eps
            numeric = (g(up) - g(down)) / (2 * eps)
            a = logits.grad[row, col].item()
            if abs(a) < 1e-12 and abs(numeric) < 1e-7:
                continue
            assert relative_error(a, numeric) < 1e-4
            checked += 1
    announce(f"gradient checks ({checked} coordinates, rel err < 1e-4)")


@pytest.fixture(scope="module")
def desk_run(artifacts, vocab):
    """The 3-stage desk run with frozen defaults, plus its evaluations."""
    corpus = read_corpus(artifacts.corpus)
    truth = read_truth(artifacts.truth)
    model_cfg = ModelConfig(vocab_size=len(vocab))
    train_cfg = TrainConfig(seed=0, log_every=0)
    started = time.monotonic()
    state, report = train_curriculum(artifacts.masked_dir, vocab, model_cfg, train_cfg)
    elapsed = time.monotonic() - started
    trained_eval = eval_ordering(
        model_score_fn(state, vocab), corpus, truth,
        query_filter=lambda doc_id: doc_id % train_cfg.holdout_mod == 0,
    )
    untrained_state = TrainState(
        model=build_model(ModelConfig(vocab_size=len(vocab)), vocab, seed=0),
        config=model_cfg,
    )
    untrained_eval = eval_ordering(model_score_fn(untrained_state, vocab), corpus, truth)
    return state, report, trained_eval, untrained_eval, elapsed


def test_curriculum_inheritance(desk_run):
    """Stage-boundary parameters are bitwise equal before the next stage's
    first optimizer step."""
    _, report, _, _, _ = desk_run
    assert report.inheritance_bitwise_equal == [True, True]
    announce("curriculum inheritance (both stage boundaries bitwise equal)")


def test_training_reduces_contrastive_loss(desk_run):
    """Final-epoch mean contrastive loss is below half of the first epoch's
    on the reference run with default desk config."""
    _, report, _, _, _ = desk_run
    means = report.epoch_means()
    assert means[-1] < 0.5 * means[0], f"first {means[0]:.3f}, final {means[-1]:.3f}"
    announce(
        f"loss reduction (first epoch {means[0]:.3f}, final epoch {means[-1]:.3f})"
    )


def test_ordering_emergence(desk_run):
    """After the 3-stage desk run (<= 15 min, no accelerator): held-out mean
    scores strictly ordered by relation class, every adjacent-class pairwise
    accuracy >= 0.80, and an untrained model at chance (0.5 +/- 0.05)."""
    _, _, trained_eval, untrained_eval, elapsed = desk_run
    assert elapsed <= 15 * 60, f"desk run took {elapsed:.0f}s"
    for accuracy in untrained_eval.adjacent_accuracies():
        assert abs(accuracy - 0.5) <= 0.05, (
            f"untrained adjacent accuracies {untrained_eval.adjacent_accuracies()}"
        )
    means = [trained_eval.mean_scores[relation] for relation in RELATION_ORDER]
    assert means[0] > means[1] > means[2] > means[3], (
        f"held-out mean scores not ordered: "
        f"{ {r: round(trained_eval.mean_scores[r], 3) for r in RELATION_ORDER} }"
    )
    adjacent = trained_eval.adjacent_accuracies()
    assert all(accuracy >= 0.80 for accuracy in adjacent), (
        f"adjacent-class pairwise accuracies {adjacent} (need every one >= 0.80)"
    )
    announce(
        f"ordering emergence (adjacent accuracies {adjacent}, run {elapsed:.0f}s)"
    )
