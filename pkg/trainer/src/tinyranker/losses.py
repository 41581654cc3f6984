"""Training objectives.

The listwise contrastive loss scores one positive against its query-local
negatives: -log softmax of the positive among [positive, negatives].
Computed via logsumexp, so it is exact for the no-negatives case and
invariant to constant score shifts. The token-recovery loss is the mean
negative log-likelihood of original tokens at the planned positions only.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F


def lce_loss(pos_score: torch.Tensor, neg_scores: torch.Tensor) -> torch.Tensor:
    """pos_score: scalar (or (batch,)); neg_scores: (k,) (or (batch, k)).

    k may be zero, in which case the loss is exactly zero.
    """
    if not bool(torch.isfinite(pos_score).all()) or not bool(torch.isfinite(neg_scores).all()):
        raise ValueError("non-finite score passed to lce_loss")
    pos = pos_score.unsqueeze(-1)
    all_scores = torch.cat([pos, neg_scores.reshape(*pos.shape[:-1], -1)], dim=-1)
    loss = torch.logsumexp(all_scores, dim=-1) - pos.squeeze(-1)
    return loss.mean() if loss.dim() else loss


def mlm_loss_from_logits(
    logits: torch.Tensor, positions: list[int], targets: list[int]
) -> tuple[torch.Tensor, int]:
    """logits: (length, vocab) for one sequence. Returns (loss, n_predicted);
    an empty plan yields (0, 0) rather than an error."""
    if len(positions) != len(targets):
        raise ValueError("positions and targets must align")
    if not positions:
        return torch.zeros((), dtype=logits.dtype, device=logits.device), 0
    index = torch.tensor(positions, dtype=torch.long, device=logits.device)
    target = torch.tensor(targets, dtype=torch.long, device=logits.device)
    picked = logits.index_select(0, index)
    return F.cross_entropy(picked, target), len(positions)
