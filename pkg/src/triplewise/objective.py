"""Training objective: KL terms, reconstruction terms, type prediction,
bag-of-words auxiliary loss, KL annealing and word drop."""
from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F

from .data import EOS_ID, PAD_ID, SOS_ID, UNK_ID
from .encoders import length_mask
from .latent import kl_divergence, standard_prior
from .network import Batch, ForwardOutputs


@dataclass
class LossBreakdown:
    kl_t: torch.Tensor
    kl_a: torch.Tensor
    kl_q: torch.Tensor
    rec_q: torch.Tensor
    rec_a: torch.Tensor
    qt_ce: torch.Tensor
    bow: torch.Tensor
    total: torch.Tensor
    kl_lambda: float

    def to_dict(self) -> dict[str, float]:
        out = {name: float(getattr(self, name).detach())
               for name in ("kl_t", "kl_a", "kl_q", "rec_q", "rec_a", "qt_ce", "bow", "total")}
        out["kl_lambda"] = self.kl_lambda
        return out

    def is_finite(self) -> bool:
        return bool(torch.isfinite(self.total))


def sequence_nll(logits: torch.Tensor, targets: torch.Tensor,
                 lengths: torch.Tensor) -> torch.Tensor:
    """Token NLL summed over the true length, averaged over the batch."""
    nll = F.cross_entropy(
        logits.transpose(1, 2), targets, reduction="none"
    )  # [B, L]
    mask = length_mask(lengths, targets.size(1)).to(nll.dtype)
    return (nll * mask).sum(dim=1).mean()


def bow_nll(logits: torch.Tensor, target_ids: torch.Tensor) -> torch.Tensor:
    """Sum of -log softmax probability over non-special target words, batch mean."""
    log_probs = F.log_softmax(logits, dim=-1)          # [B, V]
    picked = log_probs.gather(1, target_ids)           # [B, L]
    keep = (
        (target_ids != PAD_ID) & (target_ids != SOS_ID) & (target_ids != EOS_ID)
    ).to(picked.dtype)
    return -(picked * keep).sum(dim=1).mean()


def elbo_loss(outputs: ForwardOutputs, batch: Batch, kl_lambda: float,
              use_bow: bool = True) -> LossBreakdown:
    """Minimization form of the training objective.

    total = rec_q + rec_a + qt_ce + lambda * (kl_t + kl_a + kl_q) + bow,
    with all reconstruction terms computed from posterior samples.
    """
    if not 0.0 <= kl_lambda <= 1.0:
        raise ValueError("kl annealing multiplier must be in [0, 1]")
    prior_t = standard_prior(
        outputs.posterior_t.mu.size(-1),
        dtype=outputs.posterior_t.mu.dtype,
        device=outputs.posterior_t.mu.device,
    )
    kl_t = kl_divergence(outputs.posterior_t, prior_t).mean()
    kl_a = kl_divergence(outputs.posterior_a, outputs.prior_a).mean()
    kl_q = kl_divergence(outputs.posterior_q, outputs.prior_q).mean()

    rec_q = sequence_nll(outputs.question_logits, batch.question_ids, batch.question_len)
    rec_a = sequence_nll(outputs.answer_logits, batch.answer_ids, batch.answer_len)
    qt_ce = F.cross_entropy(outputs.qt_logits, batch.qt_id)

    if use_bow:
        bow = (
            bow_nll(outputs.bow_question_logits, batch.question_ids)
            + bow_nll(outputs.bow_answer_logits, batch.answer_ids)
            + bow_nll(outputs.bow_triple_logits, batch.question_ids)
            + bow_nll(outputs.bow_triple_logits, batch.answer_ids)
        )
    else:
        bow = torch.zeros_like(rec_q)

    total = rec_q + rec_a + qt_ce + kl_lambda * (kl_t + kl_a + kl_q) + bow
    return LossBreakdown(
        kl_t=kl_t, kl_a=kl_a, kl_q=kl_q, rec_q=rec_q, rec_a=rec_a,
        qt_ce=qt_ce, bow=bow, total=total, kl_lambda=kl_lambda,
    )


def kl_anneal(step: int, total_anneal_steps: int) -> float:
    """Linear annealing multiplier, clamped to [0, 1]."""
    if step < 0:
        raise ValueError("step must be >= 0")
    if total_anneal_steps < 1:
        raise ValueError("total_anneal_steps must be >= 1")
    return min(1.0, step / total_anneal_steps)


def word_drop(ids: torch.Tensor, p: float, generator: torch.Generator) -> torch.Tensor:
    """Replace non-special decoder-input tokens by UNK with probability p.

    PAD/SOS/EOS are never replaced; targets are never touched, only the
    teacher-forcing inputs.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("drop probability must be in [0, 1]")
    if p == 0.0:
        return ids
    droppable = (ids != PAD_ID) & (ids != SOS_ID) & (ids != EOS_ID)
    noise = torch.rand(ids.shape, generator=generator, device=ids.device)
    return torch.where(droppable & (noise < p), torch.full_like(ids, UNK_ID), ids)
