"""End-to-end training: batching, optimization, checkpointing and
KL-per-word degeneration monitoring."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch.nn.utils import clip_grad_norm_

from .config import TrainConfig, config_from_dict
from .data import Triple, Vocabulary, build_vocabulary, encode_triple
from .encoders import length_mask
from .network import Batch, TriplewiseModel, collate, shift_right
from .objective import elbo_loss, kl_anneal, word_drop

CHECKPOINT_FORMAT_VERSION = 1
LOG_FILENAME = "training_log.jsonl"
LATEST_CHECKPOINT = "checkpoint_latest.pt"
BEST_CHECKPOINT = "checkpoint_best.pt"


class NonFiniteLossError(RuntimeError):
    """Training produced a non-finite loss; carries the last loss breakdown."""

    def __init__(self, breakdown: dict, step: int):
        super().__init__(f"non-finite loss at step {step}: {breakdown}")
        self.breakdown = breakdown
        self.step = step


class CheckpointError(RuntimeError):
    pass


@dataclass
class TrainingLogRecord:
    epoch: int
    step: int
    kl_lambda: float
    train: dict[str, float]
    val: dict[str, float]
    val_kl_per_word: float
    val_question_accuracy: float

    def to_flat_dict(self) -> dict:
        flat: dict = {"epoch": self.epoch, "step": self.step, "kl_lambda": self.kl_lambda}
        flat.update({f"train_{k}": v for k, v in self.train.items()})
        flat.update({f"val_{k}": v for k, v in self.val.items()})
        flat["val_kl_per_word"] = self.val_kl_per_word
        flat["val_question_accuracy"] = self.val_question_accuracy
        return flat


@dataclass
class TrainResult:
    model: TriplewiseModel
    vocab: Vocabulary
    config: TrainConfig
    records: list[TrainingLogRecord] = field(default_factory=list)
    step: int = 0
    stopped_early: bool = False


def save_checkpoint(model: TriplewiseModel, vocab: Vocabulary, config: TrainConfig,
                    step: int, path: str | Path, optimizer=None, epoch: int = 0) -> None:
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "config": config.to_dict(),
        "step": int(step),
        "epoch": int(epoch),
        "vocab_tokens": vocab.id_to_token[4:],
        "state_dict": model.state_dict(),
    }
    if optimizer is not None:
        payload["optimizer"] = optimizer.state_dict()
    torch.save(payload, path)


_SHAPE_FIELDS = ("vocab_size", "max_len", "embed_dim", "hidden", "latent_dim")


def load_checkpoint(path: str | Path, expected_config: TrainConfig | None = None):
    """Returns (model, vocab, config, step, epoch, optimizer_state)."""
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise CheckpointError(f"corrupt or unreadable checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise CheckpointError("checkpoint payload is not a mapping")
    for key in ("format_version", "config", "step", "vocab_tokens", "state_dict"):
        if key not in payload:
            raise CheckpointError(f"checkpoint missing field {key!r}")
    if payload["format_version"] != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported format_version {payload['format_version']!r}"
        )
    config = config_from_dict(payload["config"])
    if expected_config is not None:
        for name in _SHAPE_FIELDS:
            if getattr(config, name) != getattr(expected_config, name):
                raise CheckpointError(
                    f"config mismatch on {name}: checkpoint has "
                    f"{getattr(config, name)}, expected {getattr(expected_config, name)}"
                )
    vocab = Vocabulary(payload["vocab_tokens"])
    model = TriplewiseModel(config, len(vocab))
    try:
        model.load_state_dict(payload["state_dict"])
    except RuntimeError as exc:
        raise CheckpointError(f"state_dict mismatch: {exc}") from exc
    return model, vocab, config, payload["step"], payload.get("epoch", 0), payload.get("optimizer")


def _zero_eps(batch_size: int, latent_dim: int) -> torch.Tensor:
    return torch.zeros(batch_size, latent_dim)


def evaluate_model(model: TriplewiseModel, batches: list[Batch], use_bow: bool):
    """Deterministic validation pass: posterior means, no word drop.

    Returns (loss component means, KL per target word, teacher-forced
    question token accuracy).
    """
    model.eval()
    latent_dim = model.config.latent_dim
    sums: dict[str, float] = {}
    n_examples = 0
    kl_sum = 0.0
    n_target_words = 0
    correct = 0
    n_question_tokens = 0
    with torch.no_grad():
        for batch in batches:
            size = len(batch)
            eps = _zero_eps(size, latent_dim)
            outputs = model(batch, eps, eps, eps)
            breakdown = elbo_loss(outputs, batch, 1.0, use_bow)
            for key, value in breakdown.to_dict().items():
                if key == "kl_lambda":
                    continue
                sums[key] = sums.get(key, 0.0) + value * size
            kl_sum += float(breakdown.kl_t + breakdown.kl_a + breakdown.kl_q) * size
            n_target_words += int(batch.question_len.sum() + batch.answer_len.sum())
            predictions = outputs.question_logits.argmax(dim=-1)
            mask = length_mask(batch.question_len, batch.question_ids.size(1))
            correct += int(((predictions == batch.question_ids) & mask).sum())
            n_question_tokens += int(mask.sum())
            n_examples += size
    means = {key: value / n_examples for key, value in sums.items()}
    kl_per_word = kl_sum / max(n_target_words, 1)
    accuracy = correct / max(n_question_tokens, 1)
    return means, kl_per_word, accuracy


def train(config: TrainConfig, train_triples, valid_triples,
          out_dir: str | Path | None = None, vocab: Vocabulary | None = None,
          resume_from: str | Path | None = None) -> TrainResult:
    """Run the full training loop; deterministic given (config, corpora)."""
    torch.manual_seed(config.seed)
    train_list = list(train_triples)
    valid_list = list(valid_triples)
    if not train_list:
        raise ValueError("training corpus is empty")
    if vocab is None:
        vocab = build_vocabulary(train_list, config.vocab_size)
    train_enc = [encode_triple(t, vocab, config.max_len) for t in train_list]
    valid_enc = [encode_triple(t, vocab, config.max_len) for t in valid_list]
    valid_batches = [
        collate(valid_enc[i:i + config.batch_size])
        for i in range(0, len(valid_enc), config.batch_size)
    ]

    step = 0
    start_epoch = 0
    optimizer_state = None
    if resume_from is not None:
        model, vocab, _, step, start_epoch, optimizer_state = load_checkpoint(
            resume_from, expected_config=config
        )
    else:
        model = TriplewiseModel(config, len(vocab))
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    if optimizer_state is not None:
        optimizer.load_state_dict(optimizer_state)

    n_train = len(train_enc)
    steps_per_epoch = math.ceil(n_train / config.batch_size)
    anneal_total = (
        config.anneal_steps if config.anneal_steps is not None else steps_per_epoch
    )
    eps_gen = torch.Generator().manual_seed(config.seed + 101)
    drop_gen = torch.Generator().manual_seed(config.seed + 202)
    shuffle_rng = np.random.default_rng(config.seed + 303)

    out_path = Path(out_dir) if out_dir is not None else None
    log_handle = None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        log_handle = open(out_path / LOG_FILENAME, "a" if resume_from else "w",
                          encoding="utf-8")

    result = TrainResult(model=model, vocab=vocab, config=config, step=step)
    best_val = math.inf
    epochs_without_improvement = 0
    latent_dim = config.latent_dim
    try:
        for epoch in range(start_epoch + 1, config.max_epochs + 1):
            model.train()
            train_sums: dict[str, float] = {}
            epoch_lambda = 1.0
            order = shuffle_rng.permutation(n_train)
            for lo in range(0, n_train, config.batch_size):
                batch = collate([train_enc[i] for i in order[lo:lo + config.batch_size]])
                size = len(batch)
                epoch_lambda = 1.0 if anneal_total == 0 else kl_anneal(step, anneal_total)
                eps_t = torch.randn(size, latent_dim, generator=eps_gen)
                eps_a = torch.randn(size, latent_dim, generator=eps_gen)
                eps_q = torch.randn(size, latent_dim, generator=eps_gen)
                q_in = word_drop(shift_right(batch.question_ids), config.word_drop, drop_gen)
                a_in = word_drop(shift_right(batch.answer_ids), config.word_drop, drop_gen)
                outputs = model(batch, eps_t, eps_a, eps_q, q_in, a_in)
                breakdown = elbo_loss(outputs, batch, epoch_lambda, config.use_bow)
                if not breakdown.is_finite():
                    raise NonFiniteLossError(breakdown.to_dict(), step)
                optimizer.zero_grad()
                breakdown.total.backward()
                clip_grad_norm_(model.parameters(), config.grad_clip)
                optimizer.step()
                step += 1
                for key, value in breakdown.to_dict().items():
                    if key == "kl_lambda":
                        continue
                    train_sums[key] = train_sums.get(key, 0.0) + value * size

            train_means = {k: v / n_train for k, v in train_sums.items()}
            val_means, val_kl_per_word, val_accuracy = evaluate_model(
                model, valid_batches, config.use_bow
            )
            record = TrainingLogRecord(
                epoch=epoch, step=step, kl_lambda=epoch_lambda,
                train=train_means, val=val_means,
                val_kl_per_word=val_kl_per_word,
                val_question_accuracy=val_accuracy,
            )
            result.records.append(record)
            result.step = step
            if log_handle is not None:
                log_handle.write(json.dumps(record.to_flat_dict()) + "\n")
                log_handle.flush()
            if out_path is not None:
                save_checkpoint(model, vocab, config, step,
                                out_path / LATEST_CHECKPOINT, optimizer, epoch)
            improved = val_means["total"] < best_val - 1e-6
            if improved:
                best_val = val_means["total"]
                epochs_without_improvement = 0
                if out_path is not None:
                    save_checkpoint(model, vocab, config, step,
                                    out_path / BEST_CHECKPOINT, optimizer, epoch)
            else:
                epochs_without_improvement += 1
            if config.patience > 0 and epochs_without_improvement >= config.patience:
                result.stopped_early = True
                break
    finally:
        if log_handle is not None:
            log_handle.close()
    return result
