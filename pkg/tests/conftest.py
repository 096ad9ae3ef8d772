import sys
from pathlib import Path

import numpy as np
import pytest
import torch

sys.path.insert(0, str(Path(__file__).parent))

from triplewise.config import TrainConfig, desk_preset
from triplewise.data import build_vocabulary, encode_triple
from triplewise.network import TriplewiseModel, collate, shift_right
from triplewise.synthetic import generate_synthetic_corpus


def tiny_config(**overrides) -> TrainConfig:
    base = dict(
        preset="desk", vocab_size=60, max_len=8, embed_dim=6, hidden=5,
        latent_dim=3, dropout=0.0, batch_size=4, learning_rate=1e-3,
        word_drop=0.0, anneal_steps=10, max_epochs=3, patience=0, seed=0,
    )
    base.update(overrides)
    return TrainConfig(**base)


def make_model(config: TrainConfig, vocab_size: int, seed: int = 0,
               dtype=torch.float64) -> TriplewiseModel:
    torch.manual_seed(seed)
    model = TriplewiseModel(config, vocab_size)
    if dtype is not None:
        model.to(dtype)
    model.eval()
    return model


def numpy_params(model: TriplewiseModel) -> dict[str, np.ndarray]:
    return {name: tensor.detach().cpu().numpy().astype(np.float64).copy()
            for name, tensor in model.state_dict().items()}


def batch_to_examples(batch) -> list[dict]:
    examples = []
    for i in range(len(batch)):
        examples.append({
            "post_ids": batch.post_ids[i].numpy(),
            "post_len": int(batch.post_len[i]),
            "question_ids": batch.question_ids[i].numpy(),
            "question_len": int(batch.question_len[i]),
            "answer_ids": batch.answer_ids[i].numpy(),
            "answer_len": int(batch.answer_len[i]),
            "qt_id": int(batch.qt_id[i]),
        })
    return examples


def small_batch(config: TrainConfig, n: int = 2, seed: int = 3):
    triples = generate_synthetic_corpus(seed, max(n, 2))[:n]
    vocab = build_vocabulary(generate_synthetic_corpus(seed, 40), config.vocab_size)
    encoded = [encode_triple(t, vocab, config.max_len) for t in triples]
    return collate(encoded), vocab


def zero_parameters(module: torch.nn.Module) -> None:
    with torch.no_grad():
        for param in module.parameters():
            param.zero_()


@pytest.fixture(scope="session")
def desk_config():
    return desk_preset()


__all__ = [
    "tiny_config", "make_model", "numpy_params", "batch_to_examples",
    "small_batch", "zero_parameters", "shift_right",
]
