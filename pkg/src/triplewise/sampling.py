"""Question generation from a post alone.

Inference never reads question or answer text: the triple-level latent is
inferred from the post-only posterior, the answer and question latents come
from their prior networks, the question type is predicted, and the decoder
runs over the post's token states.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import torch

from .data import QuestionType, Vocabulary, encode_sentence
from .decoders import decode_greedy, decode_sampled
from .latent import reparameterize
from .network import TriplewiseModel

STRATEGIES = ("greedy", "sample")


@dataclass
class GenerationResult:
    question: list[str]
    predicted_type: QuestionType
    z_t: list[float]
    z_a: list[float]
    z_q: list[float]
    type_distribution: list[float]
    seed: int


def generate(post: Sequence[str], model: TriplewiseModel, vocab: Vocabulary,
             seed: int, strategy: str = "greedy", n_samples: int = 1,
             ) -> list[GenerationResult]:
    """Sample questions for one post.

    `greedy` is a pure function of the post: all latents sit at their means
    and decoding takes the argmax. `sample` draws latents and tokens from a
    generator seeded with `seed`.
    """
    post_tokens = list(post)
    if not post_tokens:
        raise ValueError("post must be non-empty")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if model.vocab_size != len(vocab):
        raise ValueError(
            f"model vocabulary size {model.vocab_size} does not match "
            f"vocabulary of size {len(vocab)}"
        )
    config = model.config
    ids, length = encode_sentence(post_tokens, vocab, config.max_len)
    post_ids = torch.tensor([ids], dtype=torch.long)
    post_len = torch.tensor([length], dtype=torch.long)
    latent_dim = config.latent_dim
    generator = torch.Generator().manual_seed(seed)

    model.eval()
    results: list[GenerationResult] = []
    with torch.no_grad():
        h_p, token_states, mask = model.encode_post(post_ids, post_len)
        posterior_t = model.post_only_triple_posterior(h_p)
        for _ in range(n_samples):
            if strategy == "greedy":
                eps_t = eps_a = eps_q = torch.zeros(1, latent_dim)
            else:
                eps_t = torch.randn(1, latent_dim, generator=generator)
                eps_a = torch.randn(1, latent_dim, generator=generator)
                eps_q = torch.randn(1, latent_dim, generator=generator)
            z_t = reparameterize(posterior_t, eps_t, source="posterior").z
            bridge = model.bridge(z_t, h_p)
            prior_a = model.prior_answer(bridge.h_ctx_a, z_t)
            z_a = reparameterize(prior_a, eps_a, source="prior").z
            prior_q = model.prior_question(bridge.h_ctx_q, z_t, z_a)
            z_q = reparameterize(prior_q, eps_q, source="prior").z
            qt_logits = model.type_predictor(z_q, z_t, h_p)
            type_distribution = torch.softmax(qt_logits[0], dim=-1)
            qt_id = int(type_distribution.argmax())
            v_qt = model.qt_embedding(torch.tensor([qt_id]))
            s0 = model.question_initial_state(z_q, z_t, bridge.h_ctx_q, v_qt)
            if strategy == "greedy":
                out_ids = decode_greedy(
                    model.question_decoder, s0, token_states, mask, config.max_len
                )
            else:
                out_ids = decode_sampled(
                    model.question_decoder, s0, token_states, mask,
                    config.max_len, generator,
                )
            results.append(GenerationResult(
                question=[vocab.token(i) for i in out_ids],
                predicted_type=QuestionType(qt_id),
                z_t=z_t[0].tolist(),
                z_a=z_a[0].tolist(),
                z_q=z_q[0].tolist(),
                type_distribution=type_distribution.tolist(),
                seed=seed,
            ))
    return results


def batch_generate(posts: Sequence[Sequence[str]], model: TriplewiseModel,
                   vocab: Vocabulary, seed: int, strategy: str = "greedy",
                   n_samples: int = 1, out_path: str | Path | None = None,
                   ) -> list[dict]:
    """Generate for every post with per-example derived seeds (seed + index).

    Records carry {post, question, predicted_type, seed}; when out_path is
    given they are also written as JSON lines.
    """
    records: list[dict] = []
    for index, post in enumerate(posts):
        for result in generate(post, model, vocab, seed + index, strategy, n_samples):
            records.append({
                "post": " ".join(post),
                "question": " ".join(result.question),
                "predicted_type": result.predicted_type.name,
                "seed": result.seed,
            })
    if out_path is not None:
        try:
            with open(out_path, "w", encoding="utf-8") as handle:
                for record_no, record in enumerate(records):
                    handle.write(json.dumps(record) + "\n")
        except OSError as exc:
            raise OSError(f"failed writing record {record_no} to {out_path}: {exc}") from exc
    return records
