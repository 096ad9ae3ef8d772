"""The full generative model: encoders, hierarchical latents and decoders.

The training forward pass samples the triple-level latent from its
recognition network over all three utterances, derives the answer and
question latents through the context bridge, and teacher-forces both
decoders over the post's token states. Inference-side pieces (post-only
triple latent, prior sampling, decoding) are exposed as separate methods.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import torch
import torch.nn as nn

from .config import TrainConfig
from .data import EncodedTriple, SOS_ID
from .decoders import AttentionDecoder, TypePredictor
from .encoders import TripleEncoder, UtteranceEncoder, length_mask
from .latent import (
    ContextBridge,
    ContextBridgeNet,
    GaussianHead,
    GaussianParams,
    reparameterize,
)


@dataclass
class Batch:
    post_ids: torch.Tensor      # [B, L] long
    post_len: torch.Tensor      # [B] long
    question_ids: torch.Tensor
    question_len: torch.Tensor
    answer_ids: torch.Tensor
    answer_len: torch.Tensor
    qt_id: torch.Tensor         # [B] long

    def __len__(self) -> int:
        return self.post_ids.size(0)


def collate(encoded: Sequence[EncodedTriple]) -> Batch:
    return Batch(
        post_ids=torch.tensor([e.post_ids for e in encoded], dtype=torch.long),
        post_len=torch.tensor([e.post_len for e in encoded], dtype=torch.long),
        question_ids=torch.tensor([e.question_ids for e in encoded], dtype=torch.long),
        question_len=torch.tensor([e.question_len for e in encoded], dtype=torch.long),
        answer_ids=torch.tensor([e.answer_ids for e in encoded], dtype=torch.long),
        answer_len=torch.tensor([e.answer_len for e in encoded], dtype=torch.long),
        qt_id=torch.tensor([e.question_type_id for e in encoded], dtype=torch.long),
    )


def shift_right(ids: torch.Tensor) -> torch.Tensor:
    """Teacher-forcing decoder inputs: SOS followed by the targets minus one."""
    sos = torch.full_like(ids[:, :1], SOS_ID)
    return torch.cat([sos, ids[:, :-1]], dim=1)


class BowHead(nn.Module):
    """Predicts target words directly from a latent (one tanh hidden layer)."""

    def __init__(self, z_dim: int, hidden: int, vocab_size: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(z_dim, hidden), nn.Tanh(), nn.Linear(hidden, vocab_size)
        )

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        return self.net(z)


@dataclass
class ForwardOutputs:
    posterior_t: GaussianParams
    prior_a: GaussianParams
    posterior_a: GaussianParams
    prior_q: GaussianParams
    posterior_q: GaussianParams
    z_t: torch.Tensor
    z_a: torch.Tensor
    z_q: torch.Tensor
    bridge: ContextBridge
    question_logits: torch.Tensor  # [B, L, V]
    answer_logits: torch.Tensor
    qt_logits: torch.Tensor        # [B, 9]
    bow_triple_logits: torch.Tensor
    bow_answer_logits: torch.Tensor
    bow_question_logits: torch.Tensor


class TriplewiseModel(nn.Module):

    def __init__(self, config: TrainConfig, vocab_size: int):
        super().__init__()
        self.config = config
        self.vocab_size = vocab_size
        emb, hid, lat = config.embed_dim, config.hidden, config.latent_dim
        ctx = 2 * hid
        # embeddings shared by the encoders and both decoders
        self.embedding = nn.Embedding(vocab_size, emb, padding_idx=0)
        self.post_encoder = UtteranceEncoder(self.embedding, hid)
        self.question_encoder = UtteranceEncoder(self.embedding, hid)
        self.answer_encoder = UtteranceEncoder(self.embedding, hid)
        self.triple_encoder = TripleEncoder(ctx, hid)
        # recognition networks have two hidden layers, priors one
        self.recog_triple = GaussianHead(ctx, hid, lat, n_hidden=2,
                                         sigma_min=config.sigma_min)
        self.bridge = ContextBridgeNet(lat, ctx, hid)
        self.prior_answer = GaussianHead(ctx + lat, hid, lat, n_hidden=1,
                                         sigma_min=config.sigma_min)
        self.recog_answer = GaussianHead(ctx + lat + ctx, hid, lat, n_hidden=2,
                                         sigma_min=config.sigma_min)
        self.prior_question = GaussianHead(ctx + 2 * lat, hid, lat, n_hidden=1,
                                           sigma_min=config.sigma_min)
        self.recog_question = GaussianHead(2 * ctx + 3 * lat, hid, lat, n_hidden=2,
                                           sigma_min=config.sigma_min)
        # one learned vector per question type, fed to the question decoder
        self.qt_embedding = nn.Embedding(9, lat)
        self.type_predictor = TypePredictor(2 * lat + ctx, hid)
        self.question_decoder = AttentionDecoder(
            self.embedding, init_dim=3 * lat + ctx, hidden=hid, ctx_dim=ctx,
            vocab_size=vocab_size, dropout=config.dropout,
        )
        self.answer_decoder = AttentionDecoder(
            self.embedding, init_dim=2 * lat + ctx, hidden=hid, ctx_dim=ctx,
            vocab_size=vocab_size, dropout=config.dropout,
        )
        self.bow_triple = BowHead(lat, hid, vocab_size)
        self.bow_answer = BowHead(lat, hid, vocab_size)
        self.bow_question = BowHead(lat, hid, vocab_size)

    def encode_post(self, post_ids: torch.Tensor, post_len: torch.Tensor):
        summary, token_states = self.post_encoder(post_ids, post_len)
        mask = length_mask(post_len, post_ids.size(1))
        return summary, token_states, mask

    def post_only_triple_posterior(self, h_enc_p: torch.Tensor) -> GaussianParams:
        """Triple-level posterior inferred from the post alone: the triple
        encoder runs over the length-1 sequence [h_enc_p]."""
        h_t = self.triple_encoder(h_enc_p.unsqueeze(1))
        return self.recog_triple(h_t)

    def question_initial_state(self, z_q, z_t, h_ctx_q, v_qt) -> torch.Tensor:
        return self.question_decoder.initial_state(z_q, z_t, h_ctx_q, v_qt)

    def answer_initial_state(self, z_a, z_t, h_ctx_a) -> torch.Tensor:
        return self.answer_decoder.initial_state(z_a, z_t, h_ctx_a)

    def forward(self, batch: Batch, eps_t: torch.Tensor, eps_a: torch.Tensor,
                eps_q: torch.Tensor, question_inputs: torch.Tensor | None = None,
                answer_inputs: torch.Tensor | None = None) -> ForwardOutputs:
        h_p, post_states, post_mask = self.encode_post(batch.post_ids, batch.post_len)
        h_q, _ = self.question_encoder(batch.question_ids, batch.question_len)
        h_a, _ = self.answer_encoder(batch.answer_ids, batch.answer_len)

        h_t = self.triple_encoder(torch.stack([h_p, h_q, h_a], dim=1))
        posterior_t = self.recog_triple(h_t)
        z_t = reparameterize(posterior_t, eps_t).z

        bridge = self.bridge(z_t, h_p)
        prior_a = self.prior_answer(bridge.h_ctx_a, z_t)
        posterior_a = self.recog_answer(bridge.h_ctx_a, z_t, h_a)
        z_a = reparameterize(posterior_a, eps_a).z

        prior_q = self.prior_question(bridge.h_ctx_q, z_t, z_a)
        v_qt = self.qt_embedding(batch.qt_id)
        posterior_q = self.recog_question(bridge.h_ctx_q, z_t, h_q, v_qt, z_a)
        z_q = reparameterize(posterior_q, eps_q).z

        qt_logits = self.type_predictor(z_q, z_t, h_p)

        if question_inputs is None:
            question_inputs = shift_right(batch.question_ids)
        if answer_inputs is None:
            answer_inputs = shift_right(batch.answer_ids)
        s0_q = self.question_initial_state(z_q, z_t, bridge.h_ctx_q, v_qt)
        question_logits = self.question_decoder.teacher_forced(
            s0_q, question_inputs, post_states, post_mask
        )
        s0_a = self.answer_initial_state(z_a, z_t, bridge.h_ctx_a)
        answer_logits = self.answer_decoder.teacher_forced(
            s0_a, answer_inputs, post_states, post_mask
        )

        return ForwardOutputs(
            posterior_t=posterior_t,
            prior_a=prior_a,
            posterior_a=posterior_a,
            prior_q=prior_q,
            posterior_q=posterior_q,
            z_t=z_t,
            z_a=z_a,
            z_q=z_q,
            bridge=bridge,
            question_logits=question_logits,
            answer_logits=answer_logits,
            qt_logits=qt_logits,
            bow_triple_logits=self.bow_triple(z_t),
            bow_answer_logits=self.bow_answer(z_a),
            bow_question_logits=self.bow_question(z_q),
        )
