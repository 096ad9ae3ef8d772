"""Attention decoders and the question-type prediction network."""
from __future__ import annotations

import torch
import torch.nn as nn

from .data import EOS_ID, PAD_ID, SOS_ID

N_QUESTION_TYPES = 9


class AdditiveAttention(nn.Module):
    """Additive (concat) attention over encoder token states."""

    def __init__(self, query_dim: int, key_dim: int, attn_dim: int):
        super().__init__()
        self.query_proj = nn.Linear(query_dim, attn_dim)
        self.key_proj = nn.Linear(key_dim, attn_dim)
        self.score = nn.Linear(attn_dim, 1, bias=False)

    def forward(self, query: torch.Tensor, keys: torch.Tensor, mask: torch.Tensor):
        # query [B, Hd], keys [B, L, 2H], mask [B, L] (True = attendable)
        if (~mask).all(dim=1).any():
            raise ValueError("attention requires at least one unmasked position")
        scores = self.score(
            torch.tanh(self.query_proj(query).unsqueeze(1) + self.key_proj(keys))
        ).squeeze(-1)
        scores = scores.masked_fill(~mask, float("-inf"))
        weights = torch.softmax(scores, dim=-1)
        context = torch.bmm(weights.unsqueeze(1), keys).squeeze(1)
        return context, weights


class AttentionDecoder(nn.Module):
    """GRU decoder attending over post token states.

    Each step fuses [prev embedding; context; state] through a tanh layer
    before the output projection over the vocabulary.
    """

    def __init__(self, embedding: nn.Embedding, init_dim: int, hidden: int,
                 ctx_dim: int, vocab_size: int, dropout: float):
        super().__init__()
        self.embedding = embedding
        emb_dim = embedding.embedding_dim
        self.init_proj = nn.Linear(init_dim, hidden)
        self.attention = AdditiveAttention(hidden, ctx_dim, hidden)
        self.cell = nn.GRUCell(emb_dim + ctx_dim, hidden)
        self.fusion = nn.Linear(emb_dim + ctx_dim + hidden, hidden)
        self.out = nn.Linear(hidden, vocab_size)
        self.input_dropout = nn.Dropout(dropout)
        self.fusion_dropout = nn.Dropout(dropout)

    def initial_state(self, *parts: torch.Tensor) -> torch.Tensor:
        return self.init_proj(torch.cat(parts, dim=-1))

    def step(self, prev_emb: torch.Tensor, state: torch.Tensor,
             token_states: torch.Tensor, mask: torch.Tensor):
        context, weights = self.attention(state, token_states, mask)
        new_state = self.cell(torch.cat([prev_emb, context], dim=-1), state)
        fused = torch.tanh(self.fusion(torch.cat([prev_emb, context, new_state], dim=-1)))
        logits = self.out(self.fusion_dropout(fused))
        return new_state, logits, weights

    def teacher_forced(self, init_state: torch.Tensor, input_ids: torch.Tensor,
                       token_states: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        # input_ids [B, L] -> logits [B, L, V]
        emb = self.input_dropout(self.embedding(input_ids))
        state = init_state
        logits = []
        for j in range(input_ids.size(1)):
            state, step_logits, _ = self.step(emb[:, j], state, token_states, mask)
            logits.append(step_logits)
        return torch.stack(logits, dim=1)


class TypePredictor(nn.Module):
    """Feed-forward classifier over the 9 question types."""

    def __init__(self, in_dim: int, hidden: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(in_dim, hidden), nn.Tanh(), nn.Linear(hidden, N_QUESTION_TYPES)
        )

    def forward(self, *inputs: torch.Tensor) -> torch.Tensor:
        return self.net(torch.cat(inputs, dim=-1))


def _forbid_special(logits: torch.Tensor) -> torch.Tensor:
    logits = logits.clone()
    logits[..., PAD_ID] = float("-inf")
    logits[..., SOS_ID] = float("-inf")
    return logits


def decode_greedy(decoder: AttentionDecoder, init_state: torch.Tensor,
                  token_states: torch.Tensor, mask: torch.Tensor,
                  max_len: int) -> list[int]:
    """Argmax decoding from SOS until EOS or max_len tokens; EOS is dropped."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    state = init_state
    prev = torch.full((init_state.size(0),), SOS_ID, dtype=torch.long,
                      device=init_state.device)
    ids: list[int] = []
    for _ in range(max_len):
        state, logits, _ = decoder.step(decoder.embedding(prev), state, token_states, mask)
        next_id = int(_forbid_special(logits)[0].argmax())
        if next_id == EOS_ID:
            break
        ids.append(next_id)
        prev = torch.full_like(prev, next_id)
    return ids


def decode_sampled(decoder: AttentionDecoder, init_state: torch.Tensor,
                   token_states: torch.Tensor, mask: torch.Tensor,
                   max_len: int, generator: torch.Generator) -> list[int]:
    """Ancestral sampling from the per-step softmax; EOS is dropped."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    state = init_state
    prev = torch.full((init_state.size(0),), SOS_ID, dtype=torch.long,
                      device=init_state.device)
    ids: list[int] = []
    for _ in range(max_len):
        state, logits, _ = decoder.step(decoder.embedding(prev), state, token_states, mask)
        probs = torch.softmax(_forbid_special(logits)[0], dim=-1)
        next_id = int(torch.multinomial(probs, 1, generator=generator))
        if next_id == EOS_ID:
            break
        ids.append(next_id)
        prev = torch.full_like(prev, next_id)
    return ids
