"""Bidirectional recurrent encoders for utterances and utterance sequences."""
from __future__ import annotations

import torch
import torch.nn as nn
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence


class UtteranceEncoder(nn.Module):
    """Single-layer bidirectional GRU over one padded utterance.

    The summary concatenates the forward state at the true last token with
    the backward state at the first token; padded positions influence
    neither the summary nor the per-token states.
    """

    def __init__(self, embedding: nn.Embedding, hidden: int):
        super().__init__()
        self.embedding = embedding
        self.rnn = nn.GRU(
            embedding.embedding_dim, hidden, batch_first=True, bidirectional=True
        )

    def forward(self, ids: torch.Tensor, lengths: torch.Tensor):
        # ids: [B, L], lengths: [B] -> summary [B, 2H], token_states [B, L, 2H]
        if (lengths < 1).any():
            raise ValueError("utterance length must be >= 1")
        emb = self.embedding(ids)
        packed = pack_padded_sequence(
            emb, lengths.cpu(), batch_first=True, enforce_sorted=False
        )
        states, h_n = self.rnn(packed)
        token_states, _ = pad_packed_sequence(
            states, batch_first=True, total_length=ids.size(1)
        )
        summary = torch.cat([h_n[0], h_n[1]], dim=-1)
        return summary, token_states


class TripleEncoder(nn.Module):
    """Bidirectional GRU over a short sequence of utterance summaries."""

    def __init__(self, input_dim: int, hidden: int):
        super().__init__()
        self.input_dim = input_dim
        self.rnn = nn.GRU(input_dim, hidden, batch_first=True, bidirectional=True)

    def forward(self, summaries: torch.Tensor) -> torch.Tensor:
        # summaries: [B, T, 2H] with T=3 in training, T=1 at inference
        if summaries.size(-1) != self.input_dim:
            raise ValueError(
                f"expected summaries of dim {self.input_dim}, got {summaries.size(-1)}"
            )
        _, h_n = self.rnn(summaries)
        return torch.cat([h_n[0], h_n[1]], dim=-1)


def length_mask(lengths: torch.Tensor, max_len: int) -> torch.Tensor:
    """Boolean [B, max_len] mask, True at positions < length."""
    positions = torch.arange(max_len, device=lengths.device)
    return positions.unsqueeze(0) < lengths.unsqueeze(1)
