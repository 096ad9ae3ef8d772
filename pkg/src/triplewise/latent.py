"""Diagonal-Gaussian latent machinery: prior/recognition networks, the
context bridge, reparameterized sampling and closed-form KL divergence."""
from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F


@dataclass
class GaussianParams:
    mu: torch.Tensor     # [..., D]
    sigma: torch.Tensor  # [..., D], strictly positive


@dataclass
class LatentSample:
    z: torch.Tensor
    source: str  # "prior" or "posterior"


@dataclass
class ContextBridge:
    h_ctx_p: torch.Tensor
    h_ctx_q: torch.Tensor
    h_ctx_a: torch.Tensor


def standard_prior(dim: int, *, dtype=torch.float32, device=None) -> GaussianParams:
    """Standard Gaussian N(0, I)."""
    return GaussianParams(
        mu=torch.zeros(dim, dtype=dtype, device=device),
        sigma=torch.ones(dim, dtype=dtype, device=device),
    )


def reparameterize(params: GaussianParams, eps: torch.Tensor, source: str = "posterior") -> LatentSample:
    """z = mu + sigma * eps; gradients flow to mu and sigma."""
    return LatentSample(z=params.mu + params.sigma * eps, source=source)


def kl_divergence(q: GaussianParams, p: GaussianParams) -> torch.Tensor:
    """KL(q || p) between diagonal Gaussians, summed over the last dim."""
    if (q.sigma <= 0).any() or (p.sigma <= 0).any():
        raise ValueError("sigma must be strictly positive")
    var_q = q.sigma.pow(2)
    var_p = p.sigma.pow(2)
    term = torch.log(p.sigma / q.sigma) + (var_q + (q.mu - p.mu).pow(2)) / (2.0 * var_p) - 0.5
    return term.sum(dim=-1)


class GaussianHead(nn.Module):
    """Feed-forward network producing a diagonal Gaussian.

    tanh hidden layers feed two parallel linear heads; sigma goes through a
    softplus with a small positivity floor guarding log-domain arithmetic.
    """

    def __init__(self, in_dim: int, hidden: int, z_dim: int, n_hidden: int,
                 sigma_min: float = 1e-6):
        super().__init__()
        layers: list[nn.Module] = []
        dim = in_dim
        for _ in range(n_hidden):
            layers.extend([nn.Linear(dim, hidden), nn.Tanh()])
            dim = hidden
        self.trunk = nn.Sequential(*layers)
        self.mu_head = nn.Linear(dim, z_dim)
        self.sigma_head = nn.Linear(dim, z_dim)
        self.sigma_min = sigma_min

    def forward(self, *inputs: torch.Tensor) -> GaussianParams:
        h = self.trunk(torch.cat(inputs, dim=-1))
        sigma = F.softplus(self.sigma_head(h)).clamp_min(self.sigma_min)
        return GaussianParams(mu=self.mu_head(h), sigma=sigma)


class ContextBridgeNet(nn.Module):
    """Connects the triple-level latent with the post representation.

    One recurrent-cell step takes the triple latent as input and the post
    summary as initial hidden state; two transfer MLPs then map the result
    into the question and answer context spaces.
    """

    def __init__(self, z_dim: int, ctx_dim: int, mlp_hidden: int):
        super().__init__()
        self.cell = nn.GRUCell(z_dim, ctx_dim)
        self.to_question = nn.Sequential(
            nn.Linear(ctx_dim, mlp_hidden), nn.Tanh(), nn.Linear(mlp_hidden, ctx_dim)
        )
        self.to_answer = nn.Sequential(
            nn.Linear(ctx_dim, mlp_hidden), nn.Tanh(), nn.Linear(mlp_hidden, ctx_dim)
        )

    def forward(self, z_t: torch.Tensor, h_enc_p: torch.Tensor) -> ContextBridge:
        h_ctx_p = self.cell(z_t, h_enc_p)
        return ContextBridge(
            h_ctx_p=h_ctx_p,
            h_ctx_q=self.to_question(h_ctx_p),
            h_ctx_a=self.to_answer(h_ctx_p),
        )
