"""Attention, graph-attention and feed-forward building blocks."""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import nn


def sinusoidal_encoding(length: int, d_model: int, dtype=torch.float32) -> torch.Tensor:
    pos = torch.arange(length, dtype=torch.float64)[:, None]
    i = torch.arange(d_model, dtype=torch.float64)[None, :]
    angle = pos / torch.pow(10000.0, (2 * torch.div(i, 2, rounding_mode="floor")) / d_model)
    pe = torch.where(i.long() % 2 == 0, torch.sin(angle), torch.cos(angle))
    return pe.to(dtype)


def masked_softmax(scores: torch.Tensor, mask: torch.Tensor | None) -> torch.Tensor:
    if mask is not None:
        scores = scores.masked_fill(~mask, float("-inf"))
    return torch.softmax(scores, dim=-1)


class MultiHeadAttention(nn.Module):
    """Scaled dot-product attention with per-head Q/K/V projections and an output projection.

    The per-head matrices are stored stacked in one ``[d_model, d_model]`` weight each.
    """

    def __init__(self, d_model: int, heads: int):
        super().__init__()
        self.heads = heads
        self.d_k = d_model // heads
        self.w_q = nn.Linear(d_model, d_model, bias=False)
        self.w_k = nn.Linear(d_model, d_model, bias=False)
        self.w_v = nn.Linear(d_model, d_model, bias=False)
        self.w_o = nn.Linear(d_model, d_model, bias=False)

    def _split(self, x: torch.Tensor) -> torch.Tensor:
        b, t, _ = x.shape
        return x.view(b, t, self.heads, self.d_k).transpose(1, 2)

    def forward(self, query, key, value, mask=None):
        """``mask``: bool, broadcastable to ``[batch, heads, q_len, k_len]``; True keeps a key.

        Returns the attended output and the per-head weights.
        """
        q = self._split(self.w_q(query))
        k = self._split(self.w_k(key))
        v = self._split(self.w_v(value))
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.d_k)
        weights = masked_softmax(scores, mask)
        out = (weights @ v).transpose(1, 2).reshape(query.shape[0], query.shape[1], -1)
        return self.w_o(out), weights


class FeedForward(nn.Module):
    def __init__(self, d_model: int, d_ff: int):
        super().__init__()
        self.fc1 = nn.Linear(d_model, d_ff)
        self.fc2 = nn.Linear(d_ff, d_model)

    def forward(self, x, dropout: float = 0.0, training: bool = False):
        return self.fc2(F.dropout(F.relu(self.fc1(x)), dropout, training))


class EncoderLayer(nn.Module):
    def __init__(self, d_model, heads, d_ff):
        super().__init__()
        self.attn = MultiHeadAttention(d_model, heads)
        self.norm1 = nn.LayerNorm(d_model)
        self.ffn = FeedForward(d_model, d_ff)
        self.norm2 = nn.LayerNorm(d_model)

    def forward(self, x, mask, dropout=0.0):
        a, w = self.attn(x, x, x, mask)
        x = self.norm1(x + F.dropout(a, dropout, self.training))
        x = self.norm2(x + F.dropout(self.ffn(x, dropout, self.training), dropout, self.training))
        return x, w


class DecoderLayer(nn.Module):
    """Masked self-attention, then attention over graph states, then over clue states, then FFN."""

    def __init__(self, d_model, heads, d_ff):
        super().__init__()
        self.self_attn = MultiHeadAttention(d_model, heads)
        self.norm1 = nn.LayerNorm(d_model)
        self.graph_attn = MultiHeadAttention(d_model, heads)
        self.norm2 = nn.LayerNorm(d_model)
        self.clue_attn = MultiHeadAttention(d_model, heads)
        self.norm3 = nn.LayerNorm(d_model)
        self.ffn = FeedForward(d_model, d_ff)
        self.norm4 = nn.LayerNorm(d_model)

    def forward(self, x, self_mask, graph, graph_mask, clues, clue_mask, dropout=0.0):
        drop = lambda t: F.dropout(t, dropout, self.training)
        a, _ = self.self_attn(x, x, x, self_mask)
        x = self.norm1(x + drop(a))
        a, _ = self.graph_attn(x, graph, graph, graph_mask)
        x = self.norm2(x + drop(a))
        a, clue_w = self.clue_attn(x, clues, clues, clue_mask)
        x = self.norm3(x + drop(a))
        x = self.norm4(x + drop(self.ffn(x, dropout, self.training)))
        return x, clue_w


def gat_layer(
    features: torch.Tensor,
    adjacency: torch.Tensor,
    weight: torch.Tensor,
    att: torch.Tensor,
    mode: str = "concat",
    leaky_slope: float = 0.2,
    return_attention: bool = False,
):
    """One multi-head graph attention layer.

    features: ``[n, d_in]``; adjacency: bool ``[n, n]`` with self-loops on the diagonal;
    weight: ``[heads, d_out, d_in]``; att: ``[heads, 2 * d_out]`` (source half first).
    ``concat`` applies ELU per head and concatenates; ``average`` averages heads then applies ELU.
    """
    if not bool(adjacency.diagonal().all()):
        raise ValueError("every vertex must be in its own neighborhood")
    d_out = weight.shape[1]
    wh = torch.einsum("fod,nd->fno", weight, features)
    src = wh @ att[:, :d_out, None]
    dst = wh @ att[:, d_out:, None]
    logits = F.leaky_relu(src + dst.transpose(1, 2), leaky_slope)
    alpha = masked_softmax(logits, adjacency[None])
    out = alpha @ wh
    if mode == "concat":
        h = F.elu(out).transpose(0, 1).reshape(features.shape[0], -1)
    elif mode == "average":
        h = F.elu(out.mean(dim=0))
    else:
        raise ValueError(f"mode must be 'concat' or 'average', got {mode!r}")
    return (h, alpha) if return_attention else h


class GATLayer(nn.Module):
    def __init__(self, d_in: int, d_out: int, heads: int, mode: str, leaky_slope: float):
        super().__init__()
        self.mode = mode
        self.leaky_slope = leaky_slope
        self.weight = nn.Parameter(torch.empty(heads, d_out, d_in))
        self.att = nn.Parameter(torch.empty(heads, 2 * d_out))

    def forward(self, features, adjacency, return_attention=False):
        return gat_layer(features, adjacency, self.weight, self.att, self.mode, self.leaky_slope, return_attention)
