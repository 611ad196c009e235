"""The clue-guided graph-to-sequence summarizer."""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .batch import Batch
from .config import ModelConfig
from .layers import DecoderLayer, EncoderLayer, FeedForward, GATLayer, MultiHeadAttention, sinusoidal_encoding
from .mixture import mix, translation_gate


@dataclass
class EncoderOutput:
    graph_states: torch.Tensor  # [B, max_vertices, d]
    graph_mask: torch.Tensor
    clue_states: torch.Tensor  # [B, max_clue_len, d]
    clue_mask: torch.Tensor
    trans: torch.Tensor
    covered: torch.Tensor

    def repeat(self, counts: torch.Tensor) -> "EncoderOutput":
        """Repeat batch rows (e.g. once per beam hypothesis)."""
        return EncoderOutput(*(t.repeat_interleave(counts, dim=0) for t in (
            self.graph_states, self.graph_mask, self.clue_states, self.clue_mask, self.trans, self.covered)))


@dataclass
class DecoderOutput:
    hidden: torch.Tensor  # [B, T, d]
    clue_attention: torch.Tensor  # [B, T, max_clue_len], final layer, head-averaged
    logits: torch.Tensor  # [B, T, V]


class ClueGraphSum(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        cfg.validate()
        if cfg.src_vocab < 4 or cfg.tgt_vocab < 4:
            raise ValueError("src_vocab and tgt_vocab must be set (>= 4)")
        self.cfg = cfg
        d = cfg.d_model
        self.src_embed = nn.Embedding(cfg.src_vocab + 1, d)
        self.tgt_embed = nn.Embedding(cfg.tgt_vocab + 1, d)

        self.vertex_attn = MultiHeadAttention(d, cfg.enc_heads)
        self.vertex_norm = nn.LayerNorm(d)
        gats = []
        for layer in range(cfg.gat_layers):
            final = layer == cfg.gat_layers - 1
            d_out = d if final else d // cfg.gat_heads
            gats.append(GATLayer(d, d_out, cfg.gat_heads, "average" if final else "concat", cfg.leaky_slope))
        self.gat = nn.ModuleList(gats)
        self.graph_ffn = FeedForward(d, cfg.d_ff)
        self.graph_norm = nn.LayerNorm(d)

        self.clue_layers = nn.ModuleList(EncoderLayer(d, cfg.enc_heads, cfg.d_ff) for _ in range(cfg.enc_layers))
        self.dec_layers = nn.ModuleList(DecoderLayer(d, cfg.enc_heads, cfg.d_ff) for _ in range(cfg.dec_layers))

        self.gate_w1 = nn.Linear(d, d)
        self.gate_w2 = nn.Linear(d, 1)
        self.out_proj = nn.Linear(d, cfg.tgt_vocab + 1)

        # the neural distribution never emits PAD, BOS or the separator
        blocked = torch.zeros(cfg.tgt_vocab + 1, dtype=torch.bool)
        blocked[[0, 2, cfg.tgt_vocab]] = True
        self.register_buffer("blocked", blocked, persistent=False)

    @property
    def dtype(self):
        return self.src_embed.weight.dtype

    def _embed(self, table: nn.Embedding, ids: torch.Tensor) -> torch.Tensor:
        pe = sinusoidal_encoding(ids.shape[-1], self.cfg.d_model, self.dtype)
        x = table(ids) * math.sqrt(self.cfg.d_model) + pe
        return F.dropout(x, self.cfg.dropout, self.training)

    # -- graph encoder -------------------------------------------------------

    def embed_vertices(self, sent_ids: torch.Tensor, sent_mask: torch.Tensor) -> torch.Tensor:
        """Word embeddings + positions, one self-attention block, then mean over real tokens."""
        x = self._embed(self.src_embed, sent_ids)
        a, _ = self.vertex_attn(x, x, x, sent_mask[:, None, None, :])
        x = self.vertex_norm(x + F.dropout(a, self.cfg.dropout, self.training))
        m = sent_mask.to(x.dtype).unsqueeze(-1)
        return (x * m).sum(1) / m.sum(1)

    def graph_encode(self, batch: Batch) -> torch.Tensor:
        h = self.embed_vertices(batch.sent_ids, batch.sent_mask)
        for layer in self.gat:
            h = layer(h, batch.graph_adj)
        z = self.graph_norm(h + F.dropout(self.graph_ffn(h, self.cfg.dropout, self.training), self.cfg.dropout, self.training))
        return z[batch.graph_slots] * batch.graph_mask.unsqueeze(-1).to(z.dtype)

    # -- clue encoder ----------------------------------------------------------

    def clue_encode(self, clue_ids: torch.Tensor, clue_mask: torch.Tensor, return_attention=False):
        x = self._embed(self.src_embed, clue_ids)
        weights = []
        for layer in self.clue_layers:
            x, w = layer(x, clue_mask[:, None, None, :], self.cfg.dropout)
            weights.append(w)
        return (x, weights) if return_attention else x

    def encode(self, batch: Batch) -> EncoderOutput:
        return EncoderOutput(self.graph_encode(batch), batch.graph_mask,
                             self.clue_encode(batch.clue_ids, batch.clue_mask), batch.clue_mask,
                             batch.trans.to(self.dtype), batch.covered.to(self.dtype))

    # -- decoder ---------------------------------------------------------------

    def decode(self, tgt_in: torch.Tensor, enc: EncoderOutput, tgt_mask: torch.Tensor | None = None) -> DecoderOutput:
        t = tgt_in.shape[1]
        causal = torch.tril(torch.ones(t, t, dtype=torch.bool))
        self_mask = causal[None, None]
        if tgt_mask is not None:
            self_mask = self_mask & tgt_mask[:, None, None, :]
        x = self._embed(self.tgt_embed, tgt_in)
        gmask = enc.graph_mask[:, None, None, :]
        cmask = enc.clue_mask[:, None, None, :]
        clue_w = None
        for layer in self.dec_layers:
            x, clue_w = layer(x, self_mask, enc.graph_states, gmask, enc.clue_states, cmask, self.cfg.dropout)
        logits = self.out_proj(x).masked_fill(self.blocked, float("-inf"))
        return DecoderOutput(x, clue_w.mean(dim=1), logits)

    def gate(self, hidden: torch.Tensor) -> torch.Tensor:
        return translation_gate(hidden, self.gate_w1.weight, self.gate_w1.bias, self.gate_w2.weight, self.gate_w2.bias)

    def output_distribution(self, dec: DecoderOutput, enc: EncoderOutput) -> tuple[torch.Tensor, torch.Tensor]:
        """Final P(w) per position and the gate values that produced it."""
        p_neural = torch.softmax(dec.logits, dim=-1)
        p_trans = self.gate(dec.hidden)
        return mix(p_neural, p_trans, dec.clue_attention, enc.trans, enc.covered), p_trans

    def forward(self, batch: Batch) -> torch.Tensor:
        """Mean negative log-likelihood of the gold target tokens under teacher forcing."""
        if batch.tgt_in is None:
            raise ValueError("batch has no targets")
        enc = self.encode(batch)
        dec = self.decode(batch.tgt_in, enc, batch.tgt_mask)
        probs, _ = self.output_distribution(dec, enc)
        gold = probs.gather(-1, batch.tgt_out.unsqueeze(-1)).squeeze(-1)
        # padded slots hold P(PAD) = 0; keep log() and its gradient finite there
        gold = torch.where(batch.tgt_mask, gold, torch.ones_like(gold))
        nll = -torch.log(gold)
        return nll[batch.tgt_mask].mean()

    @torch.no_grad()
    def teacher_forced_predictions(self, batch: Batch) -> torch.Tensor:
        enc = self.encode(batch)
        dec = self.decode(batch.tgt_in, enc, batch.tgt_mask)
        probs, _ = self.output_distribution(dec, enc)
        return probs.argmax(-1)

    def decode_step(self, prefix: torch.Tensor, enc: EncoderOutput):
        """Hidden row, clue attention row and P(w) for the next token after each prefix."""
        dec = self.decode(prefix, enc)
        last = DecoderOutput(dec.hidden[:, -1:], dec.clue_attention[:, -1:], dec.logits[:, -1:])
        probs, p_trans = self.output_distribution(last, enc)
        return last.hidden[:, 0], last.clue_attention[:, 0], last.logits[:, 0], probs[:, 0], p_trans[:, 0]
