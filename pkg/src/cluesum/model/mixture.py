"""Translation gate and the neural/lexicon mixture over the target vocabulary."""

from __future__ import annotations

import numpy as np
import torch

from ..corpus import BilingualLexicon, Vocabulary


def translation_gate(h: torch.Tensor, w1: torch.Tensor, b1: torch.Tensor, w2: torch.Tensor, b2: torch.Tensor) -> torch.Tensor:
    """p_trans = sigmoid(W2 (W1 h + b1) + b2); ``w1`` is ``[d, d]``, ``w2`` is ``[1, d]``."""
    hidden = h @ w1.T + b1
    p = torch.sigmoid(hidden @ w2.T + b2).squeeze(-1)
    # keep the gate strictly inside (0, 1) even where the sigmoid rounds to 0 or 1
    eps = torch.finfo(p.dtype).eps
    return p.clamp(eps, 1 - eps)


def translation_matrix(clue_src_tokens: list[str], lexicon: BilingualLexicon, tgt_vocab: Vocabulary) -> tuple[np.ndarray, np.ndarray]:
    """Row ``i`` holds P_T(clue_src_tokens[i] => w) over target ids (plus the separator column).

    Lexicon targets missing from the target vocabulary land on UNK. Also returns the
    0/1 coverage vector marking clue positions the lexicon knows.
    """
    n, v = len(clue_src_tokens), len(tgt_vocab) + 1
    mat = np.zeros((n, v))
    covered = np.zeros(n)
    for i, src in enumerate(clue_src_tokens):
        cands = lexicon.get(src) if src is not None else []
        if not cands:
            continue
        covered[i] = 1.0
        for tgt, p in cands:
            mat[i, tgt_vocab.id_of.get(tgt.lower(), tgt_vocab.unk_id)] += p
    return mat, covered


def mix(p_neural: torch.Tensor, p_trans: torch.Tensor, alpha: torch.Tensor, trans: torch.Tensor, covered: torch.Tensor) -> torch.Tensor:
    """Batched mixture.

    p_neural ``[B, T, V]``, p_trans ``[B, T]``, alpha ``[B, T, C]``, trans ``[B, C, V]``,
    covered ``[B, C]``; a single step drops the two leading axes. Attention on
    positions the lexicon does not cover is handed to the neural branch, so the
    result always sums to one.
    """
    translated = alpha @ trans
    coverage = alpha @ covered.unsqueeze(-1)
    p = p_trans.unsqueeze(-1)
    return p * translated + (1 - p * coverage) * p_neural


def mix_distribution(p_neural, p_trans, alpha, clue_src_tokens, lexicon: BilingualLexicon, tgt_vocab: Vocabulary):
    """Single-step mixture over ``len(tgt_vocab) + 1`` target ids (numpy in, numpy out).

    ``p_neural`` may also be sized ``len(tgt_vocab)``; it is then padded with a zero
    separator column.
    """
    p_neural = np.asarray(p_neural, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    mat, covered = translation_matrix(list(clue_src_tokens), lexicon, tgt_vocab)
    if p_neural.shape[-1] == len(tgt_vocab):
        p_neural = np.append(p_neural, 0.0)
    out = mix(torch.from_numpy(p_neural), torch.tensor(float(p_trans), dtype=torch.float64),
              torch.from_numpy(alpha), torch.from_numpy(mat), torch.from_numpy(covered))
    return out.numpy()
