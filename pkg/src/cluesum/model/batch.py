"""Per-pair model inputs (clues, pruned graph, ids) and padding into batches."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import torch

from ..clues import ClueConfig, ClueSet, extract_clues
from ..corpus import BilingualLexicon, CLSPair, Document, Vocabulary, tokenize
from ..graph import ArticleGraph, build_article_graph
from .mixture import translation_matrix

logger = logging.getLogger(__name__)


@dataclass
class PairFeatures:
    id: str
    vertex_ids: list[list[int]]  # source ids per surviving vertex, in graph order
    adjacency: np.ndarray  # bool [n_vertices, n_vertices], self-loops included
    clue_ids: list[int]
    clue_tokens: list[str | None]  # source string per clue position, None for separators
    trans: np.ndarray  # [len(clue_ids), tgt_vocab + 1]
    covered: np.ndarray  # [len(clue_ids)]
    target_ids: list[int] | None  # BOS ... EOS
    fallback: bool = False

    @property
    def num_tokens(self) -> int:
        src = sum(len(v) for v in self.vertex_ids) + len(self.clue_ids)
        return src + (len(self.target_ids) if self.target_ids else 0)


def clue_sequence(clues: ClueSet, src_vocab: Vocabulary, max_positions: int) -> tuple[list[int], list[str | None]]:
    """Clues in rank order joined by the separator; an empty ClueSet becomes a lone separator."""
    ids: list[int] = []
    toks: list[str | None] = []
    for k, clue in enumerate(clues):
        if k:
            ids.append(src_vocab.sep_id)
            toks.append(None)
        ids.extend(src_vocab.encode(clue.tokens))
        toks.extend(clue.tokens)
    if not ids:
        return [src_vocab.sep_id], [None]
    if len(ids) > max_positions:
        logger.info("clue sequence of %d tokens truncated to %d", len(ids), max_positions)
        ids, toks = ids[:max_positions], toks[:max_positions]
    return ids, toks


def target_ids(text: str, lang: str, tgt_vocab: Vocabulary, max_positions: int) -> list[int]:
    ids = tgt_vocab.encode(t.normalized for t in tokenize(text, lang))
    ids = ids[: max_positions - 2]
    return [tgt_vocab.bos_id] + ids + [tgt_vocab.eos_id]


def prepare_document(
    doc: Document,
    pair_id: str,
    src_vocab: Vocabulary,
    tgt_vocab: Vocabulary,
    lexicon: BilingualLexicon,
    clue_cfg: ClueConfig,
    max_positions: int,
    reference: str | None = None,
    tgt_lang: str = "zh",
    clues: ClueSet | None = None,
    graph: ArticleGraph | None = None,
) -> PairFeatures:
    if clues is None:
        clues = extract_clues(doc, clue_cfg)
    if graph is None:
        graph = build_article_graph(doc, clues)
    vertex_ids = []
    for idx in graph.indices:
        toks = doc.sentences[idx].normalized
        if len(toks) > max_positions:
            logger.info("pair %s sentence %d truncated from %d to %d tokens", pair_id, idx, len(toks), max_positions)
            toks = toks[:max_positions]
        vertex_ids.append(src_vocab.encode(toks))
    local = {s: k for k, s in enumerate(graph.indices)}
    adj = np.zeros((len(local), len(local)), dtype=bool)
    for s, nbrs in graph.adjacency().items():
        for t in nbrs:
            adj[local[s], local[t]] = True
    cids, ctoks = clue_sequence(clues, src_vocab, max_positions)
    trans, covered = translation_matrix(ctoks, lexicon, tgt_vocab)
    tids = target_ids(reference, tgt_lang, tgt_vocab, max_positions) if reference is not None else None
    return PairFeatures(pair_id, vertex_ids, adj, cids, ctoks, trans, covered, tids, graph.fallback)


def prepare_pair(pair: CLSPair, src_vocab, tgt_vocab, lexicon, clue_cfg, max_positions) -> PairFeatures:
    return prepare_document(pair.doc, pair.id, src_vocab, tgt_vocab, lexicon, clue_cfg, max_positions,
                            reference=pair.reference, tgt_lang=pair.tgt_lang)


@dataclass
class Batch:
    ids: list[str]
    sent_ids: torch.Tensor  # [n_vertices_total, max_sent_len]
    sent_mask: torch.Tensor  # bool, same shape
    vertex_owner: list[int]  # batch row of each vertex
    graph_adj: torch.Tensor  # block-diagonal bool [n_vertices_total, n_vertices_total]
    graph_slots: torch.Tensor  # [B, max_vertices] index into the flat vertex list (0 where padded)
    graph_mask: torch.Tensor  # bool [B, max_vertices]
    clue_ids: torch.Tensor  # [B, max_clue_len]
    clue_mask: torch.Tensor
    trans: torch.Tensor  # [B, max_clue_len, V]
    covered: torch.Tensor  # [B, max_clue_len]
    tgt_in: torch.Tensor | None  # [B, T]
    tgt_out: torch.Tensor | None
    tgt_mask: torch.Tensor | None

    def __len__(self):
        return len(self.ids)


def collate(features: list[PairFeatures], dtype=torch.float32, pad_id: int = 0) -> Batch:
    b = len(features)
    sents = [s for f in features for s in f.vertex_ids]
    owner = [k for k, f in enumerate(features) for _ in f.vertex_ids]
    max_len = max(len(s) for s in sents)
    sent_ids = torch.full((len(sents), max_len), pad_id, dtype=torch.long)
    for k, s in enumerate(sents):
        sent_ids[k, : len(s)] = torch.tensor(s, dtype=torch.long)
    sent_mask = torch.zeros_like(sent_ids, dtype=torch.bool)
    for k, s in enumerate(sents):
        sent_mask[k, : len(s)] = True

    total = len(sents)
    adj = torch.zeros((total, total), dtype=torch.bool)
    max_v = max(len(f.vertex_ids) for f in features)
    slots = torch.zeros((b, max_v), dtype=torch.long)
    gmask = torch.zeros((b, max_v), dtype=torch.bool)
    offset = 0
    for k, f in enumerate(features):
        n = len(f.vertex_ids)
        adj[offset : offset + n, offset : offset + n] = torch.from_numpy(f.adjacency)
        slots[k, :n] = torch.arange(offset, offset + n)
        gmask[k, :n] = True
        offset += n

    max_c = max(len(f.clue_ids) for f in features)
    v = features[0].trans.shape[1]
    clue_ids = torch.full((b, max_c), pad_id, dtype=torch.long)
    clue_mask = torch.zeros((b, max_c), dtype=torch.bool)
    trans = torch.zeros((b, max_c, v), dtype=dtype)
    covered = torch.zeros((b, max_c), dtype=dtype)
    for k, f in enumerate(features):
        c = len(f.clue_ids)
        clue_ids[k, :c] = torch.tensor(f.clue_ids, dtype=torch.long)
        clue_mask[k, :c] = True
        trans[k, :c] = torch.from_numpy(f.trans).to(dtype)
        covered[k, :c] = torch.from_numpy(f.covered).to(dtype)

    tgt_in = tgt_out = tgt_mask = None
    if all(f.target_ids is not None for f in features):
        max_t = max(len(f.target_ids) for f in features) - 1
        tgt_in = torch.full((b, max_t), pad_id, dtype=torch.long)
        tgt_out = torch.full((b, max_t), pad_id, dtype=torch.long)
        tgt_mask = torch.zeros((b, max_t), dtype=torch.bool)
        for k, f in enumerate(features):
            t = len(f.target_ids) - 1
            tgt_in[k, :t] = torch.tensor(f.target_ids[:-1])
            tgt_out[k, :t] = torch.tensor(f.target_ids[1:])
            tgt_mask[k, :t] = True

    return Batch([f.id for f in features], sent_ids, sent_mask, owner, adj, slots, gmask, clue_ids, clue_mask,
                 trans, covered, tgt_in, tgt_out, tgt_mask)
