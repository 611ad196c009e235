"""TextRank keyword extraction and phrase merging into key clues."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable

import numpy as np

from .corpus import Document, is_punct, load_stopwords


@dataclass
class WordGraph:
    nodes: list[str]
    edges: dict[tuple[str, str], int]
    window: int = 4

    def __post_init__(self):
        for (u, v), w in self.edges.items():
            if u == v:
                raise ValueError("self-edges are not allowed")
            if w < 1:
                raise ValueError("edge counts must be >= 1")


@dataclass(frozen=True)
class Clue:
    tokens: tuple[str, ...]
    score: float

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass
class ClueSet:
    clues: list[Clue] = field(default_factory=list)

    def __len__(self):
        return len(self.clues)

    def __iter__(self):
        return iter(self.clues)

    def __getitem__(self, i):
        return self.clues[i]

    @property
    def sequences(self) -> list[tuple[str, ...]]:
        return [c.tokens for c in self.clues]

    def flat_tokens(self) -> list[str]:
        return [t for c in self.clues for t in c.tokens]


@dataclass
class ClueConfig:
    window: int = 4
    damping: float = 0.85
    tol: float = 1e-6
    max_iter: int = 100
    top_ratio: float = 1 / 3
    max_clues: int = 20
    stopwords: frozenset[str] | None = None  # None: packaged list for the document language


def _is_candidate(tok: str, stopwords: frozenset[str]) -> bool:
    return tok not in stopwords and not is_punct(tok)


def build_word_graph(doc: Document, window: int = 4, stopwords: frozenset[str] = frozenset()) -> WordGraph:
    """Co-occurrence graph over candidate tokens.

    Windows are taken over the original token positions of each sentence, so a
    filtered stopword still occupies a slot.
    """
    if window < 2:
        raise ValueError("window must be >= 2")
    nodes: dict[str, None] = {}
    edges: dict[tuple[str, str], int] = {}
    for sent in doc.sentences:
        toks = sent.normalized
        cand = [_is_candidate(t, stopwords) for t in toks]
        for i, t in enumerate(toks):
            if not cand[i]:
                continue
            nodes.setdefault(t)
            for j in range(i + 1, min(i + window, len(toks))):
                u = toks[j]
                if not cand[j] or u == t:
                    continue
                key = (t, u) if t < u else (u, t)
                edges[key] = edges.get(key, 0) + 1
    return WordGraph(list(nodes), edges, window)


def pagerank(
    graph,
    damping: float = 0.85,
    tol: float = 1e-6,
    max_iter: int = 100,
) -> dict[Hashable, float]:
    """Weighted TextRank iteration from an all-ones start.

    ``graph`` needs ``nodes`` (sequence) and ``edges`` (mapping of unordered node
    pairs to positive weights). Isolated nodes settle at ``1 - damping``.
    """
    if not 0 < damping < 1:
        raise ValueError("damping must lie in (0, 1)")
    if tol <= 0:
        raise ValueError("tol must be positive")
    nodes = list(graph.nodes)
    if not nodes:
        return {}
    index = {n: i for i, n in enumerate(nodes)}
    n = len(nodes)
    w = np.zeros((n, n))
    for (u, v), weight in graph.edges.items():
        i, j = index[u], index[v]
        w[i, j] += weight
        w[j, i] += weight
    out_strength = w.sum(axis=1)
    # transition[u, v] = w(u, v) / sum_x w(u, x)
    transition = np.divide(w, out_strength[:, None], out=np.zeros_like(w), where=out_strength[:, None] > 0)
    scores = np.ones(n)
    for _ in range(max_iter):
        new = (1 - damping) + damping * (transition.T @ scores)
        delta = np.max(np.abs(new - scores))
        scores = new
        if delta < tol:
            break
    return {node: float(scores[index[node]]) for node in nodes}


def extract_clues(doc: Document, cfg: ClueConfig | None = None, **overrides) -> ClueSet:
    cfg = cfg or ClueConfig()
    if overrides:
        cfg = ClueConfig(**{**cfg.__dict__, **overrides})
    if not 0 < cfg.top_ratio <= 1:
        raise ValueError("top_ratio must lie in (0, 1]")
    stopwords = cfg.stopwords if cfg.stopwords is not None else load_stopwords(doc.language)

    graph = build_word_graph(doc, cfg.window, stopwords)
    if not graph.nodes:
        return ClueSet([])
    scores = pagerank(graph, cfg.damping, cfg.tol, cfg.max_iter)

    first_pos: dict[str, int] = {}
    pos = 0
    for sent in doc.sentences:
        for t in sent.normalized:
            first_pos.setdefault(t, pos)
            pos += 1

    n_keep = min(math.ceil(cfg.top_ratio * len(graph.nodes)), len(graph.nodes))
    ranked = sorted(graph.nodes, key=lambda t: (-scores[t], first_pos[t]))
    keywords = set(ranked[:n_keep])

    # maximal runs of adjacent keywords become phrases
    found: dict[tuple[str, ...], int] = {}
    pos = 0
    for sent in doc.sentences:
        toks = sent.normalized
        run: list[str] = []
        run_start = 0
        for i, t in enumerate(toks + [None]):
            if t is not None and t in keywords:
                if not run:
                    run_start = pos + i
                run.append(t)
                continue
            if run:
                found.setdefault(tuple(run), run_start)
                run = []
        pos += len(toks)

    clues = [Clue(seq, sum(scores[t] for t in seq)) for seq in found]
    clues.sort(key=lambda c: (-c.score, found[c.tokens]))
    return ClueSet(clues[: cfg.max_clues])


def clue_set_from_sequences(seqs) -> ClueSet:
    """Wrap raw token sequences (e.g. hand-written test clues) as a ClueSet, in the given order."""
    n = len(seqs)
    return ClueSet([Clue(tuple(s), float(n - i)) for i, s in enumerate(seqs)])
