"""Article graph construction over sentences and graph-based sentence extraction."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .clues import ClueConfig, ClueSet, extract_clues, pagerank
from .corpus import Document, Sentence, is_punct


@dataclass(frozen=True)
class Vertex:
    sentence_index: int
    self_weight: int
    weight: int


@dataclass
class ArticleGraph:
    vertices: list[Vertex]
    edges: dict[tuple[int, int], int] = field(default_factory=dict)
    fallback: bool = False

    def __len__(self):
        return len(self.vertices)

    @property
    def indices(self) -> list[int]:
        return [v.sentence_index for v in self.vertices]

    def adjacency(self) -> dict[int, list[int]]:
        """Neighbor lists keyed by sentence index, each including the vertex itself."""
        adj = {v.sentence_index: [v.sentence_index] for v in self.vertices}
        for i, j in sorted(self.edges):
            adj[i].append(j)
            adj[j].append(i)
        return {k: sorted(v) for k, v in adj.items()}

    def to_json(self) -> dict:
        return {
            "vertices": [{"idx": v.sentence_index, "self": v.self_weight, "weight": v.weight} for v in self.vertices],
            "edges": [[i, j, w] for (i, j), w in sorted(self.edges.items())],
            "fallback": self.fallback,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ArticleGraph":
        vertices = [Vertex(v["idx"], v["self"], v["weight"]) for v in data["vertices"]]
        edges = {(i, j): w for i, j, w in data["edges"]}
        return cls(vertices, edges, bool(data["fallback"]))


def contains_clue(tokens: list[str], clue: tuple[str, ...]) -> bool:
    n = len(clue)
    return any(tuple(tokens[i : i + n]) == clue for i in range(len(tokens) - n + 1))


def build_article_graph(doc: Document, clues: ClueSet) -> ArticleGraph:
    """Sentence graph weighted by shared clues; zero-weight sentences are dropped.

    If nothing would survive, every sentence is kept with a unit self-loop and no
    edges, and ``fallback`` is set.
    """
    seqs = {tuple(t.lower() for t in c.tokens) for c in clues}
    contained = [frozenset(c for c in seqs if contains_clue(s.normalized, c)) for s in doc.sentences]

    n = len(doc.sentences)
    edges: dict[tuple[int, int], int] = {}
    for i in range(n):
        for j in range(i + 1, n):
            common = len(contained[i] & contained[j])
            if common:
                edges[(i, j)] = common

    weight = [len(contained[i]) for i in range(n)]
    for (i, j), w in edges.items():
        weight[i] += w
        weight[j] += w

    vertices = [Vertex(i, len(contained[i]), weight[i]) for i in range(n) if weight[i] > 0]
    if not vertices:
        return ArticleGraph([Vertex(i, 1, 1) for i in range(n)], {}, fallback=True)
    # a pruned vertex has no shared clues, hence no edges to drop
    return ArticleGraph(vertices, edges, fallback=False)


def rank_sentences(graph: ArticleGraph) -> list[int]:
    if not graph.vertices:
        raise ValueError("cannot rank an empty graph")
    return [v.sentence_index for v in sorted(graph.vertices, key=lambda v: (-v.weight, v.sentence_index))]


@dataclass
class SentenceGraph:
    nodes: list[int]
    edges: dict[tuple[int, int], float]


def _content(sent: Sentence) -> list[str]:
    return [t for t in sent.normalized if not is_punct(t)]


def textrank_graph(doc: Document) -> SentenceGraph:
    words = [_content(s) for s in doc.sentences]
    edges = {}
    for i in range(len(words)):
        for j in range(i + 1, len(words)):
            if len(words[i]) < 2 or len(words[j]) < 2:
                continue
            overlap = len(set(words[i]) & set(words[j]))
            if overlap:
                edges[(i, j)] = overlap / (math.log(len(words[i])) + math.log(len(words[j])))
    return SentenceGraph(list(range(len(words))), edges)


def lexrank_graph(doc: Document, threshold: float = 0.1) -> SentenceGraph:
    words = [_content(s) for s in doc.sentences]
    n = len(words)
    df = Counter(w for ws in words for w in set(ws))
    idf = {w: math.log(n / c) for w, c in df.items()}
    vecs = []
    for ws in words:
        tf = Counter(ws)
        vecs.append({w: c * idf[w] for w, c in tf.items()})
    norms = [math.sqrt(sum(x * x for x in v.values())) for v in vecs]
    edges = {}
    for i in range(n):
        for j in range(i + 1, n):
            if norms[i] == 0 or norms[j] == 0:
                continue
            dot = sum(x * vecs[j].get(w, 0.0) for w, x in vecs[i].items())
            if dot / (norms[i] * norms[j]) >= threshold:
                edges[(i, j)] = 1.0
    return SentenceGraph(list(range(n)), edges)


@dataclass
class ExtractConfig:
    clue: ClueConfig = field(default_factory=ClueConfig)
    threshold: float = 0.1
    damping: float = 0.85
    tol: float = 1e-6
    max_iter: int = 100


METHODS = ("agc", "textrank", "lexrank")


def sentence_ranking(doc: Document, method: str, cfg: ExtractConfig | None = None) -> list[int]:
    cfg = cfg or ExtractConfig()
    if method == "agc":
        return rank_sentences(build_article_graph(doc, extract_clues(doc, cfg.clue)))
    if method == "textrank":
        g = textrank_graph(doc)
    elif method == "lexrank":
        g = lexrank_graph(doc, cfg.threshold)
    else:
        raise ValueError(f"unknown extraction method {method!r}; expected one of {METHODS}")
    scores = pagerank(g, cfg.damping, cfg.tol, cfg.max_iter)
    return sorted(g.nodes, key=lambda i: (-scores[i], i))


def extract_summary(doc: Document, method: str = "agc", k: int = 3, cfg: ExtractConfig | None = None) -> list[Sentence]:
    """Top-``k`` sentences by the chosen ranker, in document order."""
    if k < 1:
        raise ValueError("k must be >= 1")
    chosen = sorted(sentence_ranking(doc, method, cfg)[:k])
    return [doc.sentences[i] for i in chosen]
