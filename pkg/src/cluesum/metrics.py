"""ROUGE-N/L, METEOR and a relaxed word-mover score."""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import is_punct, tokenize

FALLBACK_DIM = 32


@dataclass(frozen=True)
class MatchStats:
    overlap: int
    hyp_units: int
    ref_units: int

    def __post_init__(self):
        if not 0 <= self.overlap <= min(self.hyp_units, self.ref_units):
            raise ValueError("overlap must lie in [0, min(hyp_units, ref_units)]")

    def prf(self) -> tuple[float, float, float]:
        if self.overlap == 0:
            return 0.0, 0.0, 0.0
        p = self.overlap / self.hyp_units
        r = self.overlap / self.ref_units
        return p, r, 2 * p * r / (p + r)


def units(text: str, char_level: bool = False, lang: str = "en") -> list[str]:
    """Evaluation units: lowercased word tokens, or characters when ``char_level``.

    Whitespace and punctuation never count as units.
    """
    if char_level:
        return [ch.lower() for ch in text if not ch.isspace() and not is_punct(ch)]
    return [t.normalized for t in tokenize(text, lang) if not is_punct(t.surface)]


def _ngrams(seq: list[str], n: int) -> Counter:
    return Counter(tuple(seq[i : i + n]) for i in range(len(seq) - n + 1))


def rouge_n_stats(hyp: str, ref: str, n: int = 1, char_level: bool = False) -> MatchStats:
    if n < 1:
        raise ValueError("n must be >= 1")
    h = _ngrams(units(hyp, char_level), n)
    r = _ngrams(units(ref, char_level), n)
    overlap = sum((h & r).values())
    return MatchStats(overlap, sum(h.values()), sum(r.values()))


def rouge_n(hyp: str, ref: str, n: int = 1, char_level: bool = False) -> tuple[float, float, float]:
    return rouge_n_stats(hyp, ref, n, char_level).prf()


def lcs_length(a: list, b: list) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(hyp: str, ref: str, char_level: bool = False) -> tuple[float, float, float]:
    h, r = units(hyp, char_level), units(ref, char_level)
    return MatchStats(lcs_length(h, r), len(h), len(r)).prf()


# -- METEOR -------------------------------------------------------------------

_VOWELS = set("aeiou")


def _has_vowel(s: str) -> bool:
    return any(c in _VOWELS for c in s)


def stem(word: str) -> str:
    """Small suffix-stripping stemmer (plural, -ed/-ing, a few derivational endings)."""
    w = word.lower()
    if len(w) <= 3 or not w.isalpha():
        return w
    if w.endswith("sses"):
        w = w[:-2]
    elif w.endswith("ies") and len(w) > 4:
        w = w[:-3] + "y"
    elif w.endswith("s") and not w.endswith("ss") and not w.endswith("us") and not w.endswith("is"):
        w = w[:-1]
    for suf in ("ingly", "edly", "ing", "ed"):
        if w.endswith(suf) and _has_vowel(w[: -len(suf)]) and len(w) - len(suf) >= 3:
            w = w[: -len(suf)]
            if len(w) >= 2 and w[-1] == w[-2] and w[-1] not in "lsz":
                w = w[:-1]
            break
    for suf, rep in (("ational", "ate"), ("ization", "ize"), ("fulness", "ful"), ("ousness", "ous"),
                     ("iveness", "ive"), ("ation", "ate"), ("ness", ""), ("ment", ""), ("ly", "")):
        if w.endswith(suf) and len(w) - len(suf) >= 3:
            w = w[: -len(suf)] + rep
            break
    return w


@dataclass
class MeteorParams:
    alpha: float = 0.9
    gamma: float = 0.5
    theta: float = 3.0
    matchers: tuple[str, ...] = ("exact", "stem")
    synonyms: dict[str, str] = field(default_factory=dict)  # word -> synset key
    search_budget: int = 50_000

    def __post_init__(self):
        if not 0 <= self.alpha <= 1 or not 0 <= self.gamma <= 1 or self.theta <= 0:
            raise ValueError("invalid METEOR parameters")


def load_synonyms(path: str | Path) -> dict[str, str]:
    """Synonym table: whitespace-separated words per line form one synonym set."""
    table = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        for w in line.split():
            table.setdefault(w.lower(), f"syn{lineno}")
    return table


def count_chunks(alignment: dict[int, int]) -> int:
    """Runs of hypothesis positions whose aligned reference positions are also consecutive."""
    chunks = 0
    prev = None
    for h in sorted(alignment):
        r = alignment[h]
        if prev is None or h != prev[0] + 1 or r != prev[1] + 1:
            chunks += 1
        prev = (h, r)
    return chunks


def _stage_align(hyp_keys, ref_keys, fixed: dict[int, int], budget: int) -> dict[int, int]:
    """Add a maximum-cardinality set of key matches to ``fixed`` with as few chunks as possible.

    Depth-first search over hypothesis positions with a chunk-count bound, seeded
    with a greedy solution; the search stops after ``budget`` nodes.
    """
    used_ref = set(fixed.values())
    free_h = [i for i, k in enumerate(hyp_keys) if i not in fixed and k is not None]
    ref_by_key: dict[str, list[int]] = {}
    for j, k in enumerate(ref_keys):
        if k is not None and j not in used_ref:
            ref_by_key.setdefault(k, []).append(j)
    hyp_count = Counter(hyp_keys[i] for i in free_h)
    target = sum(min(c, len(ref_by_key.get(k, []))) for k, c in hyp_count.items())
    if target == 0:
        return dict(fixed)

    cand = {i: ref_by_key.get(hyp_keys[i], []) for i in free_h}
    free_h = [i for i in free_h if cand[i]]

    def greedy():
        align = dict(fixed)
        taken = set(used_ref)
        remaining = Counter({k: min(c, len(ref_by_key.get(k, []))) for k, c in hyp_count.items()})
        for i in free_h:
            k = hyp_keys[i]
            if remaining[k] == 0:
                continue
            opts = [j for j in cand[i] if j not in taken]
            if not opts:
                continue
            prev = align.get(i - 1)
            j = prev + 1 if prev is not None and prev + 1 in opts else opts[0]
            align[i] = j
            taken.add(j)
            remaining[k] -= 1
        return align

    best = greedy()
    best_chunks = count_chunks(best)
    nodes = 0

    # remaining capacity per key tells whether a skip still allows hitting the target
    def search(pos: int, align: dict[int, int], taken: set[int], matched: int, left: Counter):
        nonlocal best, best_chunks, nodes
        nodes += 1
        if nodes > budget:
            return
        if matched + sum(min(left[k], c) for k, c in _rest_counts[pos].items()) < target:
            return
        if pos == len(free_h):
            total = count_chunks(align)
            if matched == target and total < best_chunks:
                best, best_chunks = dict(align), total
            return
        # chunks lying wholly before the next free position can only persist or grow
        boundary = free_h[pos]
        if count_chunks({h: r for h, r in align.items() if h < boundary}) >= best_chunks:
            return
        i = free_h[pos]
        k = hyp_keys[i]
        if left[k] > 0:
            prev = align.get(i - 1)
            opts = [j for j in cand[i] if j not in taken]
            if prev is not None and prev + 1 in opts:
                opts.remove(prev + 1)
                opts.insert(0, prev + 1)
            for j in opts:
                align[i] = j
                taken.add(j)
                left[k] -= 1
                search(pos + 1, align, taken, matched + 1, left)
                left[k] += 1
                taken.discard(j)
                del align[i]
        search(pos + 1, align, taken, matched, left)

    _rest_counts = []
    for p in range(len(free_h) + 1):
        _rest_counts.append(Counter(hyp_keys[i] for i in free_h[p:]))
    left = Counter({k: len(v) for k, v in ref_by_key.items()})
    search(0, dict(fixed), set(used_ref), 0, left)
    return best


def meteor_alignment(hyp_tokens: list[str], ref_tokens: list[str], params: MeteorParams | None = None) -> dict[int, int]:
    params = params or MeteorParams()
    align: dict[int, int] = {}
    for matcher in params.matchers:
        if matcher == "exact":
            key = lambda w: w
        elif matcher == "stem":
            key = stem
        elif matcher == "synonym":
            key = lambda w: params.synonyms.get(w)
        else:
            raise ValueError(f"unknown matcher {matcher!r}")
        hyp_keys = [None if i in align else key(w) for i, w in enumerate(hyp_tokens)]
        used = set(align.values())
        ref_keys = [None if j in used else key(w) for j, w in enumerate(ref_tokens)]
        align = _stage_align(hyp_keys, ref_keys, align, params.search_budget)
    return align


def meteor_components(hyp: str, ref: str, params: MeteorParams | None = None) -> dict:
    params = params or MeteorParams()
    h, r = units(hyp), units(ref)
    align = meteor_alignment(h, r, params)
    m = len(align)
    if m == 0:
        return {"matches": 0, "chunks": 0, "precision": 0.0, "recall": 0.0, "fmean": 0.0, "penalty": 0.0, "score": 0.0}
    p, rc = m / len(h), m / len(r)
    fmean = p * rc / (params.alpha * p + (1 - params.alpha) * rc)
    chunks = count_chunks(align)
    penalty = params.gamma * (chunks / m) ** params.theta
    return {"matches": m, "chunks": chunks, "precision": p, "recall": rc, "fmean": fmean,
            "penalty": penalty, "score": (1 - penalty) * fmean}


def meteor(hyp: str, ref: str, params: MeteorParams | None = None) -> float:
    return meteor_components(hyp, ref, params)["score"]


# -- relaxed word mover's distance --------------------------------------------

def load_embeddings(path: str | Path) -> dict[str, np.ndarray]:
    table = {}
    dim = None
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        parts = line.split()
        if not parts:
            continue
        vec = np.array([float(x) for x in parts[1:]])
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise ValueError(f"line {lineno}: expected {dim} values, got {len(vec)}")
        table[parts[0]] = vec
    return table


def fallback_vector(token: str, dim: int) -> np.ndarray:
    """Deterministic unit-scale vector for out-of-table tokens, seeded by a hash of the token."""
    seed = int.from_bytes(hashlib.sha256(token.encode("utf-8")).digest()[:8], "little")
    v = np.random.default_rng(seed).standard_normal(dim)
    return v / np.sqrt(dim)


def _embed(tokens: list[str], embeddings: dict[str, np.ndarray]) -> np.ndarray:
    dim = len(next(iter(embeddings.values()))) if embeddings else FALLBACK_DIM
    return np.stack([embeddings[t] if t in embeddings else fallback_vector(t, dim) for t in tokens])


def _directional(src: list[str], dst: list[str], embeddings) -> float:
    types = sorted(set(src))
    counts = Counter(src)
    weights = np.array([counts[t] / len(src) for t in types])
    dst_types = sorted(set(dst))
    a, b = _embed(types, embeddings), _embed(dst_types, embeddings)
    dist = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(-1))
    return float(weights @ dist.min(axis=1))


def relaxed_wmd_distance(hyp: str, ref: str, embeddings: dict[str, np.ndarray] | None = None) -> float:
    embeddings = embeddings or {}
    h, r = units(hyp), units(ref)
    if not h and not r:
        return 0.0
    if not h or not r:
        return math.inf
    return max(_directional(h, r, embeddings), _directional(r, h, embeddings))


def relaxed_wmd(hyp: str, ref: str, embeddings: dict[str, np.ndarray] | None = None) -> float:
    return 1.0 / (1.0 + relaxed_wmd_distance(hyp, ref, embeddings))


# -- reports -------------------------------------------------------------------

METRIC_NAMES = ("R1", "R2", "RL", "METEOR", "RWMD")


@dataclass
class EvalReport:
    per_pair: dict[str, dict[str, float]]
    corpus: dict[str, float]

    def to_json(self) -> dict:
        return {"per_pair": self.per_pair, "corpus": self.corpus}

    def table(self) -> str:
        """Aligned plain-text table, one row per pair plus a MEAN row."""
        cols = list(METRIC_NAMES)
        width = max([len("id"), len("MEAN")] + [len(k) for k in self.per_pair])
        lines = ["id".ljust(width) + "".join(c.rjust(9) for c in cols)]
        for pid, s in self.per_pair.items():
            lines.append(pid.ljust(width) + "".join(f"{s[c]:9.4f}" for c in cols))
        lines.append("MEAN".ljust(width) + "".join(f"{self.corpus[c]:9.4f}" for c in cols))
        return "\n".join(lines) + "\n"

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False, sort_keys=True) + "\n"


def score_pair(hyp: str, ref: str, char_level: bool = False, meteor_params: MeteorParams | None = None,
               embeddings: dict[str, np.ndarray] | None = None) -> dict[str, float]:
    return {
        "R1": rouge_n(hyp, ref, 1, char_level)[2],
        "R2": rouge_n(hyp, ref, 2, char_level)[2],
        "RL": rouge_l(hyp, ref, char_level)[2],
        "METEOR": meteor(hyp, ref, meteor_params),
        "RWMD": relaxed_wmd(hyp, ref, embeddings),
    }


def evaluate(pairs: list[tuple[str, str, str]], char_level: bool = False, meteor_params: MeteorParams | None = None,
             embeddings: dict[str, np.ndarray] | None = None) -> EvalReport:
    """Score ``(id, hypothesis, reference)`` triples and average over the corpus."""
    per_pair = {pid: score_pair(h, r, char_level, meteor_params, embeddings) for pid, h, r in pairs}
    corpus = {m: (sum(s[m] for s in per_pair.values()) / len(per_pair) if per_pair else 0.0) for m in METRIC_NAMES}
    return EvalReport(per_pair, corpus)
