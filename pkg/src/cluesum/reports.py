"""Length-bucket robustness report and extractive-method comparison."""

from __future__ import annotations

import bisect
from dataclasses import dataclass

from .corpus import BilingualLexicon, CLSPair, Sentence, is_punct, join_tokens
from .graph import ExtractConfig, extract_summary
from .metrics import EvalReport, MeteorParams, evaluate, rouge_l

DEFAULT_BUCKETS = [0, 100, 200, 300, 400, 500, 600, 700, 800, 900]


def bucket_labels(boundaries: list[int]) -> list[str]:
    labels = []
    for k, lo in enumerate(boundaries):
        hi = boundaries[k + 1] if k + 1 < len(boundaries) else None
        labels.append(f"[{lo},{hi})" if hi is not None else f"[{lo},inf)")
    return labels


def assign_bucket(n_words: int, boundaries: list[int]) -> int | None:
    """Index of the ``[lo, hi)`` bucket holding ``n_words``; the last bucket is open-ended."""
    k = bisect.bisect_right(boundaries, n_words) - 1
    return k if k >= 0 else None


@dataclass
class BucketRow:
    label: str
    count: int
    rouge_l: float | None
    delta: float | None


@dataclass
class LengthReport:
    rows: list[BucketRow]
    assignment: dict[str, int | None]

    def to_tsv(self) -> str:
        out = ["bucket\tn\trouge_l_f1\tdelta_vs_first"]
        for r in self.rows:
            rl = "n/a" if r.rouge_l is None else f"{r.rouge_l:.6f}"
            d = "n/a" if r.delta is None else f"{r.delta:+.6f}"
            out.append(f"{r.label}\t{r.count}\t{rl}\t{d}")
        return "\n".join(out) + "\n"

    def to_json(self) -> dict:
        return {"buckets": [r.__dict__ for r in self.rows], "assignment": self.assignment}


def length_report(pairs: list[CLSPair], hypotheses: dict[str, str], boundaries: list[int] | None = None,
                  char_level: bool | None = None) -> LengthReport:
    """Mean ROUGE-L F1 per source-length bucket and its difference from the first bucket.

    Empty buckets report ``None``; so do deltas when the first bucket is empty.
    """
    boundaries = list(DEFAULT_BUCKETS if boundaries is None else boundaries)
    if not boundaries or any(b >= c for b, c in zip(boundaries, boundaries[1:])):
        raise ValueError("bucket boundaries must be non-empty and strictly increasing")
    labels = bucket_labels(boundaries)
    scores: list[list[float]] = [[] for _ in boundaries]
    assignment = {}
    for pair in pairs:
        k = assign_bucket(pair.doc.num_words, boundaries)
        assignment[pair.id] = k
        if k is None:
            continue
        cl = (pair.tgt_lang == "zh") if char_level is None else char_level
        scores[k].append(rouge_l(hypotheses.get(pair.id, ""), pair.reference, cl)[2])
    means = [sum(s) / len(s) if s else None for s in scores]
    base = means[0]
    rows = [BucketRow(lab, len(s), m, None if m is None or base is None else m - base)
            for lab, s, m in zip(labels, scores, means)]
    return LengthReport(rows, assignment)


def translate_naive(sentences: list[Sentence], lexicon: BilingualLexicon, tgt_lang: str) -> str:
    """Word-by-word translation with each word's most probable lexicon entry; unknown words are dropped."""
    out = []
    for s in sentences:
        for t in s.tokens:
            if is_punct(t.surface):
                continue
            best = lexicon.best(t.normalized)
            if best is not None:
                out.append(best)
    return join_tokens(out, tgt_lang)


def extractive_summaries(pairs: list[CLSPair], method: str, k: int = 3, cfg: ExtractConfig | None = None,
                         lexicon: BilingualLexicon | None = None) -> dict[str, str]:
    out = {}
    for pair in pairs:
        chosen = extract_summary(pair.doc, method, k, cfg)
        if lexicon is not None:
            out[pair.id] = translate_naive(chosen, lexicon, pair.tgt_lang)
        else:
            sep = "" if pair.src_lang == "zh" else " "
            out[pair.id] = sep.join(s.text(pair.src_lang) for s in chosen)
    return out


def compare_extractive(pairs: list[CLSPair], methods=("textrank", "lexrank", "agc"), k: int = 3,
                       cfg: ExtractConfig | None = None, lexicon: BilingualLexicon | None = None,
                       meteor_params: MeteorParams | None = None, embeddings=None) -> dict[str, EvalReport]:
    reports = {}
    char_level = bool(pairs) and lexicon is not None and pairs[0].tgt_lang == "zh"
    for method in methods:
        summaries = extractive_summaries(pairs, method, k, cfg, lexicon)
        triples = [(p.id, summaries[p.id], p.reference) for p in pairs]
        reports[method] = evaluate(triples, char_level, meteor_params, embeddings)
    return reports


def comparison_tsv(reports: dict[str, EvalReport]) -> str:
    metrics = ("R1", "R2", "RL", "METEOR", "RWMD")
    out = ["method\t" + "\t".join(metrics)]
    for method, rep in reports.items():
        out.append(method + "\t" + "\t".join(f"{rep.corpus[m]:.6f}" for m in metrics))
    return "\n".join(out) + "\n"
