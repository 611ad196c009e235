"""Synthetic corpora for smoke runs, extraction checks and the length harness."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import BilingualLexicon

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"
FILLER = ["the", "of", "and", "to", "in", "was", "it", "on"]


def pseudo_words(n: int, rng: random.Random, syllables: int = 2) -> list[str]:
    """``n`` distinct lowercase pseudo-words (consonant-vowel syllables)."""
    seen: dict[str, None] = {}
    while len(seen) < n:
        w = "".join(rng.choice(_CONSONANTS) + rng.choice(_VOWELS) for _ in range(syllables))
        seen.setdefault(w)
    return list(seen)


def cjk_chars(n: int, start: int = 0x4E00) -> list[str]:
    return [chr(start + k) for k in range(n)]


@dataclass
class CopyCorpus:
    records: list[dict]
    lexicon: BilingualLexicon
    lexicon_lines: list[str]
    words: list[str]


def copy_translate_corpus(n_pairs: int = 50, n_words: int = 40, min_len: int = 4, max_len: int = 6,
                          seed: int = 0) -> CopyCorpus:
    """English-like source sentences whose Chinese reference is a word-by-word translation.

    Each document has one content sentence followed by a stopword-only sentence
    (which the article graph prunes). Every source word maps to one character.
    """
    rng = random.Random(seed)
    words = pseudo_words(n_words, rng)
    chars = cjk_chars(n_words)
    mapping = dict(zip(words, chars))
    records = []
    seen = set()
    while len(records) < n_pairs:
        length = rng.randint(min_len, max_len)
        content = rng.sample(words, length)
        if tuple(content) in seen:
            continue
        seen.add(tuple(content))
        noise = " ".join(rng.sample(FILLER, 3))
        doc = " ".join(content).capitalize() + ". " + noise.capitalize() + "."
        records.append({"id": f"copy{len(records):03d}", "doc": doc, "summary": "".join(mapping[w] for w in content),
                        "src_lang": "en", "tgt_lang": "zh"})
    lexicon = BilingualLexicon({w: [(c, 1.0)] for w, c in mapping.items()})
    lines = [f"{w}\t{c}\t1.0" for w, c in mapping.items()]
    return CopyCorpus(records, lexicon, lines, words)


@dataclass
class PlantedDoc:
    text: str
    planted: list[int]


def planted_document(rng: random.Random, n_planted: int = 3, n_noise: int = 7, topic_size: int = 4,
                     pool: list[str] | None = None, topic: list[str] | None = None) -> PlantedDoc:
    """``n_planted`` sentences sharing topic words among noise sentences that share nothing.

    Filler words are drawn without replacement across the whole document, so the
    only vocabulary two sentences can have in common is the topic.
    """
    pool = pool or pseudo_words(300, rng, syllables=3)
    topic = topic or pseudo_words(topic_size, rng, syllables=2)
    n = n_planted + n_noise
    planted = sorted(rng.sample(range(n), n_planted))
    filler = iter(rng.sample(pool, len(pool)))
    sentences = []
    for i in range(n):
        if i in planted:
            words = rng.sample(topic, max(2, topic_size - 1)) + [next(filler) for _ in range(2)]
            rng.shuffle(words)
        else:
            words = [next(filler) for _ in range(rng.randint(5, 8))]
        sentences.append(" ".join(words).capitalize() + ".")
    return PlantedDoc(" ".join(sentences), planted)


def length_corpus(boundaries: list[int], per_bucket: int = 3, seed: int = 0, noise_per_100: float = 0.04,
                  summary_len: int = 20) -> tuple[list[dict], dict[str, str], dict[str, int]]:
    """Documents spread over length buckets with hypotheses degraded in proportion to length.

    Returns corpus records, hypotheses by id, and the exact source word count per id.
    """
    rng = random.Random(seed)
    vocab = pseudo_words(400, rng)
    chars = cjk_chars(400)
    records, hyps, counts = [], {}, {}
    edges = list(boundaries) + [boundaries[-1] + (boundaries[-1] - boundaries[-2] if len(boundaries) > 1 else 100)]
    for b in range(len(boundaries)):
        lo, hi = edges[b], edges[b + 1]
        for k in range(per_bucket):
            n_words = rng.randint(max(lo, 8), hi - 1)
            words = [rng.choice(vocab) for _ in range(n_words)]
            sents, i = [], 0
            while i < len(words):
                step = rng.randint(6, 14)
                sents.append(" ".join(words[i : i + step]) + ".")
                i += step
            pid = f"len{b:02d}_{k}"
            ref_chars = [chars[vocab.index(w)] for w in words[:summary_len]]
            noise = min(1.0, noise_per_100 * n_words / 100)
            hyp_chars = [rng.choice(chars) if rng.random() < noise else c for c in ref_chars]
            records.append({"id": pid, "doc": " ".join(sents), "summary": "".join(ref_chars),
                            "src_lang": "en", "tgt_lang": "zh"})
            hyps[pid] = "".join(hyp_chars)
            counts[pid] = n_words
    return records, hyps, counts
