"""Text ingestion: sentence splitting, tokenization, vocabularies, lexicons."""

from __future__ import annotations

import json
import logging
import unicodedata
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

from .errors import EmptyInput, ParseError, SchemaError

logger = logging.getLogger(__name__)

PAD, UNK, BOS, EOS = "<pad>", "<unk>", "<bos>", "<eos>"
SPECIALS = (PAD, UNK, BOS, EOS)

EN_DELIMITERS = frozenset(".!?")
ZH_DELIMITERS = frozenset("。！？")
CORPUS_KEYS = ("id", "doc", "summary", "src_lang", "tgt_lang")


@dataclass(frozen=True)
class Token:
    surface: str
    normalized: str = ""

    def __post_init__(self):
        if not self.surface:
            raise ValueError("token surface must be non-empty")
        object.__setattr__(self, "normalized", self.surface.lower())


@dataclass(frozen=True)
class Sentence:
    index: int
    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("sentence must contain at least one token")
        object.__setattr__(self, "tokens", tuple(self.tokens))

    @property
    def normalized(self) -> list[str]:
        return [t.normalized for t in self.tokens]

    def __len__(self):
        return len(self.tokens)

    def text(self, lang: str = "en") -> str:
        return join_tokens([t.surface for t in self.tokens], lang)


@dataclass(frozen=True)
class Document:
    sentences: tuple[Sentence, ...]
    language: str = "en"

    def __post_init__(self):
        if not self.sentences:
            raise EmptyInput("document must contain at least one sentence")
        object.__setattr__(self, "sentences", tuple(self.sentences))

    def __len__(self):
        return len(self.sentences)

    @property
    def num_words(self) -> int:
        return sum(1 for s in self.sentences for t in s.tokens if not is_punct(t.surface))

    def text(self) -> str:
        sep = "" if self.language == "zh" else " "
        return sep.join(s.text(self.language) for s in self.sentences)


@dataclass(frozen=True)
class CLSPair:
    doc: Document
    reference: str
    id: str
    tgt_lang: str = "zh"

    def __post_init__(self):
        if self.doc.language == self.tgt_lang:
            raise SchemaError(f"pair {self.id}: source and target language are both {self.tgt_lang!r}")

    @property
    def src_lang(self) -> str:
        return self.doc.language


def is_punct(s: str) -> bool:
    return bool(s) and all(unicodedata.category(ch)[0] in "PS" for ch in s)


def join_tokens(tokens: Iterable[str], lang: str) -> str:
    if lang == "zh":
        # ASCII words still need a space between them
        out = ""
        for tok in tokens:
            if out and out[-1].isascii() and out[-1].isalnum() and tok[:1].isascii() and tok[:1].isalnum():
                out += " "
            out += tok
        return out
    return " ".join(tokens)


def _read_lines(path: Path) -> list[str]:
    return [ln.strip() for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]


def _packaged(name: str) -> Path:
    return Path(str(resources.files("cluesum") / "data" / name))


def load_abbreviations(path: str | Path | None = None) -> frozenset[str]:
    """Abbreviations that do not end a sentence. ``None`` loads the shipped English list."""
    path = _packaged("abbreviations_en.txt") if path is None else Path(path)
    return frozenset(_read_lines(path))


def load_stopwords(lang: str, path: str | Path | None = None) -> frozenset[str]:
    if path is None:
        candidate = _packaged(f"stopwords_{lang}.txt")
        if not candidate.exists():
            return frozenset()
        path = candidate
    return frozenset(w.lower() for w in _read_lines(Path(path)))


DEFAULT_ABBREVIATIONS = load_abbreviations()


def _split_word(chunk: str, abbreviations: frozenset[str]) -> list[str]:
    if chunk in abbreviations:
        return [chunk]
    start, end = 0, len(chunk)
    while start < end and is_punct(chunk[start]):
        start += 1
    if start == end:
        return list(chunk)
    while end > start and is_punct(chunk[end - 1]):
        end -= 1
    return list(chunk[:start]) + [chunk[start:end]] + list(chunk[end:])


def _tokenize_zh(text: str) -> list[str]:
    out: list[str] = []
    run = ""
    for ch in text:
        if ch.isascii() and ch.isalnum():
            run += ch
            continue
        if run:
            out.append(run)
            run = ""
        if not ch.isspace():
            out.append(ch)
    if run:
        out.append(run)
    return out


def tokenize(text: str, lang: str = "en", abbreviations: frozenset[str] | None = None) -> list[Token]:
    if abbreviations is None:
        abbreviations = DEFAULT_ABBREVIATIONS
    if lang == "zh":
        return [Token(s) for s in _tokenize_zh(text)]
    out = []
    for chunk in text.split():
        out.extend(Token(s) for s in _split_word(chunk, abbreviations))
    return out


def split_sentences(text: str, lang: str = "en", abbreviations: frozenset[str] | None = None) -> list[Sentence]:
    """Split on sentence delimiters, keeping each delimiter with its sentence.

    English boundaries fall after a whitespace-separated chunk ending in ``.``, ``!``
    or ``?`` (closing quotes/brackets allowed after it), unless the chunk is a known
    abbreviation. Chinese boundaries fall right after ``。！？`` and any closing marks.
    """
    if not text or not text.strip():
        raise EmptyInput("cannot split empty text into sentences")
    if abbreviations is None:
        abbreviations = DEFAULT_ABBREVIATIONS

    pieces: list[str] = []
    if lang == "zh":
        buf = ""
        i = 0
        while i < len(text):
            buf += text[i]
            if text[i] in ZH_DELIMITERS:
                while i + 1 < len(text) and (text[i + 1] in ZH_DELIMITERS or text[i + 1] in "”’」』）)\"'"):
                    i += 1
                    buf += text[i]
                pieces.append(buf)
                buf = ""
            i += 1
        pieces.append(buf)
    else:
        current: list[str] = []
        for chunk in text.split():
            current.append(chunk)
            core = chunk.rstrip("\"')]}”’")
            if core and core[-1] in EN_DELIMITERS and chunk not in abbreviations and core not in abbreviations:
                pieces.append(" ".join(current))
                current = []
        if current:
            pieces.append(" ".join(current))

    sentences = []
    for piece in pieces:
        tokens = tokenize(piece, lang, abbreviations)
        if tokens:
            sentences.append(Sentence(len(sentences), tuple(tokens)))
    return sentences


def make_document(text: str, lang: str = "en", abbreviations: frozenset[str] | None = None) -> Document:
    return Document(tuple(split_sentences(text, lang, abbreviations)), lang)


def load_cls_corpus(path: str | Path, abbreviations: frozenset[str] | None = None) -> list[CLSPair]:
    """Read a JSONL corpus; blank lines are skipped, line numbers are 1-based."""
    path = Path(path)
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", line=lineno) from None
            if not isinstance(obj, dict):
                raise ParseError("expected a JSON object", line=lineno)
            missing = [k for k in CORPUS_KEYS if k not in obj]
            if missing:
                raise SchemaError(f"missing key(s) {', '.join(missing)}", line=lineno)
            if not isinstance(obj["doc"], str) or not isinstance(obj["summary"], str):
                raise SchemaError("'doc' and 'summary' must be strings", line=lineno)
            try:
                doc = make_document(obj["doc"], obj["src_lang"], abbreviations)
                pairs.append(CLSPair(doc, obj["summary"], str(obj["id"]), obj["tgt_lang"]))
            except EmptyInput as exc:
                raise SchemaError(str(exc), line=lineno) from None
            except SchemaError as exc:
                raise SchemaError(str(exc), line=lineno) from None
    return pairs


def write_cls_corpus(path: str | Path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


@dataclass
class Vocabulary:
    side: str
    token_of: list[str]
    id_of: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if tuple(self.token_of[:4]) != SPECIALS:
            raise ValueError("vocabulary must start with the four special tokens")
        self.id_of = {t: i for i, t in enumerate(self.token_of)}
        if len(self.id_of) != len(self.token_of):
            raise ValueError("duplicate tokens in vocabulary")

    pad_id, unk_id, bos_id, eos_id = 0, 1, 2, 3

    def __len__(self):
        return len(self.token_of)

    @property
    def sep_id(self) -> int:
        """Clue separator; lives one past the last regular id (see ``ModelConfig``)."""
        return len(self.token_of)

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self.id_of.get(t, self.unk_id) for t in tokens]

    def decode(self, ids: Iterable[int], strip_special: bool = True) -> list[str]:
        out = []
        for i in ids:
            if i >= len(self.token_of):
                continue
            if strip_special and i < 4:
                continue
            out.append(self.token_of[i])
        return out

    def save(self, path: str | Path) -> None:
        Path(path).write_text("".join(t + "\n" for t in self.token_of), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path, side: str) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        return cls(side, lines)


def side_tokens(pair: CLSPair, side: str) -> list[str]:
    if side == "source":
        return [t.normalized for s in pair.doc.sentences for t in s.tokens]
    if side == "target":
        return [t.normalized for t in tokenize(pair.reference, pair.tgt_lang)]
    raise ValueError(f"side must be 'source' or 'target', got {side!r}")


def build_vocab(corpus: list[CLSPair], side: str, max_size: int = 50000, min_freq: int = 1) -> Vocabulary:
    if max_size < 4:
        raise ValueError("max_size must be at least 4")
    if not corpus:
        raise EmptyInput("cannot build a vocabulary from an empty corpus")
    counts: Counter[str] = Counter()
    for pair in corpus:
        counts.update(side_tokens(pair, side))
    for s in SPECIALS:
        counts.pop(s, None)
    ranked = sorted((t for t, c in counts.items() if c >= min_freq), key=lambda t: (-counts[t], t))
    return Vocabulary(side, list(SPECIALS) + ranked[: max_size - 4])


@dataclass
class BilingualLexicon:
    entries: dict[str, list[tuple[str, float]]]

    def __post_init__(self):
        for src, cands in self.entries.items():
            if any(p < 0 for _, p in cands):
                raise ValueError(f"negative translation probability for {src!r}")
            total = sum(p for _, p in cands)
            if abs(total - 1.0) > 1e-6:
                raise ValueError(f"translation probabilities for {src!r} sum to {total}")

    def __contains__(self, src: str) -> bool:
        return src in self.entries

    def get(self, src: str) -> list[tuple[str, float]]:
        return self.entries.get(src, [])

    def best(self, src: str) -> str | None:
        cands = self.entries.get(src)
        if not cands:
            return None
        return min(cands, key=lambda c: (-c[1], c[0]))[0]

    def to_dict(self) -> dict:
        return {k: [[t, p] for t, p in v] for k, v in self.entries.items()}

    @classmethod
    def from_dict(cls, data: dict) -> "BilingualLexicon":
        return cls({k: [(t, float(p)) for t, p in v] for k, v in data.items()})


def load_lexicon(path: str | Path) -> BilingualLexicon:
    """Read ``src<TAB>tgt<TAB>prob`` lines and renormalize per source word."""
    grouped: dict[str, dict[str, float]] = defaultdict(dict)
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError("expected src<TAB>tgt<TAB>prob", line=lineno)
            src, tgt, prob_s = parts
            try:
                prob = float(prob_s)
            except ValueError:
                raise ParseError(f"bad probability {prob_s!r}", line=lineno) from None
            if not 0.0 <= prob <= 1.0:
                raise ValueError(f"line {lineno}: probability {prob} outside [0, 1]")
            src = src.lower()
            if tgt in grouped[src]:
                logger.warning("duplicate lexicon entry %s -> %s on line %d; keeping the max", src, tgt, lineno)
                prob = max(prob, grouped[src][tgt])
            grouped[src][tgt] = prob
    entries = {}
    for src, cands in grouped.items():
        total = sum(cands.values())
        if total <= 0:
            logger.warning("lexicon entry %s has zero total probability; dropped", src)
            continue
        entries[src] = [(t, p / total) for t, p in cands.items()]
    return BilingualLexicon(entries)
