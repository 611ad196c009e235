"""Run configuration: one JSON file, merged over defaults, with CLI overrides on top."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path
from typing import Any

from .clues import ClueConfig
from .graph import ExtractConfig
from .metrics import MeteorParams
from .model.config import ModelConfig
from .reports import DEFAULT_BUCKETS
from .training import BeamConfig, TrainConfig


@dataclass
class ClueSection:
    window: int = 4
    damping: float = 0.85
    tol: float = 1e-6
    max_iter: int = 100
    top_ratio: float = 1 / 3
    max_clues: int = 20


@dataclass
class ModelSection:
    d_model: int = 512
    d_ff: int = 2048
    enc_layers: int = 6
    dec_layers: int = 6
    enc_heads: int = 8
    gat_layers: int = 1
    gat_heads: int = 3
    dropout: float = 0.1
    max_positions: int = 512
    leaky_slope: float = 0.2


@dataclass
class TrainSection:
    batch_size_tokens: int = 1024
    lr: float = 1e-3
    warmup_steps: int = 4000
    beta1: float = 0.9
    beta2: float = 0.998
    eps: float = 1e-9
    max_steps: int = 1000
    checkpoint_every: int = 0
    src_vocab_size: int = 50000
    tgt_vocab_size: int = 50000
    min_freq: int = 1
    dtype: str = "float32"


@dataclass
class BeamSection:
    width: int = 4
    length_penalty_alpha: float = 0.6
    max_len: int = 100


@dataclass
class ExtractSection:
    method: str = "agc"
    k: int = 3
    threshold: float = 0.1


@dataclass
class MetricSection:
    alpha: float = 0.9
    gamma: float = 0.5
    theta: float = 3.0
    matchers: list = field(default_factory=lambda: ["exact", "stem"])
    char_level: str = "auto"  # "auto": characters for Chinese references, words otherwise


@dataclass
class PathSection:
    abbreviations: str | None = None
    stopwords: str | None = None
    synonyms: str | None = None
    embeddings: str | None = None
    lexicon: str | None = None


@dataclass
class LengthSection:
    buckets: list = field(default_factory=lambda: list(DEFAULT_BUCKETS))


@dataclass
class RunConfig:
    seed: int = 1
    model: ModelSection = field(default_factory=ModelSection)
    train: TrainSection = field(default_factory=TrainSection)
    beam: BeamSection = field(default_factory=BeamSection)
    clue: ClueSection = field(default_factory=ClueSection)
    extract: ExtractSection = field(default_factory=ExtractSection)
    metric: MetricSection = field(default_factory=MetricSection)
    paths: PathSection = field(default_factory=PathSection)
    length: LengthSection = field(default_factory=LengthSection)

    # -- construction ----------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        return _build(cls, data, "")

    @classmethod
    def load(cls, path: str | Path | None, overrides: dict[str, Any] | None = None) -> "RunConfig":
        """Defaults, then the JSON file at ``path`` (if any), then dotted-key ``overrides``."""
        data: dict = {}
        if path is not None:
            text = Path(path).read_text(encoding="utf-8")
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: invalid JSON config ({exc.msg})") from None
        cfg = cls.from_dict(data)
        for key, value in (overrides or {}).items():
            if value is not None:
                cfg = cfg.with_value(key, value)
        return cfg

    def with_value(self, dotted: str, value: Any) -> "RunConfig":
        parts = dotted.split(".")
        if len(parts) == 1:
            _check_key(type(self), parts[0], "")
            return replace(self, **{parts[0]: value})
        section, key = parts
        _check_key(type(self), section, "")
        sub = getattr(self, section)
        _check_key(type(sub), key, section + ".")
        return replace(self, **{section: replace(sub, **{key: value})})

    def to_dict(self) -> dict:
        return asdict(self)

    # -- views for the library layers -------------------------------------------

    def model_config(self) -> ModelConfig:
        return ModelConfig(**asdict(self.model))

    def train_config(self) -> TrainConfig:
        return TrainConfig(seed=self.seed, **asdict(self.train))

    def beam_config(self) -> BeamConfig:
        return BeamConfig(**asdict(self.beam))

    def clue_config(self, stopwords: frozenset[str] | None = None) -> ClueConfig:
        return ClueConfig(stopwords=stopwords, **asdict(self.clue))

    def extract_config(self, stopwords: frozenset[str] | None = None) -> ExtractConfig:
        return ExtractConfig(clue=self.clue_config(stopwords), threshold=self.extract.threshold,
                             damping=self.clue.damping, tol=self.clue.tol, max_iter=self.clue.max_iter)

    def meteor_params(self, synonyms: dict | None = None) -> MeteorParams:
        return MeteorParams(self.metric.alpha, self.metric.gamma, self.metric.theta,
                            tuple(self.metric.matchers), synonyms or {})


def _check_key(cls, key: str, prefix: str) -> None:
    if key not in {f.name for f in fields(cls)}:
        raise ValueError(f"unknown config key {prefix}{key!r}")


def _build(cls, data: dict, prefix: str):
    if not isinstance(data, dict):
        raise ValueError(f"config section {prefix or '<root>'} must be an object")
    kwargs = {}
    for key, value in data.items():
        _check_key(cls, key, prefix)
        default = next(f for f in fields(cls) if f.name == key)
        sub_default = default.default_factory() if callable(default.default_factory) else None
        if is_dataclass(sub_default):
            kwargs[key] = _build(type(sub_default), value, f"{prefix}{key}.")
        else:
            kwargs[key] = value
    return cls(**kwargs)
