from __future__ import annotations

from dataclasses import asdict, dataclass, fields


@dataclass
class ModelConfig:
    """Network hyperparameters.

    ``src_vocab``/``tgt_vocab`` are vocabulary sizes; each embedding table gets one
    extra row for the clue separator.
    """

    d_model: int = 512
    d_ff: int = 2048
    enc_layers: int = 6
    dec_layers: int = 6
    enc_heads: int = 8
    gat_layers: int = 1
    gat_heads: int = 3
    dropout: float = 0.1
    max_positions: int = 512
    src_vocab: int = 0
    tgt_vocab: int = 0
    leaky_slope: float = 0.2

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("d_model", "d_ff", "enc_layers", "dec_layers", "enc_heads", "gat_layers", "gat_heads", "max_positions"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.d_model % self.enc_heads:
            raise ValueError("d_model must be divisible by enc_heads")
        # only concatenating (non-final) GAT layers split d_model across heads
        if self.gat_layers > 1 and self.d_model % self.gat_heads:
            raise ValueError("d_model must be divisible by gat_heads when gat_layers > 1")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must lie in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**data)
