"""Initialization, optimization, the training loop and beam-search decoding."""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path

import torch

from .clues import ClueConfig
from .corpus import BilingualLexicon, CLSPair, Document, Vocabulary, build_vocab, join_tokens
from .errors import EmptyInput, NumericalError
from .model import ClueGraphSum, ModelConfig, PairFeatures, collate, prepare_document, prepare_pair, save_checkpoint

logger = logging.getLogger(__name__)

DTYPES = {"float32": torch.float32, "float64": torch.float64}


@dataclass
class TrainConfig:
    batch_size_tokens: int = 1024
    lr: float = 1e-3  # peak learning rate, reached at the end of warmup
    warmup_steps: int = 4000
    beta1: float = 0.9
    beta2: float = 0.998
    eps: float = 1e-9
    max_steps: int = 1000
    seed: int = 1
    checkpoint_every: int = 0  # 0: only the final checkpoint
    src_vocab_size: int = 50000
    tgt_vocab_size: int = 50000
    min_freq: int = 1
    dtype: str = "float32"  # "float64" is the high-precision mode

    def __post_init__(self):
        for name in ("batch_size_tokens", "lr", "warmup_steps", "eps", "max_steps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")
        if self.dtype not in DTYPES:
            raise ValueError(f"dtype must be one of {sorted(DTYPES)}")


@dataclass
class BeamConfig:
    width: int = 4
    length_penalty_alpha: float = 0.6
    max_len: int = 100

    def __post_init__(self):
        if self.width < 1 or self.max_len < 1:
            raise ValueError("beam width and max_len must be >= 1")


# -- initialization ---------------------------------------------------------------

def _fans(name: str, shape: torch.Size) -> tuple[int, int]:
    if name.endswith(".att"):  # one attention vector per head
        return shape[1], 1
    if len(shape) == 3:  # per-head projection [heads, out, in]
        return shape[2], shape[1]
    return shape[1], shape[0]


def xavier_bound(fan_in: int, fan_out: int) -> float:
    return math.sqrt(6.0 / (fan_in + fan_out))


def init_params(cfg: ModelConfig, seed: int = 1, dtype: str | torch.dtype = "float32") -> ClueGraphSum:
    """Build the network with Xavier-uniform weights, zero biases and unit layer-norm gains."""
    dtype = DTYPES[dtype] if isinstance(dtype, str) else dtype
    model = ClueGraphSum(cfg).to(dtype)
    gen = torch.Generator().manual_seed(seed)
    norms = {n for n, m in model.named_modules() if isinstance(m, torch.nn.LayerNorm)}
    with torch.no_grad():
        for name, p in sorted(model.named_parameters()):
            owner, _, leaf = name.rpartition(".")
            if owner in norms:
                p.fill_(1.0 if leaf == "weight" else 0.0)
            elif leaf == "bias":
                p.zero_()
            else:
                bound = xavier_bound(*_fans(name, p.shape))
                sample = torch.rand(p.shape, generator=gen, dtype=torch.float64) * (2 * bound) - bound
                p.copy_(sample.to(dtype))
    return model


# -- optimizer --------------------------------------------------------------------

def lr_at(step: int, base_lr: float, warmup: int) -> float:
    """Linear warmup to ``base_lr`` then inverse-square-root decay."""
    step = max(step, 1)
    return base_lr * min(step / warmup, math.sqrt(warmup / step))


@dataclass
class AdamState:
    step: int = 0
    m: dict[str, torch.Tensor] = field(default_factory=dict)
    v: dict[str, torch.Tensor] = field(default_factory=dict)


def adam_step(params: dict[str, torch.Tensor], grads: dict[str, torch.Tensor], state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.998, eps: float = 1e-9) -> AdamState:
    """One bias-corrected Adam update, in place on ``params``.

    All gradients are checked before anything changes; a non-finite one aborts the
    step with the offending tensor's name.
    """
    for name in params:
        g = grads.get(name)
        if g is not None and not bool(torch.isfinite(g).all()):
            raise NumericalError(f"non-finite gradient in {name}", tensor_name=name)
    state.step += 1
    t = state.step
    with torch.no_grad():
        for name, p in params.items():
            g = grads.get(name)
            if g is None:
                g = torch.zeros_like(p)
            m = state.m.setdefault(name, torch.zeros_like(p))
            v = state.v.setdefault(name, torch.zeros_like(p))
            m.mul_(beta1).add_(g, alpha=1 - beta1)
            v.mul_(beta2).addcmul_(g, g, value=1 - beta2)
            m_hat = m / (1 - beta1**t)
            v_hat = v / (1 - beta2**t)
            p.sub_(lr * m_hat / (v_hat.sqrt() + eps))
    return state


# -- training loop ----------------------------------------------------------------

@dataclass
class TrainResult:
    model: ClueGraphSum
    model_config: ModelConfig
    src_vocab: Vocabulary
    tgt_vocab: Vocabulary
    lexicon: BilingualLexicon
    clue_cfg: ClueConfig
    log: list[dict]
    features: dict[str, PairFeatures]

    def meta(self) -> dict:
        return checkpoint_meta(self.src_vocab, self.tgt_vocab, self.lexicon, self.clue_cfg)


def checkpoint_meta(src_vocab, tgt_vocab, lexicon, clue_cfg: ClueConfig) -> dict:
    clue = asdict(clue_cfg)
    clue["stopwords"] = sorted(clue_cfg.stopwords) if clue_cfg.stopwords is not None else None
    return {"src_vocab": src_vocab.token_of, "tgt_vocab": tgt_vocab.token_of,
            "lexicon": lexicon.to_dict(), "clue": clue}


def unpack_meta(meta: dict) -> tuple[Vocabulary, Vocabulary, BilingualLexicon, ClueConfig]:
    clue = dict(meta["clue"])
    if clue.get("stopwords") is not None:
        clue["stopwords"] = frozenset(clue["stopwords"])
    return (Vocabulary("source", meta["src_vocab"]), Vocabulary("target", meta["tgt_vocab"]),
            BilingualLexicon.from_dict(meta["lexicon"]), ClueConfig(**clue))


def make_batches(features: list[PairFeatures], budget: int, rng: random.Random) -> list[list[PairFeatures]]:
    """Shuffle, then fill batches up to ``budget`` tokens; members are sorted by id."""
    order = sorted(features, key=lambda f: f.id)
    rng.shuffle(order)
    batches, current, used = [], [], 0
    for f in order:
        if current and used + f.num_tokens > budget:
            batches.append(current)
            current, used = [], 0
        current.append(f)
        used += f.num_tokens
    if current:
        batches.append(current)
    return [sorted(b, key=lambda f: f.id) for b in batches]


def train(
    corpus: list[CLSPair],
    lexicon: BilingualLexicon,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    clue_cfg: ClueConfig | None = None,
    out_dir: str | Path | None = None,
    log_path: str | Path | None = None,
    on_step=None,
) -> TrainResult:
    if not corpus:
        raise EmptyInput("cannot train on an empty corpus")
    clue_cfg = clue_cfg or ClueConfig()
    torch.manual_seed(train_cfg.seed)
    rng = random.Random(train_cfg.seed)

    src_vocab = build_vocab(corpus, "source", train_cfg.src_vocab_size, train_cfg.min_freq)
    tgt_vocab = build_vocab(corpus, "target", train_cfg.tgt_vocab_size, train_cfg.min_freq)
    model_cfg = ModelConfig.from_dict({**model_cfg.to_dict(), "src_vocab": len(src_vocab), "tgt_vocab": len(tgt_vocab)})
    model = init_params(model_cfg, train_cfg.seed, train_cfg.dtype)
    dtype = DTYPES[train_cfg.dtype]

    features = {p.id: prepare_pair(p, src_vocab, tgt_vocab, lexicon, clue_cfg, model_cfg.max_positions) for p in corpus}
    meta = checkpoint_meta(src_vocab, tgt_vocab, lexicon, clue_cfg)
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    log_fh = open(log_path, "w", encoding="utf-8") if log_path is not None else None

    params = dict(model.named_parameters())
    state = AdamState()
    log: list[dict] = []
    batches: list[list[PairFeatures]] = []
    try:
        for step in range(1, train_cfg.max_steps + 1):
            if not batches:
                batches = make_batches(list(features.values()), train_cfg.batch_size_tokens, rng)
            members = batches.pop(0)
            batch = collate(members, dtype)
            model.train()
            model.zero_grad(set_to_none=True)
            loss = model(batch)
            if not torch.isfinite(loss):
                raise NumericalError(f"non-finite loss at step {step}")
            loss.backward()
            lr = lr_at(step, train_cfg.lr, train_cfg.warmup_steps)
            adam_step(params, {n: p.grad for n, p in params.items()}, state, lr,
                      train_cfg.beta1, train_cfg.beta2, train_cfg.eps)
            record = {"step": step, "loss": loss.item(), "lr": lr, "tokens": int(batch.tgt_mask.sum())}
            log.append(record)
            if log_fh:
                log_fh.write(json.dumps(record) + "\n")
            if on_step is not None:
                on_step(record, model)
            if out_dir is not None and train_cfg.checkpoint_every and step % train_cfg.checkpoint_every == 0:
                save_checkpoint(out_dir / f"checkpoint_step{step}.bin", model, model_cfg, meta)
    finally:
        if log_fh:
            log_fh.close()
    model.eval()
    if out_dir is not None:
        save_checkpoint(out_dir / "checkpoint.bin", model, model_cfg, meta)
    return TrainResult(model, model_cfg, src_vocab, tgt_vocab, lexicon, clue_cfg, log, features)


@torch.no_grad()
def teacher_forced_accuracy(model: ClueGraphSum, features: list[PairFeatures]) -> float:
    model.eval()
    batch = collate(features, model.dtype)
    pred = model.teacher_forced_predictions(batch)
    correct = (pred == batch.tgt_out) & batch.tgt_mask
    return float(correct.sum()) / float(batch.tgt_mask.sum())


# -- decoding -----------------------------------------------------------------------

def length_penalty(length: int, alpha: float = 0.6) -> float:
    return ((5 + length) / 6) ** alpha


@dataclass
class Hypothesis:
    tokens: list[int]  # generated ids after BOS, EOS included when finished
    score: float  # summed log-probability
    finished: bool

    def normalized(self, alpha: float) -> float:
        return self.score / length_penalty(len(self.tokens), alpha)


@torch.no_grad()
def beam_search(model: ClueGraphSum, features: PairFeatures, cfg: BeamConfig | None = None,
                return_all: bool = False):
    """Beam search over the mixed output distribution.

    Candidates are ranked by summed log-probability; finished hypotheses are compared
    after dividing by ``((5 + |Y|) / 6) ** alpha``. Returns the generated ids without
    BOS/EOS (and the finished pool when ``return_all``).
    """
    cfg = cfg or BeamConfig()
    model.eval()
    bos, eos = 2, 3
    enc = model.encode(collate([features], model.dtype))
    live = [Hypothesis([], 0.0, False)]
    finished: list[Hypothesis] = []
    for _ in range(cfg.max_len):
        prefix = torch.tensor([[bos] + h.tokens for h in live], dtype=torch.long)
        probs = model.decode_step(prefix, enc.repeat(torch.full((1,), len(live))))[3]
        logp = torch.log(probs.double())
        totals = torch.tensor([h.score for h in live], dtype=torch.float64)[:, None] + logp
        flat = totals.flatten()
        order = torch.sort(flat, descending=True, stable=True).indices[: cfg.width]
        vocab = logp.shape[1]
        survivors = []
        for idx in order.tolist():
            score = float(flat[idx])
            if score == float("-inf"):
                continue
            parent, tok = divmod(idx, vocab)
            hyp = Hypothesis(live[parent].tokens + [tok], score, tok == eos)
            (finished if hyp.finished else survivors).append(hyp)
        live = survivors
        if len(finished) >= cfg.width or not live:
            break
    pool = finished or live
    best = max(pool, key=lambda h: h.normalized(cfg.length_penalty_alpha))
    ids = [t for t in best.tokens if t != eos]
    return (ids, finished) if return_all else ids


@torch.no_grad()
def greedy_decode(model: ClueGraphSum, features: PairFeatures, max_len: int = 100) -> list[int]:
    model.eval()
    bos, eos = 2, 3
    enc = model.encode(collate([features], model.dtype))
    tokens: list[int] = []
    for _ in range(max_len):
        prefix = torch.tensor([[bos] + tokens], dtype=torch.long)
        probs = model.decode_step(prefix, enc)[3]
        tok = int(torch.argmax(probs[0]))
        if tok == eos:
            break
        tokens.append(tok)
    return tokens


def generate(model: ClueGraphSum, doc: Document, pair_id: str, src_vocab: Vocabulary, tgt_vocab: Vocabulary,
             lexicon: BilingualLexicon, clue_cfg: ClueConfig, beam: BeamConfig | None = None,
             tgt_lang: str = "zh") -> str:
    feats = prepare_document(doc, pair_id, src_vocab, tgt_vocab, lexicon, clue_cfg, model.cfg.max_positions)
    ids = beam_search(model, feats, beam)
    return join_tokens(tgt_vocab.decode(ids), tgt_lang)
