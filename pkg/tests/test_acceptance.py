"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""

import random
import time
from pathlib import Path

import numpy as np
import pytest
import torch

from cluesum.clues import ClueConfig, clue_set_from_sequences
from cluesum.corpus import BilingualLexicon, Vocabulary, make_document
from cluesum.graph import build_article_graph, extract_summary
from cluesum.model import ModelConfig, collate, mix_distribution, translation_gate
from cluesum.reports import DEFAULT_BUCKETS, length_report
from cluesum.synthetic import length_corpus, planted_document
from cluesum.training import (
    BeamConfig,
    TrainConfig,
    beam_search,
    greedy_decode,
    length_penalty,
    teacher_forced_accuracy,
    train,
)
from conftest import doc_from_tokens
from golden import CASES
from test_graph import brute_force_graph
from test_reports import char_lcs_f1, counting_oracle, pairs_from
from toy import copy_pairs, gradient_check, toy_model

README = Path(__file__).resolve().parent.parent / "README.md"


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, detail

    return emit


def test_headline_numbers_documented_as_substituted(report):
    text = README.read_text(encoding="utf-8") if README.exists() else ""
    ok = "not reproducible at desk scale" in text and "property suite" in text
    report("headline-numbers", ok, "README states the published table numbers are replaced by the property suite")


def test_agc_oracle_equivalence(report):
    rng = random.Random(20240601)
    vocab = [f"t{i}" for i in range(10)]
    start = time.perf_counter()
    mismatches = 0
    for _ in range(200):
        sentences = [[rng.choice(vocab) for _ in range(rng.randint(1, 8))] for _ in range(rng.randint(1, 10))]
        clues = [tuple(rng.choice(vocab) for _ in range(rng.randint(1, 2))) for _ in range(rng.randint(0, 8))]
        g = build_article_graph(doc_from_tokens(sentences), clue_set_from_sequences(clues))
        self_w, pair_w, total, kept = brute_force_graph(sentences, clues)
        if kept:
            same = (not g.fallback and g.indices == kept and g.edges == pair_w
                    and all(v.self_weight == self_w[v.sentence_index] and v.weight == total[v.sentence_index]
                            for v in g.vertices))
        else:
            same = g.fallback and g.indices == list(range(len(sentences))) and not g.edges
        mismatches += not same
    elapsed = time.perf_counter() - start
    report("agc-oracle", mismatches == 0 and elapsed < 10,
           f"{200 - mismatches}/200 documents match the brute-force oracle in {elapsed:.2f}s (limit 10s)")


def test_planted_sentence_retrieval(report):
    rng = random.Random(7)
    hits = 0
    for _ in range(100):
        d = planted_document(rng)
        chosen = {s.index for s in extract_summary(make_document(d.text, "en"), "agc", 3)}
        hits += len(chosen & set(d.planted))
    rate = hits / 300
    report("planted-retrieval", rate >= 0.90, f"recovered {rate:.1%} of planted sentences over 100 trials (need 90%)")


def test_metric_golden_table(report):
    bad = [name for name, fn, want in CASES if abs(fn() - want) > 1e-9]
    from cluesum.metrics import meteor, rouge_l, rouge_n
    exact = (rouge_n("a b c d", "a b c d", 1)[2] == 1.0 and rouge_n("a b c d", "a b c d", 2)[2] == 1.0
             and rouge_l("a b c d", "a b c d")[2] == 1.0 and meteor("a b c d", "a b c d") == 0.9921875)
    report("metric-golden", len(CASES) >= 12 and not bad and exact,
           f"{len(CASES) - len(bad)}/{len(CASES)} cases within 1e-9; exact identity values {'hold' if exact else 'differ'}"
           + (f"; failing: {bad}" if bad else ""))


def test_distribution_validity(report):
    rng = np.random.default_rng(11)
    vocab = Vocabulary("target", ["<pad>", "<unk>", "<bos>", "<eos>"] + [f"w{i}" for i in range(12)])
    worst_sum, min_val, gate_ok = 0.0, 0.0, True
    for _ in range(1000):
        # random lexicon over a few source words, some targets outside the vocabulary
        lex = {}
        for src in ("a", "b", "c"):
            if rng.random() < 0.8:
                tgts = rng.choice([f"w{i}" for i in range(14)], size=rng.integers(1, 4), replace=False)
                lex[src] = list(zip(tgts.tolist(), rng.dirichlet(np.ones(len(tgts))).tolist()))
        lexicon = BilingualLexicon(lex)
        c = int(rng.integers(1, 7))
        tokens = [rng.choice(["a", "b", "c", "zz", None]) for _ in range(c)]
        alpha = rng.dirichlet(np.ones(c) * rng.uniform(0.1, 3))
        logits = rng.normal(size=len(vocab)) * rng.uniform(0.1, 20)
        p_neural = np.exp(logits - logits.max())
        p_neural /= p_neural.sum()
        d = 6
        scale = rng.uniform(0.1, 50)
        h = torch.tensor(rng.normal(size=d) * scale)
        gate = translation_gate(h, torch.tensor(rng.normal(size=(d, d))), torch.tensor(rng.normal(size=d)),
                                torch.tensor(rng.normal(size=(1, d))), torch.tensor(rng.normal(size=1))).item()
        gate_ok &= 0.0 < gate < 1.0
        out = mix_distribution(p_neural, gate, alpha, tokens, lexicon, vocab)
        worst_sum = max(worst_sum, abs(out.sum() - 1))
        min_val = min(min_val, out.min())
    ok = worst_sum <= 1e-6 and min_val >= 0 and gate_ok
    report("distribution-validity", ok,
           f"1000 inputs: max |sum-1| = {worst_sum:.2e}, min entry = {min_val:.2e}, gate in (0,1): {gate_ok}")


def test_gradient_check(report):
    start = time.perf_counter()
    model, feats, _ = toy_model(d_model=12, enc_layers=2, dec_layers=2, heads=2, gat_layers=1, gat_heads=3, n_pairs=4,
                                dtype="float64")
    worst = gradient_check(model, collate(feats, model.dtype), eps=1e-4)
    elapsed = time.perf_counter() - start
    name, err = max(worst.items(), key=lambda kv: kv[1])
    report("gradient-check", err < 1e-4 and elapsed < 60,
           f"{len(worst)} parameter groups, max relative error {err:.2e} ({name}) in {elapsed:.1f}s (limits 1e-4, 60s)")


OVERFIT_MODEL = ModelConfig(d_model=32, d_ff=64, enc_layers=1, dec_layers=1, enc_heads=2, gat_layers=1, gat_heads=3,
                            dropout=0.0, max_positions=64)


def test_overfit_smoke(report):
    torch.set_num_threads(1)
    cc, pairs = copy_pairs(50, seed=0)
    cfg = TrainConfig(batch_size_tokens=256, lr=3e-3, warmup_steps=100, max_steps=800, seed=1)
    trace = {}

    def on_step(rec, model):
        if rec["step"] % 100 == 0:
            trace[rec["step"]] = teacher_forced_accuracy(model, feats_holder["features"])
            model.train()

    feats_holder = {}
    import cluesum.training as training
    original = training.prepare_pair

    def capture(*args, **kwargs):
        f = original(*args, **kwargs)
        feats_holder.setdefault("features", []).append(f)
        return f

    start = time.perf_counter()
    training.prepare_pair = capture
    try:
        res = train(pairs, cc.lexicon, OVERFIT_MODEL, cfg, ClueConfig(top_ratio=1.0), on_step=on_step)
    finally:
        training.prepare_pair = original
    reached = min((s for s, a in trace.items() if a >= 0.95), default=None)
    exact = 0
    for p in pairs:
        ids = beam_search(res.model, res.features[p.id], BeamConfig(4, 0.6, 20))
        exact += "".join(res.tgt_vocab.decode(ids)) == p.reference
    elapsed = time.perf_counter() - start
    first = np.mean([r["loss"] for r in res.log[:10]])
    last = np.mean([r["loss"] for r in res.log[-10:]])
    vocab_ok = len(res.src_vocab) <= 100 and len(res.tgt_vocab) <= 100
    ok = reached is not None and reached <= 2000 and exact / len(pairs) >= 0.80 and elapsed < 600 and vocab_ok
    report("overfit-smoke", ok,
           f"teacher-forced accuracy >= 95% at step {reached} (final {trace[max(trace)]:.3f}); "
           f"beam-4 exact {exact}/{len(pairs)}; loss {first:.3f} -> {last:.4f} "
           f"({1 - last / first:.1%} drop); vocab {len(res.src_vocab)}/{len(res.tgt_vocab)}; {elapsed:.0f}s")


def test_determinism(report, tmp_path):
    cc, pairs = copy_pairs(12, seed=4)
    cfg = TrainConfig(batch_size_tokens=128, lr=3e-3, warmup_steps=10, max_steps=30, seed=5)
    model_cfg = ModelConfig(d_model=16, d_ff=32, enc_layers=2, dec_layers=2, enc_heads=2, gat_heads=3, dropout=0.0,
                            max_positions=64)
    for run in ("a", "b"):
        train(pairs, cc.lexicon, model_cfg, cfg, ClueConfig(top_ratio=1.0), out_dir=tmp_path / run)
    a = (tmp_path / "a" / "checkpoint.bin").read_bytes()
    b = (tmp_path / "b" / "checkpoint.bin").read_bytes()
    report("determinism", a == b, f"two 30-step runs give {'identical' if a == b else 'different'} checkpoints ({len(a)} bytes)")


def test_beam_invariants(report):
    same = 0
    for seed in range(20):
        model, feats, _ = toy_model(d_model=8, enc_layers=1, dec_layers=1, heads=2, n_pairs=1, seed=seed,
                                    param_seed=seed)
        same += beam_search(model, feats[0], BeamConfig(1, 0.6, 15)) == greedy_decode(model, feats[0], 15)
    lp_ok = all(length_penalty(1, a) == 1.0 for a in (0.0, 0.3, 0.6, 1.0, 2.0))
    report("beam-invariants", same == 20 and lp_ok, f"width-1 equals greedy on {same}/20 inputs; lp(1) == 1 exactly: {lp_ok}")


def test_length_report_protocol(report):
    records, hyps, counts = length_corpus(DEFAULT_BUCKETS, per_bucket=4, seed=9)
    pairs = pairs_from(records)
    rep = length_report(pairs, hyps, DEFAULT_BUCKETS)
    oracle = counting_oracle(counts, DEFAULT_BUCKETS)
    refs = {p.id: p.reference for p in pairs}
    means = []
    for k in range(len(DEFAULT_BUCKETS)):
        members = [pid for pid, b in oracle.items() if b == k]
        means.append(sum(char_lcs_f1(hyps[m], refs[m]) for m in members) / len(members))
    ok = (len(rep.rows) == 10 and rep.assignment == oracle
          and all(abs(r.delta - (m - means[0])) < 1e-12 for r, m in zip(rep.rows, means)))
    report("length-report", ok, f"{len(rep.rows)} buckets, assignment and deltas match the counting oracle; "
                                f"last-bucket delta {rep.rows[-1].delta:+.3f}")
