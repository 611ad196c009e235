import random

import pytest

from cluesum.corpus import BilingualLexicon, CLSPair, make_document
from cluesum.plotting import plot_length_deltas, plot_method_comparison, plot_training_curve
from cluesum.reports import (
    DEFAULT_BUCKETS,
    assign_bucket,
    bucket_labels,
    compare_extractive,
    comparison_tsv,
    length_report,
    translate_naive,
)
from cluesum.synthetic import length_corpus, planted_document


def pairs_from(records):
    return [CLSPair(make_document(r["doc"], r["src_lang"]), r["summary"], r["id"], r["tgt_lang"]) for r in records]


def counting_oracle(counts, boundaries):
    """Bucket by explicit comparison against each [lo, hi) pair."""
    out = {}
    for pid, n in counts.items():
        out[pid] = None
        for k, lo in enumerate(boundaries):
            hi = boundaries[k + 1] if k + 1 < len(boundaries) else float("inf")
            if lo <= n < hi:
                out[pid] = k
    return out


def char_lcs_f1(h, r):
    table = [[0] * (len(r) + 1) for _ in range(len(h) + 1)]
    for i in range(len(h)):
        for j in range(len(r)):
            table[i + 1][j + 1] = table[i][j] + 1 if h[i] == r[j] else max(table[i][j + 1], table[i + 1][j])
    lcs = table[-1][-1]
    if lcs == 0:
        return 0.0
    p, rc = lcs / len(h), lcs / len(r)
    return 2 * p * rc / (p + rc)


class TestBuckets:
    def test_labels(self):
        assert bucket_labels([0, 100, 200]) == ["[0,100)", "[100,200)", "[200,inf)"]

    def test_assign(self):
        assert [assign_bucket(n, [0, 100, 200]) for n in (0, 99, 100, 5000)] == [0, 0, 1, 2]
        assert assign_bucket(5, [10, 20]) is None

    def test_not_increasing(self):
        with pytest.raises(ValueError):
            length_report([], {}, [0, 100, 100])


class TestLengthReport:
    def test_single_bucket_delta_zero(self):
        pairs = pairs_from(length_corpus([0], per_bucket=3)[0])
        rep = length_report(pairs, {p.id: p.reference for p in pairs}, [0])
        assert len(rep.rows) == 1 and rep.rows[0].delta == 0.0

    def test_two_identical_buckets(self):
        p = pairs_from(length_corpus([0], per_bucket=1)[0])[0]
        n = p.doc.num_words
        twin = CLSPair(p.doc, p.reference, "twin", p.tgt_lang)
        rep = length_report([p, twin], {p.id: "x", "twin": "x"}, [0, n])
        assert rep.rows[0].count == 0 and rep.rows[1].count == 2
        rep = length_report([p, twin], {p.id: p.reference[:5], "twin": p.reference[:5]}, [0, n + 1])
        assert rep.rows[0].count == 2

    def test_against_counting_oracle(self):
        records, hyps, counts = length_corpus(DEFAULT_BUCKETS, per_bucket=3, seed=2)
        pairs = pairs_from(records)
        assert {p.id: p.doc.num_words for p in pairs} == counts
        rep = length_report(pairs, hyps, DEFAULT_BUCKETS)
        expect = counting_oracle(counts, DEFAULT_BUCKETS)
        assert rep.assignment == expect
        assert len(rep.rows) == 10
        refs = {p.id: p.reference for p in pairs}
        for k, row in enumerate(rep.rows):
            members = [pid for pid, b in expect.items() if b == k]
            assert row.count == len(members)
            mean = sum(char_lcs_f1(hyps[m], refs[m]) for m in members) / len(members)
            assert row.rouge_l == pytest.approx(mean, abs=1e-12)
            assert row.delta == pytest.approx(mean - rep.rows[0].rouge_l, abs=1e-12)
        ordered = sorted(counts, key=counts.get)
        assert [expect[p] for p in ordered] == sorted(expect[p] for p in ordered)

    def test_empty_bucket_reports_none(self):
        pairs = pairs_from(length_corpus([0], per_bucket=2)[0])
        rep = length_report(pairs, {}, [0, 10_000])
        assert rep.rows[1].count == 0 and rep.rows[1].rouge_l is None and rep.rows[1].delta is None
        assert "n/a" in rep.to_tsv()


class TestExtractiveComparison:
    def test_translate_naive(self):
        lex = BilingualLexicon({"river": [("河", 0.9), ("江", 0.1)], "bank": [("岸", 1.0)]})
        doc = make_document("The river bank.", "en")
        assert translate_naive(list(doc.sentences), lex, "zh") == "河岸"

    def test_comparison_table(self):
        rng = random.Random(0)
        recs = []
        for i in range(3):
            d = planted_document(rng)
            recs.append({"id": f"p{i}", "doc": d.text, "summary": "x", "src_lang": "en", "tgt_lang": "zh"})
        reps = compare_extractive(pairs_from(recs))
        assert list(reps) == ["textrank", "lexrank", "agc"]
        assert len(comparison_tsv(reps).splitlines()) == 4


class TestPlots:
    def test_files_written_and_stable(self, tmp_path):
        plot_length_deltas(["[0,10)", "[10,inf)"], [0.0, None], tmp_path / "a.png")
        plot_length_deltas(["[0,10)", "[10,inf)"], [0.0, None], tmp_path / "b.png")
        assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()
        plot_method_comparison({"agc": {"R1": 0.5, "R2": 0.2, "RL": 0.4, "METEOR": 0.3, "RWMD": 0.6}}, tmp_path / "c.png")
        plot_training_curve([{"step": 1, "loss": 2.0}, {"step": 2, "loss": 1.0}], tmp_path / "d.png")
        assert all((tmp_path / n).stat().st_size > 0 for n in ("c.png", "d.png"))
