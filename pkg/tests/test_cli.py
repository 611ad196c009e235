import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from cluesum.cli import main
from cluesum.clues import extract_clues
from cluesum.config import RunConfig
from cluesum.corpus import load_cls_corpus, write_cls_corpus
from cluesum.errors import NumericalError
from cluesum.graph import build_article_graph
from cluesum.synthetic import copy_translate_corpus

DOCS = [
    {"id": "d1", "doc": "The river bank flooded after the storm. Officials closed the river road. "
                        "The storm also damaged the old bridge near the bank. Schools stayed open.",
     "summary": "河岸洪水", "src_lang": "en", "tgt_lang": "zh"},
    {"id": "d2", "doc": "Solar power prices fell again this year. Solar panels now cost less than coal. "
                        "Analysts expect solar growth to continue.",
     "summary": "太阳能降价", "src_lang": "en", "tgt_lang": "zh"},
]


def write_jsonl(path, records):
    path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records), encoding="utf-8")
    return path


def read_jsonl(path):
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]


@pytest.fixture
def corpus(tmp_path):
    return write_jsonl(tmp_path / "corpus.jsonl", DOCS)


class TestExtractClues:
    def test_one_doc_one_line(self, tmp_path):
        c = write_jsonl(tmp_path / "one.jsonl", DOCS[:1])
        assert main(["extract-clues", "--corpus", str(c), "--out", str(tmp_path / "o.jsonl")]) == 0
        rows = read_jsonl(tmp_path / "o.jsonl")
        assert len(rows) == 1 and rows[0]["id"] == "d1" and rows[0]["clues"]

    def test_clue_free_doc(self, tmp_path):
        c = write_jsonl(tmp_path / "c.jsonl", [dict(DOCS[0], doc="The of and. It is the.")])
        main(["extract-clues", "--corpus", str(c), "--out", str(tmp_path / "o.jsonl")])
        assert read_jsonl(tmp_path / "o.jsonl")[0]["clues"] == []

    def test_idempotent(self, corpus, tmp_path):
        for name in ("a", "b"):
            main(["extract-clues", "--corpus", str(corpus), "--seed", "3", "--out", str(tmp_path / name)])
        assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


class TestBuildGraph:
    def test_matches_library_and_schema(self, corpus, tmp_path):
        out = tmp_path / "g.jsonl"
        assert main(["build-graph", "--corpus", str(corpus), "--out", str(out)]) == 0
        schema = json.loads(resources.files("cluesum").joinpath("data/graph.schema.json").read_text(encoding="utf-8"))
        rows = read_jsonl(out)
        pairs = {p.id: p for p in load_cls_corpus(corpus)}
        for row in rows:
            jsonschema.validate(row, schema)
            p = pairs[row["id"]]
            expect = build_article_graph(p.doc, extract_clues(p.doc))
            assert {k: v for k, v in row.items() if k != "id"} == expect.to_json()

    def test_fallback_flag(self, tmp_path):
        c = write_jsonl(tmp_path / "c.jsonl", [dict(DOCS[0], doc="The of. And it. Is the.")])
        main(["build-graph", "--corpus", str(c), "--out", str(tmp_path / "g.jsonl")])
        row = read_jsonl(tmp_path / "g.jsonl")[0]
        assert row["fallback"] is True and len(row["vertices"]) == 3

    def test_schema_rejects_bad_graph(self):
        schema = json.loads(resources.files("cluesum").joinpath("data/graph.schema.json").read_text(encoding="utf-8"))
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate({"id": "x", "vertices": [], "edges": [[0, 1]], "fallback": False}, schema)


class TestSummarizeExtractive:
    def test_default_three_sentences(self, corpus, tmp_path):
        main(["summarize-extractive", "--corpus", str(corpus), "--out", str(tmp_path / "s.jsonl")])
        rows = read_jsonl(tmp_path / "s.jsonl")
        assert [r["method"] for r in rows] == ["agc", "agc"]
        assert all(len(r["sentences"]) <= 3 for r in rows)
        assert rows[1]["sentences"] == [0, 1, 2]

    def test_k_larger_than_doc(self, corpus, tmp_path):
        main(["summarize-extractive", "--corpus", str(corpus), "--method", "textrank", "--k", "50",
              "--out", str(tmp_path / "s.jsonl")])
        rows = read_jsonl(tmp_path / "s.jsonl")
        assert rows[0]["sentences"] == [0, 1, 2, 3]

    def test_comparison_report(self, corpus, tmp_path):
        lex = tmp_path / "lex.tsv"
        lex.write_text("river\t河\t1.0\nbank\t岸\t1.0\nsolar\t太\t0.5\nsolar\t阳\t0.5\nstorm\t暴\t1.0\n", encoding="utf-8")
        rc = main(["summarize-extractive", "--corpus", str(corpus), "--method", "all", "--lexicon", str(lex),
                   "--out", str(tmp_path / "s.jsonl"), "--report-dir", str(tmp_path / "rep")])
        assert rc == 0
        tsv = (tmp_path / "rep" / "extractive_comparison.tsv").read_text().splitlines()
        assert tsv[0].split("\t") == ["method", "R1", "R2", "RL", "METEOR", "RWMD"]
        assert [line.split("\t")[0] for line in tsv[1:]] == ["agc", "textrank", "lexrank"]
        assert (tmp_path / "rep" / "extractive_comparison.png").stat().st_size > 0
        assert all("translation" in r for r in read_jsonl(tmp_path / "s.jsonl"))


class TestEvaluate:
    def test_identical_files(self, corpus, tmp_path, capsys):
        rows = [{"id": d["id"], "summary": d["summary"]} for d in DOCS]
        hyp = write_jsonl(tmp_path / "h.jsonl", rows)
        assert main(["evaluate", "--hyp", str(hyp), "--ref", str(corpus), "--out", str(tmp_path / "e.json")]) == 0
        rep = json.loads((tmp_path / "e.json").read_text())
        for m in ("R1", "R2", "RL"):
            assert rep["corpus"][m] == 1.0
        assert (tmp_path / "e.txt").exists()
        assert "MEAN" in capsys.readouterr().out

    def test_plain_text(self, tmp_path):
        (tmp_path / "h.txt").write_text("the cat\n", encoding="utf-8")
        (tmp_path / "r.txt").write_text("the cat sat\n", encoding="utf-8")
        main(["evaluate", "--hyp", str(tmp_path / "h.txt"), "--ref", str(tmp_path / "r.txt"), "--out", str(tmp_path / "e.json")])
        assert json.loads((tmp_path / "e.json").read_text())["corpus"]["R1"] == pytest.approx(0.8)

    def test_missing_reference_is_input_error(self, tmp_path):
        write_jsonl(tmp_path / "h.jsonl", [{"id": "zz", "summary": "x"}])
        write_jsonl(tmp_path / "r.jsonl", [{"id": "aa", "summary": "x"}])
        assert main(["evaluate", "--hyp", str(tmp_path / "h.jsonl"), "--ref", str(tmp_path / "r.jsonl"),
                     "--out", str(tmp_path / "e.json")]) == 2


class TestErrors:
    def test_missing_checkpoint(self, corpus, tmp_path, capsys):
        missing = tmp_path / "nope.bin"
        assert main(["generate", "--corpus", str(corpus), "--checkpoint", str(missing), "--out", str(tmp_path / "g")]) == 2
        assert str(missing) in capsys.readouterr().err

    def test_malformed_corpus(self, tmp_path, capsys):
        (tmp_path / "bad.jsonl").write_text('{"id": "a"}\n', encoding="utf-8")
        assert main(["extract-clues", "--corpus", str(tmp_path / "bad.jsonl"), "--out", str(tmp_path / "o")]) == 2
        assert "line 1" in capsys.readouterr().err

    def test_unknown_config_key(self, corpus, tmp_path):
        (tmp_path / "cfg.json").write_text('{"clue": {"nonsense": 1}}', encoding="utf-8")
        assert main(["extract-clues", "--corpus", str(corpus), "--config", str(tmp_path / "cfg.json"),
                     "--out", str(tmp_path / "o")]) == 2

    def test_numerical_failure_exit_code(self, corpus, tmp_path, monkeypatch):
        import cluesum.training

        def boom(*a, **k):
            raise NumericalError("non-finite gradient in w", tensor_name="w")

        monkeypatch.setattr(cluesum.training, "train", boom)
        lex = tmp_path / "lex.tsv"
        lex.write_text("river\t河\t1.0\n", encoding="utf-8")
        assert main(["train", "--corpus", str(corpus), "--lexicon", str(lex), "--out", str(tmp_path / "m")]) == 3

    def test_bad_buckets(self, corpus, tmp_path):
        hyp = write_jsonl(tmp_path / "h.jsonl", [{"id": "d1", "summary": "x"}])
        assert main(["length-report", "--corpus", str(corpus), "--hyp", str(hyp), "--buckets", "0,50,20",
                     "--out", str(tmp_path / "lr")]) == 2

    def test_console_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "cluesum.cli", "generate", "--corpus", "x.jsonl",
                               "--checkpoint", str(tmp_path / "none.bin"), "--out", str(tmp_path / "o")],
                              capture_output=True, text=True)
        assert proc.returncode == 2 and "none.bin" in proc.stderr


class TestConfigPrecedence:
    def test_three_way(self, corpus, tmp_path):
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text(json.dumps({"clue": {"max_clues": 2}}), encoding="utf-8")
        assert RunConfig.load(None).clue.max_clues == 20
        assert RunConfig.load(cfg_file).clue.max_clues == 2
        assert RunConfig.load(cfg_file, {"clue.max_clues": 1}).clue.max_clues == 1

        def n_clues(*extra):
            out = tmp_path / "o.jsonl"
            main(["extract-clues", "--corpus", str(corpus), "--out", str(out), *extra])
            return max(len(r["clues"]) for r in read_jsonl(out))

        assert n_clues() > 2
        assert n_clues("--config", str(cfg_file)) == 2
        assert n_clues("--config", str(cfg_file), "--max-clues", "1") == 1

    def test_seed_flag_beats_file(self, tmp_path):
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text('{"seed": 9}', encoding="utf-8")
        assert RunConfig.load(cfg_file).train_config().seed == 9
        assert RunConfig.load(cfg_file, {"seed": 4}).train_config().seed == 4


TOY_CONFIG = {
    "seed": 1,
    "model": {"d_model": 32, "d_ff": 64, "enc_layers": 1, "dec_layers": 1, "enc_heads": 2, "gat_heads": 3,
              "dropout": 0.0, "max_positions": 64},
    "train": {"batch_size_tokens": 256, "lr": 0.003, "warmup_steps": 100, "max_steps": 400},
    "clue": {"top_ratio": 1.0},
    "beam": {"width": 4, "max_len": 20},
}


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    root = tmp_path_factory.mktemp("pipeline")
    cc = copy_translate_corpus(20, seed=3)
    write_jsonl(root / "corpus.jsonl", cc.records)
    (root / "lex.tsv").write_text("".join(line + "\n" for line in cc.lexicon_lines), encoding="utf-8")
    (root / "cfg.json").write_text(json.dumps(TOY_CONFIG), encoding="utf-8")
    rc = main(["train", "--corpus", str(root / "corpus.jsonl"), "--lexicon", str(root / "lex.tsv"),
               "--config", str(root / "cfg.json"), "--out", str(root / "model")])
    assert rc == 0
    return root


class TestPipeline:
    def test_train_outputs(self, trained):
        model = trained / "model"
        for name in ("checkpoint.bin", "metrics.jsonl", "training_loss.png", "run_config.json", "vocab.src.txt", "vocab.tgt.txt"):
            assert (model / name).exists(), name
        log = read_jsonl(model / "metrics.jsonl")
        assert len(log) == 400 and log[-1]["loss"] < log[0]["loss"]

    def test_generate_evaluate_round_trip(self, trained):
        args = ["--corpus", str(trained / "corpus.jsonl"), "--checkpoint", str(trained / "model" / "checkpoint.bin"),
                "--config", str(trained / "cfg.json")]
        assert main(["generate", *args, "--out", str(trained / "hyp.jsonl")]) == 0
        assert main(["generate", *args, "--out", str(trained / "hyp2.jsonl")]) == 0
        assert (trained / "hyp.jsonl").read_bytes() == (trained / "hyp2.jsonl").read_bytes()
        assert main(["evaluate", "--hyp", str(trained / "hyp.jsonl"), "--ref", str(trained / "corpus.jsonl"),
                     "--out", str(trained / "eval.json")]) == 0
        assert json.loads((trained / "eval.json").read_text())["corpus"]["R1"] >= 0.9

    def test_length_report_from_checkpoint(self, trained):
        out = trained / "lr"
        assert main(["length-report", "--corpus", str(trained / "corpus.jsonl"), "--config", str(trained / "cfg.json"),
                     "--checkpoint", str(trained / "model" / "checkpoint.bin"), "--buckets", "0,8,12", "--out", str(out)]) == 0
        rows = (out / "length_report.tsv").read_text().splitlines()
        assert len(rows) == 4 and rows[0].startswith("bucket")
        assert (out / "length_report.png").exists()


def test_corpus_writer_round_trip(tmp_path):
    write_cls_corpus(tmp_path / "d.jsonl", DOCS)
    assert load_cls_corpus(tmp_path / "d.jsonl") == load_cls_corpus(write_jsonl(tmp_path / "c.jsonl", DOCS))
