"""Command-line pipeline: extract-clues, build-graph, summarize-extractive, train, generate, evaluate, length-report.

Exit codes: 0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .clues import extract_clues
from .config import RunConfig
from .corpus import load_abbreviations, load_cls_corpus, load_lexicon, load_stopwords
from .errors import CluesumError, NumericalError
from .graph import METHODS, build_article_graph, extract_summary
from .metrics import evaluate, load_embeddings, load_synonyms
from .model.checkpoint import CheckpointError, load_checkpoint
from . import plotting, reports

logger = logging.getLogger("cluesum")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


def _dump_jsonl(path: Path, records) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def _config(args) -> RunConfig:
    overrides = {"seed": args.seed}
    for dest, key in getattr(args, "_overrides", {}).items():
        overrides[key] = getattr(args, dest, None)
    return RunConfig.load(args.config, overrides)


def _corpus(args, cfg: RunConfig):
    abbrev = load_abbreviations(cfg.paths.abbreviations) if cfg.paths.abbreviations else None
    return load_cls_corpus(args.corpus, abbrev)


def _stopwords(cfg: RunConfig, lang: str | None = None):
    if cfg.paths.stopwords:
        return load_stopwords(lang or "en", cfg.paths.stopwords)
    return None  # per-document packaged list


def _char_level(cfg: RunConfig, tgt_lang: str | None) -> bool:
    mode = str(cfg.metric.char_level).lower()
    if mode == "auto":
        return tgt_lang == "zh"
    return mode in ("true", "1", "yes", "char")


def _embeddings(cfg: RunConfig):
    return load_embeddings(cfg.paths.embeddings) if cfg.paths.embeddings else None


def _synonyms(cfg: RunConfig):
    return load_synonyms(cfg.paths.synonyms) if cfg.paths.synonyms else None


# -- subcommands -------------------------------------------------------------------

def cmd_extract_clues(args) -> int:
    cfg = _config(args)
    pairs = _corpus(args, cfg)
    records = []
    for p in pairs:
        clues = extract_clues(p.doc, cfg.clue_config(_stopwords(cfg, p.src_lang)))
        records.append({"id": p.id, "clues": [[list(c.tokens), c.score] for c in clues]})
    _dump_jsonl(Path(args.out), records)
    logger.info("wrote clues for %d documents to %s", len(records), args.out)
    return EXIT_OK


def cmd_build_graph(args) -> int:
    cfg = _config(args)
    pairs = _corpus(args, cfg)
    records = []
    for p in pairs:
        clues = extract_clues(p.doc, cfg.clue_config(_stopwords(cfg, p.src_lang)))
        records.append({"id": p.id, **build_article_graph(p.doc, clues).to_json()})
    _dump_jsonl(Path(args.out), records)
    return EXIT_OK


def cmd_summarize_extractive(args) -> int:
    cfg = _config(args)
    pairs = _corpus(args, cfg)
    method = cfg.extract.method
    methods = list(METHODS) if method == "all" else [method]
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    k = cfg.extract.k
    lexicon = load_lexicon(cfg.paths.lexicon) if cfg.paths.lexicon else None
    records = []
    for p in pairs:
        ecfg = cfg.extract_config(_stopwords(cfg, p.src_lang))
        for m in methods:
            chosen = extract_summary(p.doc, m, k, ecfg)
            text = " ".join(s.text(p.src_lang) for s in chosen) if p.src_lang != "zh" else "".join(s.text("zh") for s in chosen)
            rec = {"id": p.id, "method": m, "sentences": [s.index for s in chosen], "summary": text}
            if lexicon is not None:
                rec["translation"] = reports.translate_naive(chosen, lexicon, p.tgt_lang)
            records.append(rec)
    _dump_jsonl(Path(args.out), records)

    if args.report_dir:
        out = Path(args.report_dir)
        out.mkdir(parents=True, exist_ok=True)
        comp = reports.compare_extractive(pairs, methods, k, cfg.extract_config(_stopwords(cfg)), lexicon,
                                          cfg.meteor_params(_synonyms(cfg)), _embeddings(cfg))
        (out / "extractive_comparison.tsv").write_text(reports.comparison_tsv(comp), encoding="utf-8")
        (out / "extractive_comparison.json").write_text(
            json.dumps({m: r.to_json() for m, r in comp.items()}, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8")
        plotting.plot_method_comparison({m: r.corpus for m, r in comp.items()}, out / "extractive_comparison.png")
    return EXIT_OK


def cmd_train(args) -> int:
    from .training import train

    cfg = _config(args)
    pairs = _corpus(args, cfg)
    lexicon_path = args.lexicon or cfg.paths.lexicon
    if not lexicon_path:
        raise ValueError("train needs a lexicon (--lexicon or paths.lexicon)")
    lexicon = load_lexicon(lexicon_path)
    out = Path(args.out)
    result = train(pairs, lexicon, cfg.model_config(), cfg.train_config(), cfg.clue_config(_stopwords(cfg)),
                   out_dir=out, log_path=out / "metrics.jsonl")
    plotting.plot_training_curve(result.log, out / "training_loss.png")
    (out / "run_config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    result.src_vocab.save(out / "vocab.src.txt")
    result.tgt_vocab.save(out / "vocab.tgt.txt")
    return EXIT_OK


def _generate_all(pairs, checkpoint: str, cfg: RunConfig) -> dict[str, str]:
    from .training import generate, unpack_meta

    model, _, meta = load_checkpoint(checkpoint)
    src_vocab, tgt_vocab, lexicon, clue_cfg = unpack_meta(meta)
    beam = cfg.beam_config()
    return {p.id: generate(model, p.doc, p.id, src_vocab, tgt_vocab, lexicon, clue_cfg, beam, p.tgt_lang) for p in pairs}


def cmd_generate(args) -> int:
    cfg = _config(args)
    if not Path(args.checkpoint).exists():
        raise FileNotFoundError(f"checkpoint not found: {args.checkpoint}")
    pairs = _corpus(args, cfg)
    hyps = _generate_all(pairs, args.checkpoint, cfg)
    _dump_jsonl(Path(args.out), ({"id": p.id, "summary": hyps[p.id]} for p in pairs))
    return EXIT_OK


def read_summaries(path: str | Path) -> tuple[list[str], dict[str, str], dict[str, str]]:
    """Summaries from JSONL (``id`` + ``summary``) or plain text (one per line, ids are line numbers).

    Returns the id order, summaries by id and target languages by id (when known).
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    order, out, langs = [], {}, {}
    is_jsonl = path.suffix in (".jsonl", ".json") or (lines and lines[0].lstrip().startswith("{"))
    for lineno, line in enumerate(lines, start=1):
        if is_jsonl:
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                raise CluesumError(f"{path}: line {lineno}: invalid JSON") from None
            if "id" not in obj or "summary" not in obj:
                raise CluesumError(f"{path}: line {lineno}: need 'id' and 'summary'")
            pid = str(obj["id"])
            if "tgt_lang" in obj:
                langs[pid] = obj["tgt_lang"]
            out[pid] = obj["summary"]
        else:
            pid = str(lineno)
            out[pid] = line
        order.append(pid)
    return order, out, langs


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    order, hyps, _ = read_summaries(args.hyp)
    _, refs, langs = read_summaries(args.ref)
    missing = [pid for pid in order if pid not in refs]
    if missing:
        raise CluesumError(f"{len(missing)} hypothesis id(s) have no reference, e.g. {missing[0]!r}")
    tgt = next(iter(langs.values()), None)
    report = evaluate([(pid, hyps[pid], refs[pid]) for pid in order], _char_level(cfg, tgt),
                      cfg.meteor_params(_synonyms(cfg)), _embeddings(cfg))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.dumps(), encoding="utf-8")
    out.with_suffix(".txt").write_text(report.table(), encoding="utf-8")
    sys.stdout.write(report.table())
    return EXIT_OK


def cmd_length_report(args) -> int:
    cfg = _config(args)
    boundaries = cfg.length.buckets
    pairs = _corpus(args, cfg)
    if args.hyp:
        _, hyps, _ = read_summaries(args.hyp)
    elif args.checkpoint:
        hyps = _generate_all(pairs, args.checkpoint, cfg)
    else:
        raise ValueError("length-report needs --checkpoint or --hyp")
    rep = reports.length_report(pairs, hyps, boundaries, None if cfg.metric.char_level == "auto" else _char_level(cfg, None))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "length_report.tsv").write_text(rep.to_tsv(), encoding="utf-8")
    (out / "length_report.json").write_text(json.dumps(rep.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    plotting.plot_length_deltas([r.label for r in rep.rows], [r.delta for r in rep.rows], out / "length_report.png")
    sys.stdout.write(rep.to_tsv())
    return EXIT_OK


# -- parser --------------------------------------------------------------------------

def _parse_buckets(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad bucket list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cluesum", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help, corpus=True):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", type=Path, default=None, help="JSON run config")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", required=True, help="output path")
        if corpus:
            p.add_argument("--corpus", required=True, help="JSONL corpus")
        p.set_defaults(func=func, _overrides={})
        return p

    def override(p, flag, key, **kw):
        dest = flag.lstrip("-").replace("-", "_")
        p.add_argument(flag, dest=dest, default=None, **kw)
        p.get_default("_overrides")[dest] = key

    p = add("extract-clues", cmd_extract_clues, "TextRank key clues per document")
    override(p, "--window", "clue.window", type=int)
    override(p, "--top-ratio", "clue.top_ratio", type=float)
    override(p, "--max-clues", "clue.max_clues", type=int)

    p = add("build-graph", cmd_build_graph, "article graph per document (JSONL)")
    override(p, "--top-ratio", "clue.top_ratio", type=float)
    override(p, "--max-clues", "clue.max_clues", type=int)

    p = add("summarize-extractive", cmd_summarize_extractive, "top-k sentence extraction")
    override(p, "--method", "extract.method", choices=list(METHODS) + ["all"])
    override(p, "--k", "extract.k", type=int)
    override(p, "--lexicon", "paths.lexicon")
    p.add_argument("--report-dir", default=None, help="write a metric comparison table and figure here")

    p = add("train", cmd_train, "train the summarizer")
    p.add_argument("--lexicon", default=None, help="bilingual lexicon TSV")
    override(p, "--max-steps", "train.max_steps", type=int)
    override(p, "--lr", "train.lr", type=float)
    override(p, "--d-model", "model.d_model", type=int)

    p = add("generate", cmd_generate, "beam-search summaries from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    override(p, "--beam-width", "beam.width", type=int)
    override(p, "--max-len", "beam.max_len", type=int)

    p = add("evaluate", cmd_evaluate, "ROUGE/METEOR/RWMD report", corpus=False)
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True, help="reference summaries (a corpus JSONL works)")
    override(p, "--char-level", "metric.char_level", choices=["auto", "true", "false"])
    override(p, "--embeddings", "paths.embeddings")

    p = add("length-report", cmd_length_report, "ROUGE-L per source-length bucket")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--hyp", default=None, help="use these summaries instead of generating")
    override(p, "--buckets", "length.buckets", type=_parse_buckets)
    override(p, "--beam-width", "beam.width", type=int)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CluesumError, CheckpointError, FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
