"""Command-line entry point: ``streammt <subcommand> ...``.

Every subcommand reads and writes files only. Exit codes: 0 success,
2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import masks as M
from .bleu import corpus_bleu
from .corpus import DocumentCorpus, build_streaming_samples, read_samples, write_samples
from .decode import greedy_stream_decode
from .latency import report_from_lengths
from .model import ModelConfig, load_checkpoint, save_checkpoint
from .pipeline import (
    ConfigError, DataError, PipelineConfig, emit_report, load_report, run_pipeline, sweep,
)
from .policy import ActionTrace, WaitKPolicy, compose_with_segmenter
from .resegment import mwer_resegment
from .segmenter import (
    OracleSegmenter, SegmenterConfig, load_segmenter, save_segmenter, segment_stream, train_segmenter,
)
from .tasks import TASKS, make_documents
from .text import Vocabulary, read_lines, read_segmentation, read_stream, write_lines

log = logging.getLogger("streammt")

ENCODERS = ("bidir", "unidir", "pbe")


# -- helpers ------------------------------------------------------------------

def _gamma(text: str) -> Fraction:
    try:
        g = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"invalid --gamma {text!r}") from exc
    if g <= 0:
        raise ConfigError("--gamma must be positive")
    return g


def _nonneg(name: str, value):
    if value is not None and value < 0:
        raise ConfigError(f"--{name} must be >= 0")
    return value


def _policy(args) -> WaitKPolicy:
    if args.k < 1:
        raise ConfigError("--k must be >= 1")
    return WaitKPolicy(args.k, _gamma(args.gamma))


def _lines(path) -> list[list[str]]:
    try:
        return read_lines(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _ints(path) -> list[int]:
    try:
        return [int(v) for v in Path(path).read_text().split()]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise DataError(f"{path}: expected whitespace-separated integers") from exc


def _model(path):
    try:
        return load_checkpoint(path)
    except FileNotFoundError as exc:
        raise ConfigError(f"checkpoint {path} does not exist") from exc
    except (ValueError, KeyError, OSError) as exc:
        raise ConfigError(f"cannot load checkpoint {path}: {exc}") from exc


def _segmenter(path):
    try:
        return load_segmenter(path)
    except FileNotFoundError as exc:
        raise ConfigError(f"segmenter {path} does not exist") from exc
    except (ValueError, KeyError, OSError) as exc:
        raise ConfigError(f"cannot load segmenter {path}: {exc}") from exc


def _write_json(obj, dest):
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if dest in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(dest).write_text(text, encoding="utf-8")


# -- subcommands --------------------------------------------------------------

def cmd_make_task(args):
    corpus = make_documents(args.task, args.docs, args.sentences, args.seed, args.words)
    prefix = Path(args.out_prefix)
    write_lines(f"{prefix}.src", [x for x, _ in corpus.pairs()])
    write_lines(f"{prefix}.tgt", [y for _, y in corpus.pairs()])
    with open(f"{prefix}.docs", "w") as f:
        line = 1
        for doc in corpus.documents:
            f.write(f"{line} {line + len(doc) - 1}\n")
            line += len(doc)


def cmd_build_corpus(args):
    _nonneg("history", args.history)
    try:
        corpus = DocumentCorpus.from_files(args.src, args.tgt, args.doc_index)
    except OSError as exc:
        raise DataError(str(exc)) from exc
    samples = build_streaming_samples(corpus, args.history)
    write_samples(samples, args.out_src, args.out_tgt)
    log.info("wrote %d samples", len(samples))


def cmd_train_toy(args):
    from .train import train_multi_k

    _nonneg("history", args.history)
    if not 1 <= args.k_min <= args.k_max:
        raise ConfigError("need 1 <= --k-min <= --k-max")
    try:
        samples = read_samples(args.src, args.tgt)
    except OSError as exc:
        raise DataError(str(exc)) from exc
    if not samples:
        raise DataError("no training samples")
    vocab = Vocabulary()
    for s in samples:
        for t in s.source + s.target:
            vocab.add(t)
    try:
        cfg = ModelConfig(vocab, layers=args.layers, model_dim=args.dim, heads=args.heads, ffn_dim=args.ffn,
                          encoder_kind=M.canonical_kind(args.encoder), history=args.history)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    params = train_multi_k(samples, cfg, (args.k_min, args.k_max), args.steps, args.seed,
                           batch_size=args.batch_size, lr=args.lr, warmup=args.warmup)
    save_checkpoint(args.out, params, cfg, {"seed": args.seed, "steps": args.steps,
                                            "k_range": [args.k_min, args.k_max]})


def cmd_train_segmenter(args):
    _nonneg("window", args.window)
    sentences = [s for s in _lines(args.corpus) if s]
    vocab = Vocabulary(t for s in sentences for t in s)
    cfg = SegmenterConfig(vocab, window=args.window, history_len=args.history_len)
    try:
        params = train_segmenter(sentences, cfg, args.seed, steps=args.steps)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    save_segmenter(args.out, params, cfg)


def cmd_segment(args):
    try:
        stream = list(read_stream(args.stream).tokens)
    except OSError as exc:
        raise DataError(f"cannot read {args.stream}: {exc}") from exc
    if args.segmenter == "oracle":
        if not args.reference_source:
            raise ConfigError("the oracle segmenter needs --reference-source")
        ends = list(np.cumsum([len(s) for s in _lines(args.reference_source)]))
        bounds = OracleSegmenter(ends, args.window).segment_stream(stream)
    else:
        params, cfg = _segmenter(args.segmenter)
        bounds = segment_stream(params, cfg, stream)
    Path(args.out).write_text(" ".join(str(int(b)) for b in bounds) + "\n")


def cmd_decode(args):
    policy = _policy(args)
    _nonneg("history", args.history)
    _nonneg("window", args.window)
    params, cfg = _model(args.checkpoint)
    if args.encoder and M.canonical_kind(args.encoder) != cfg.encoder_kind:
        raise ConfigError(f"checkpoint encoder is {cfg.encoder_kind}")
    stream = [t for s in _lines(args.stream) for t in s]
    if not stream:
        raise DataError("empty source stream")
    bounds = _ints(args.boundaries) if args.boundaries else []
    res = greedy_stream_decode(params, cfg, stream, bounds, policy, args.history)
    write_lines(args.out, [res.target])
    if args.trace:
        compose_with_segmenter(res.trace, args.window, len(stream)).save(args.trace)


def cmd_resegment(args):
    hyp = [t for s in _lines(args.hyp) for t in s]
    refs = _lines(args.ref)
    if not refs:
        raise DataError("no reference sentences")
    write_lines(args.out, mwer_resegment(hyp, refs).segments(hyp))


def cmd_bleu(args):
    hyps, refs = _lines(args.hyp), _lines(args.ref)
    if len(hyps) != len(refs):
        raise DataError(f"{len(hyps)} hypothesis lines vs {len(refs)} reference lines")
    _write_json(corpus_bleu(hyps, refs, smooth=args.smooth).to_dict(points=True), args.out)


def cmd_latency(args):
    try:
        trace = ActionTrace.load(args.trace)
        seg = read_segmentation(args.segmentation)
    except OSError as exc:
        raise DataError(str(exc)) from exc
    except (ValueError, KeyError) as exc:
        raise DataError(f"malformed input: {exc}") from exc
    G = trace.delays()
    if not G:
        raise DataError("trace has no WRITE events")
    src_total = args.src_total or trace.n_reads
    src_lens, tgt_lens = seg.lengths("source", src_total), seg.lengths("target", len(G))
    gammas = None if args.gamma is None else [_gamma(args.gamma)] * len(seg)
    report = report_from_lengths(G, seg.a, seg.b, src_lens, tgt_lens, gammas,
                                 Fraction(args.dal_scale), args.aggregation)
    text = report.to_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _run_config(args) -> tuple[PipelineConfig, dict]:
    raw: dict = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file {args.config} does not exist") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    extra = {k: raw.pop(k) for k in ("data", "sweep", "output") if k in raw}
    try:
        cfg = PipelineConfig.from_nested(raw) if any(isinstance(v, dict) for v in raw.values()) \
            else PipelineConfig.from_dict(raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    # explicit flags override the file
    for flag, field_ in (("k", "k"), ("gamma", "gamma"), ("window", "window"), ("segmenter", "segmenter"),
                         ("checkpoint", "checkpoint"), ("history", "history"), ("dal_scale", "dal_scale"),
                         ("aggregation", "aggregation"), ("seed", "seed")):
        v = getattr(args, flag)
        if v is not None:
            setattr(cfg, field_, v)
    if args.encoder:
        cfg.encoder_kind = M.canonical_kind(args.encoder)
    elif cfg.encoder_kind:
        cfg.encoder_kind = M.canonical_kind(cfg.encoder_kind)
    if args.smooth:
        cfg.bleu_smooth = True
    cfg.gamma = str(_gamma(str(cfg.gamma)))
    if cfg.k < 1:
        raise ConfigError("k must be >= 1")
    _nonneg("window", cfg.window)
    _nonneg("history", cfg.history)
    return cfg, extra


def cmd_run(args):
    cfg, extra = _run_config(args)
    data = extra.get("data", {})
    src_path = args.source or data.get("source")
    ref_path = args.reference or data.get("reference")
    if not src_path or not ref_path:
        raise ConfigError("run needs source and reference files")
    if cfg.checkpoint is None:
        raise ConfigError("run needs a model checkpoint")
    src, refs = _lines(src_path), _lines(ref_path)
    model = _model(cfg.checkpoint)
    grid = extra.get("sweep", {})
    ks = args.sweep_k or grid.get("k")
    ws = args.sweep_w or grid.get("w")
    out = args.out or extra.get("output")
    if not out:
        raise ConfigError("run needs --out")
    np.random.seed(cfg.seed)

    def seg_for(w):
        if cfg.segmenter == "oracle":
            return None
        return _segmenter(cfg.segmenter.format(w=w))

    if ks or ws:
        ks, ws = ks or [cfg.k], ws or [cfg.window]
        segs = None if cfg.segmenter == "oracle" else {w: seg_for(w) for w in ws}
        if segs is not None:
            cfg.segmenter = "trained"
        reports = sweep(cfg, ks, ws, src, refs, model, segs, jobs=args.jobs)
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        for r in reports:
            name = f"k{r.config['k']}_w{r.config['window']}"
            emit_report(r, "json", out_dir / f"{name}.json")
            emit_report(r, "csv", out_dir / f"{name}.csv")
        emit_report(reports, "plot-data", out_dir / "plot-data.json")
        return
    seg = seg_for(cfg.window)
    report = run_pipeline(cfg, src, refs, model, seg)
    emit_report(report, args.format, out)


def cmd_report(args):
    try:
        reports = [load_report(p) for p in args.inputs]
    except OSError as exc:
        raise DataError(str(exc)) from exc
    except (ValueError, KeyError) as exc:
        raise DataError(f"not a run report: {exc}") from exc
    if args.format == "plot-data":
        emit_report(reports, "plot-data", args.out)
    else:
        if len(reports) != 1:
            raise ConfigError(f"format {args.format} takes exactly one report")
        emit_report(reports[0], args.format, args.out)


def cmd_masks(args):
    try:
        G = args.length if args.G is None else args.G
        spec = M.MaskSpec(M.canonical_kind(args.encoder), args.k, args.a_n, args.history or 0, G)
        mask = (M.encoder_mask_streaming(spec, G, args.history) if args.history is not None
                else M.encoder_mask(spec, args.length))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(mask.render())


# -- parser -------------------------------------------------------------------

def _policy_flags(p, k_default=4):
    p.add_argument("--k", type=int, default=k_default, help="wait-k lagging")
    p.add_argument("--gamma", default="1", help="catch-up factor, e.g. 1 or 3/2")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="streammt", description="Streaming wait-k translation toolkit")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-task", help="write a synthetic document corpus")
    p.add_argument("--task", choices=TASKS, required=True)
    p.add_argument("--docs", type=int, default=20)
    p.add_argument("--sentences", type=int, default=8)
    p.add_argument("--words", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_make_task)

    p = sub.add_parser("build-corpus", help="streaming samples with bounded history")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--doc-index")
    p.add_argument("--history", type=int, default=0)
    p.add_argument("--out-src", required=True)
    p.add_argument("--out-tgt", required=True)
    p.set_defaults(func=cmd_build_corpus)

    p = sub.add_parser("train-toy", help="multi-k training of the toy Transformer")
    p.add_argument("--src", required=True, help="source sample file")
    p.add_argument("--tgt", required=True, help="target sample file")
    p.add_argument("--encoder", choices=ENCODERS, default="pbe")
    p.add_argument("--history", type=int, default=0)
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--ffn", type=int, default=64)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=3e-3)
    p.add_argument("--warmup", type=int, default=100)
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_toy)

    p = sub.add_parser("train-segmenter", help="train the sliding-window segmenter")
    p.add_argument("--corpus", required=True, help="one sentence per line")
    p.add_argument("--window", type=int, default=0)
    p.add_argument("--history-len", type=int, default=10)
    p.add_argument("--steps", type=int, default=400)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_segmenter)

    p = sub.add_parser("segment", help="sentence boundaries of a token stream")
    p.add_argument("--stream", required=True)
    p.add_argument("--segmenter", default="oracle", help="'oracle' or a segmenter checkpoint")
    p.add_argument("--reference-source", help="reference source sentences (oracle only)")
    p.add_argument("--window", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("decode", help="greedy streaming translation")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--stream", required=True)
    p.add_argument("--boundaries", help="file with boundary positions")
    _policy_flags(p)
    p.add_argument("--history", type=int)
    p.add_argument("--window", type=int, default=0, help="segmenter window for the written trace")
    p.add_argument("--encoder", choices=ENCODERS, help="assert the checkpoint's encoder kind")
    p.add_argument("--out", required=True)
    p.add_argument("--trace", help="write the action trace (JSON lines)")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("resegment", help="MWER resegmentation of a hypothesis stream")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_resegment)

    p = sub.add_parser("bleu", help="corpus BLEU as JSON (score in points)")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--smooth", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bleu)

    p = sub.add_parser("latency", help="stream AP/AL/DAL as CSV")
    p.add_argument("--trace", required=True)
    p.add_argument("--segmentation", required=True, help="'a<TAB>b' start offsets per sentence")
    p.add_argument("--src-total", type=int)
    p.add_argument("--gamma", help="fixed catch-up factor (default: per-sentence length ratio)")
    p.add_argument("--dal-scale", default="1")
    p.add_argument("--aggregation", choices=("mean", "weighted"), default="mean")
    p.add_argument("--out")
    p.set_defaults(func=cmd_latency)

    p = sub.add_parser("run", help="segmenter + translator + evaluation")
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--source", help="reference source sentences")
    p.add_argument("--reference", help="reference target sentences")
    p.add_argument("--checkpoint")
    p.add_argument("--segmenter", help="'oracle' or a segmenter checkpoint ('{w}' is expanded in sweeps)")
    p.add_argument("--k", type=int)
    p.add_argument("--gamma")
    p.add_argument("--window", type=int)
    p.add_argument("--history", type=int)
    p.add_argument("--encoder", choices=ENCODERS)
    p.add_argument("--dal-scale", type=float)
    p.add_argument("--aggregation", choices=("mean", "weighted"))
    p.add_argument("--smooth", action="store_true")
    p.add_argument("--seed", type=int)
    p.add_argument("--sweep-k", type=int, nargs="+")
    p.add_argument("--sweep-w", type=int, nargs="+")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="report file, or output directory for sweeps")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="re-emit stored run reports")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--format", choices=("csv", "json", "plot-data"), default="csv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("masks", help="print an encoder attention mask")
    p.add_argument("--encoder", choices=ENCODERS, default="pbe")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--length", type=int, default=8, help="J")
    p.add_argument("--G", type=int, help="source tokens read (default: J)")
    p.add_argument("--a-n", type=int, default=1)
    p.add_argument("--history", type=int, help="H; renders the streaming window")
    p.set_defaults(func=cmd_masks)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
