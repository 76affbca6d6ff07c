"""Segmenter -> wait-k translator composition, evaluation and reports."""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .bleu import BleuScore, corpus_bleu
from .decode import greedy_stream_decode
from .latency import LatencyReport, report_from_lengths
from .model import load_checkpoint
from .policy import ActionTrace, WaitKPolicy, compose_with_segmenter
from .resegment import mwer_resegment
from .segmenter import OracleSegmenter, load_segmenter, segment_stream


class ConfigError(ValueError):
    """Invalid or incompatible configuration (CLI exit code 2)."""


class DataError(ValueError):
    """Unusable input data (CLI exit code 3)."""


@dataclass
class PipelineConfig:
    k: int = 4
    gamma: str = "1"
    window: int = 0
    segmenter: str = "oracle"  # "oracle" or a segmenter checkpoint path
    checkpoint: str | None = None
    encoder_kind: str | None = None  # must match the checkpoint when given
    history: int | None = None  # defaults to the checkpoint's training history
    dal_scale: float = 1.0
    aggregation: str = "mean"
    bleu_smooth: bool = False
    seed: int = 0

    def policy(self) -> WaitKPolicy:
        return WaitKPolicy(self.k, Fraction(self.gamma))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_nested(cls, d: dict) -> "PipelineConfig":
        """Accept the grouped layout ``{policy, segmenter, model, metrics, seed}``."""
        flat: dict = {}
        pol = d.get("policy", {})
        flat.update({k: pol[k] for k in ("k", "gamma") if k in pol})
        seg = d.get("segmenter", {})
        if isinstance(seg, dict):
            if "window" in seg:
                flat["window"] = seg["window"]
            if "type" in seg or "path" in seg:
                flat["segmenter"] = seg.get("path") or seg.get("type")
        mod = d.get("model", {})
        for src, dst in (("checkpoint", "checkpoint"), ("encoder_kind", "encoder_kind"), ("history", "history")):
            if src in mod:
                flat[dst] = mod[src]
        met = d.get("metrics", {})
        for src, dst in (("dal_scale", "dal_scale"), ("aggregation", "aggregation"), ("bleu_smooth", "bleu_smooth")):
            if src in met:
                flat[dst] = met[src]
        if "seed" in d:
            flat["seed"] = d["seed"]
        if "gamma" in flat:
            flat["gamma"] = str(flat["gamma"])
        return cls.from_dict(flat)


@dataclass
class RunReport:
    bleu: BleuScore
    latency: LatencyReport
    trace: ActionTrace
    hypothesis: list[str]
    hypothesis_segments: list[list[str]]
    config: dict
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "bleu": self.bleu.to_dict(),
            "latency": self.latency.to_dict(),
            "trace": [e.to_dict() for e in self.trace.events],
            "hypothesis": self.hypothesis,
            "hypothesis_segments": self.hypothesis_segments,
            "config": self.config,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        from .policy import Event

        b = dict(d["bleu"])
        b["precisions"] = tuple(b["precisions"])
        return cls(
            BleuScore(**b),
            LatencyReport.from_dict(d["latency"]),
            ActionTrace(Event.from_dict(e) for e in d["trace"]),
            list(d["hypothesis"]),
            [list(s) for s in d["hypothesis_segments"]],
            d["config"],
            d.get("meta", {}),
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, RunReport) and self.to_dict() == other.to_dict()


def evaluate(
    hypothesis: Sequence[str],
    G: Sequence[int],
    src_sentences: Sequence[Sequence[str]],
    refs: Sequence[Sequence[str]],
    dal_scale: float = 1.0,
    aggregation: str = "mean",
    bleu_smooth: bool = False,
):
    """BLEU and stream latency of a hypothesis stream against references.

    The hypothesis is re-segmented with MWER against ``refs``; source sentence
    starts come from the reference source segmentation.
    """
    seg = mwer_resegment(list(hypothesis), refs)
    segments = seg.segments(list(hypothesis))
    bleu = corpus_bleu(segments, refs, smooth=bleu_smooth)
    src_lens = [len(s) for s in src_sentences]
    a = list(np.cumsum([1] + src_lens[:-1]))
    if not G:
        raise DataError("the translator produced no output")
    latency = report_from_lengths(
        list(G), a, list(seg.boundaries), src_lens, [len(s) for s in segments],
        None, dal_scale, aggregation,
    )
    return bleu, latency, segments


def _boundaries(config: PipelineConfig, stream: list[str], ref_ends: list[int], segmenter=None) -> list[int]:
    if config.segmenter == "oracle":
        return OracleSegmenter(ref_ends, config.window).segment_stream(stream)
    params, scfg = segmenter if segmenter is not None else load_segmenter(config.segmenter)
    if scfg.window != config.window:
        raise ConfigError(f"segmenter was trained with window {scfg.window}, config asks for {config.window}")
    return segment_stream(params, scfg, stream)


def run_pipeline(
    config: PipelineConfig,
    src_sentences: Sequence[Sequence[str]],
    refs: Sequence[Sequence[str]],
    model=None,
    segmenter=None,
) -> RunReport:
    """Segment, translate and evaluate one source stream.

    ``src_sentences`` is the reference source segmentation; the translator
    only ever sees the concatenated stream and the segmenter's boundaries.
    ``model``/``segmenter`` may be passed as ``(params, config)`` pairs instead
    of checkpoint paths.
    """
    started = time.time()
    if len(src_sentences) != len(refs):
        raise DataError(f"{len(src_sentences)} source sentences vs {len(refs)} references")
    stream = [t for s in src_sentences for t in s]
    if not stream:
        raise DataError("empty source stream")
    if model is None:
        if config.checkpoint is None:
            raise ConfigError("no model checkpoint configured")
        model = load_checkpoint(config.checkpoint)
    params, mcfg = model
    if config.encoder_kind is not None and config.encoder_kind != mcfg.encoder_kind:
        raise ConfigError(f"checkpoint encoder is {mcfg.encoder_kind}, config asks for {config.encoder_kind}")
    ref_ends = list(np.cumsum([len(s) for s in src_sentences]))
    bounds = _boundaries(config, stream, ref_ends, segmenter)
    result = greedy_stream_decode(params, mcfg, stream, bounds, config.policy(), config.history)
    joint = compose_with_segmenter(result.trace, config.window, len(stream))
    bleu, latency, segments = evaluate(
        result.target, joint.delays(), src_sentences, refs,
        config.dal_scale, config.aggregation, config.bleu_smooth,
    )
    snapshot = config.to_dict()
    snapshot["model_config"] = {k: v for k, v in mcfg.to_dict().items() if k != "vocab"}
    return RunReport(
        bleu, latency, joint, list(result.target), segments, snapshot,
        {"wall_clock_s": round(time.time() - started, 6), "boundaries": [int(b) for b in bounds]},
    )


def recompute(report: RunReport, src_sentences, refs) -> RunReport:
    """Rebuild every metric from the persisted trace and hypothesis."""
    cfg = report.config
    bleu, latency, segments = evaluate(
        report.hypothesis, report.trace.delays(), src_sentences, refs,
        cfg["dal_scale"], cfg["aggregation"], cfg["bleu_smooth"],
    )
    return replace(report, bleu=bleu, latency=latency, hypothesis_segments=segments)


# -- sweeps and report emission -------------------------------------------------

def _sweep_point(args):
    config, src_sentences, refs, model, segmenter = args
    return run_pipeline(config, src_sentences, refs, model, segmenter)


def sweep(
    base: PipelineConfig,
    ks: Sequence[int],
    windows: Sequence[int],
    src_sentences,
    refs,
    model=None,
    segmenters: dict | None = None,
    jobs: int = 1,
) -> list[RunReport]:
    """Run the k x w grid; results are ordered by (w, k) regardless of ``jobs``."""
    points = []
    for w in windows:
        for k in ks:
            seg = None if segmenters is None else segmenters.get(w)
            points.append((replace(base, k=k, window=w), src_sentences, refs, model, seg))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_point, points))
    return [_sweep_point(p) for p in points]


def report_csv(report: RunReport) -> str:
    buf = io.StringIO()
    buf.write(report.latency.to_csv())
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["BLEU", repr(100 * report.bleu.score)])
    return buf.getvalue()


def plot_data(reports: Sequence[RunReport]) -> dict:
    """Per-window (latency, BLEU) series ordered by k, for AL and DAL axes."""
    out: dict = {"AL": {}, "DAL": {}}
    rows = sorted(reports, key=lambda r: (r.config["window"], r.config["k"]))
    for r in rows:
        w = str(r.config["window"])
        for metric in ("AL", "DAL"):
            out[metric].setdefault(w, []).append(
                {"k": r.config["k"], "x": r.latency.aggregate[metric], "y": 100 * r.bleu.score})
    return out


def emit_report(report, fmt: str, dest: str | Path) -> Path:
    """Write ``report`` (or a list of reports for plot-data) to ``dest``."""
    dest = Path(dest)
    try:
        if fmt == "csv":
            dest.write_text(report_csv(report), encoding="utf-8")
        elif fmt == "json":
            dest.write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8")
        elif fmt == "plot-data":
            reports = report if isinstance(report, (list, tuple)) else [report]
            dest.write_text(json.dumps(plot_data(reports), indent=1, sort_keys=True) + "\n", encoding="utf-8")
        else:
            raise ConfigError(f"unknown report format {fmt!r}")
    except OSError as exc:
        raise DataError(f"cannot write {dest}: {exc}") from exc
    return dest


def load_report(path: str | Path) -> RunReport:
    return RunReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
