"""End-to-end orchestration of the two word-discovery systems.

run_promseg_clus: boundaries from prominence peaks on normalized features,
then a one-shot PCA + mean-pool + K-means lexicon. The boundary file is
written before clustering and never touched afterwards.

run_eskmeans_plus: candidate boundaries (prominence, a file, their union,
or the max-recall prominence setting), then the iterative re-segmentation
and clustering loop. Output boundaries are always a subset of the
candidates.

Boundary-detection features and lexicon features may come from different
directories (same filenames per utterance); only the former get
normalized.
"""

from __future__ import annotations

import configparser
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .cluster import kmeans_fit
from .corpusio import (
    ClassFile,
    read_alignments,
    read_boundary_file,
    read_class_file,
    read_feature_file,
    read_feature_header,
    read_manifest,
    write_boundary_file,
    write_class_file,
)
from .errors import ParameterError, ValidationError
from .eskmeans import CandidateSet, EsKmeansConfig
from .eskmeans import fit as eskmeans_fit
from .evalmetrics import bitrate, boundary_score, cluster_report, ned, token_score
from .preprocess import apply_normalizer, apply_pca, collect_pca_sample, fit_normalizer, fit_pca
from .promseg import PromSegConfig, Segmentation, prominence_segment
from .segembed import embed_segmentation

logger = logging.getLogger(__name__)

# Candidate settings for the max-recall regime (many more boundaries than
# needed, so the top-down method has a rich set to prune).
MAX_RECALL_WINDOW = 3
MAX_RECALL_THRESHOLD = 1e-4

CANDIDATE_SOURCES = ("prominence", "file", "max_recall_prominence", "union")


@dataclass
class PipelineConfig:
    manifest: Path
    out_dir: Path
    n_clusters: int
    boundary_feature_dir: Path | None = None
    lexicon_feature_dir: Path | None = None
    window_frames: int = 4
    prominence_threshold: float = 0.75
    cand_window_frames: int = 5
    cand_prominence_threshold: float = 0.3
    pca_dim: int = 250
    n_iterations: int = 5
    init_keep_prob: float = 0.5
    min_segment_frames: int = 5
    max_span_candidates: int = 4
    kmeans_max_iters: int = 10
    bottomup_kmeans_max_iters: int = 50
    embed_variant: str = "mean"
    n_subsample: int = 10
    weighted_centroids: bool = False
    candidate_source: str = "prominence"
    candidate_file: Path | None = None
    per_utterance_norm: bool = False
    seed: int = 0
    workers: int | None = None

    def __post_init__(self):
        if self.candidate_source not in CANDIDATE_SOURCES:
            raise ParameterError(
                f"candidate_source must be one of {CANDIDATE_SOURCES}, got {self.candidate_source!r}"
            )
        if self.n_clusters < 1:
            raise ParameterError("n_clusters must be >= 1")
        if self.pca_dim < 1:
            raise ParameterError("pca_dim must be >= 1")

    def eskmeans_config(self):
        return EsKmeansConfig(
            n_clusters=self.n_clusters,
            n_iterations=self.n_iterations,
            init_keep_prob=self.init_keep_prob,
            min_segment_frames=self.min_segment_frames,
            max_span_candidates=self.max_span_candidates,
            seed=self.seed,
            kmeans_max_iters=self.kmeans_max_iters,
            embed_variant=self.embed_variant,
            n_subsample=self.n_subsample,
            weighted_centroids=self.weighted_centroids,
        )


# config-file section/key -> PipelineConfig field
_CONFIG_KEYS = {
    ("io", "manifest"): "manifest",
    ("io", "out_dir"): "out_dir",
    ("io", "boundary_feature_dir"): "boundary_feature_dir",
    ("io", "lexicon_feature_dir"): "lexicon_feature_dir",
    ("io", "candidate_file"): "candidate_file",
    ("promseg", "window_frames"): "window_frames",
    ("promseg", "prominence_threshold"): "prominence_threshold",
    ("promseg", "per_utterance_norm"): "per_utterance_norm",
    ("candidates", "source"): "candidate_source",
    ("candidates", "window_frames"): "cand_window_frames",
    ("candidates", "prominence_threshold"): "cand_prominence_threshold",
    ("lexicon", "pca_dim"): "pca_dim",
    ("lexicon", "n_clusters"): "n_clusters",
    ("lexicon", "kmeans_max_iters"): "bottomup_kmeans_max_iters",
    ("lexicon", "embed_variant"): "embed_variant",
    ("lexicon", "n_subsample"): "n_subsample",
    ("eskmeans", "n_iterations"): "n_iterations",
    ("eskmeans", "init_keep_prob"): "init_keep_prob",
    ("eskmeans", "min_segment_frames"): "min_segment_frames",
    ("eskmeans", "max_span_candidates"): "max_span_candidates",
    ("eskmeans", "kmeans_max_iters"): "kmeans_max_iters",
    ("eskmeans", "weighted_centroids"): "weighted_centroids",
    ("run", "seed"): "seed",
    ("run", "workers"): "workers",
}

_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _coerce(field_name, raw):
    kind = _FIELD_TYPES[field_name]
    if kind in ("int", "int | None"):
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "bool":
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValidationError(f"cannot parse boolean value {raw!r}")
    if kind in ("Path", "Path | None"):
        return Path(raw)
    return raw


def load_config_file(path, overrides=None):
    """Read a key=value config file with sections into PipelineConfig kwargs.

    Unknown sections or keys are rejected so typos fail loudly. `overrides`
    (a field->value dict, e.g. from CLI flags) wins over file values.
    """
    parser = configparser.ConfigParser()
    with open(path, "r", encoding="utf-8") as fh:
        parser.read_file(fh)
    kwargs = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            field_name = _CONFIG_KEYS.get((section, key))
            if field_name is None:
                raise ValidationError(f"{path}: unknown config key [{section}] {key}")
            kwargs[field_name] = _coerce(field_name, raw)
    if overrides:
        kwargs.update(overrides)
    return kwargs


def _effective_workers(workers):
    """None means available parallelism; results never depend on the count."""
    if workers is None:
        return os.cpu_count() or 1
    return max(1, workers)


def _pmap(func, items, workers):
    """Order-preserving map over utterances, threaded when workers > 1."""
    n = _effective_workers(workers)
    if n > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]


class _PhaseTimer:
    """Collects wall-clock per pipeline phase for the run log."""

    def __init__(self):
        self.phases = []

    def time(self, name):
        timer = self

        class _Ctx:
            def __enter__(self):
                self.t0 = time.perf_counter()
                return self

            def __exit__(self, *exc):
                seconds = time.perf_counter() - self.t0
                timer.phases.append((name, seconds))
                logger.info("phase=%s seconds=%.3f", name, seconds)
                return False

        return _Ctx()

    def lines(self):
        return [f"phase={name} seconds={seconds:.3f}" for name, seconds in self.phases]


def _load_features(manifest, feature_dir):
    out = []
    missing = []
    for ent in manifest.entries:
        path = manifest.resolve_feature_path(ent, feature_dir)
        if not path.exists():
            missing.append(str(path))
            continue
        out.append(read_feature_file(path, utterance_id=ent.utterance_id))
    if missing:
        raise ValidationError("missing feature files: " + ", ".join(missing))
    return out


def _normalized_boundary_features(cfg, manifest):
    feats = _load_features(manifest, cfg.boundary_feature_dir)
    if cfg.per_utterance_norm:
        return [apply_normalizer(fit_normalizer([m]), m) for m in feats]
    norm = fit_normalizer(feats)
    return [apply_normalizer(norm, m) for m in feats]


def _projected_lexicon_features(cfg, manifest, timer):
    # Lexicon features are deliberately NOT normalized.
    with timer.time("load_lexicon_features"):
        feats = _load_features(manifest, cfg.lexicon_feature_dir)
    with timer.time("pca"):
        dim = feats[0].dim
        n_components = min(cfg.pca_dim, dim)
        if n_components < cfg.pca_dim:
            logger.info(
                "pca_dim %d clamped to feature dimensionality %d", cfg.pca_dim, dim
            )
        sample = collect_pca_sample(feats, seed=cfg.seed)
        pca = fit_pca(sample, n_components, seed=cfg.seed)
        projected = [apply_pca(pca, m) for m in feats]
    return projected, pca


def _class_file_from_segments(segmentations, assignments, rates):
    classes = {}
    for seg, assign in zip(segmentations, assignments):
        rate = rates[seg.utterance_id]
        for (start, end), cid in zip(seg.segments(), assign):
            classes.setdefault(int(cid), []).append(
                (seg.utterance_id, start / rate, end / rate)
            )
    return ClassFile(classes)


def run_promseg_clus(cfg):
    """Bottom-up system: fixed prominence boundaries, then a clustered lexicon."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = read_manifest(cfg.manifest)
    timer = _PhaseTimer()

    with timer.time("boundary_detection"):
        feats = _normalized_boundary_features(cfg, manifest)
        ps_cfg = PromSegConfig(cfg.window_frames, cfg.prominence_threshold)
        segmentations = _pmap(
            lambda m: prominence_segment(m, ps_cfg), feats, cfg.workers
        )
        rates = {m.utterance_id: m.frame_rate_hz for m in feats}
    boundary_path = out_dir / "boundaries.txt"
    write_boundary_file(
        {s.utterance_id: list(s.boundaries) for s in segmentations}, boundary_path
    )

    projected, _ = _projected_lexicon_features(cfg, manifest, timer)
    with timer.time("embed"):
        per_utt = _pmap(
            lambda ms: embed_segmentation(ms[0], ms[1], cfg.embed_variant, cfg.n_subsample),
            list(zip(projected, segmentations)),
            cfg.workers,
        )
        embeds = [e for segs in per_utt for e in segs]
        counts = [len(segs) for segs in per_utt]
        vectors = np.stack([e.vector for e in embeds])
    with timer.time("kmeans"):
        model = kmeans_fit(
            vectors, cfg.n_clusters, seed=cfg.seed, max_iters=cfg.bottomup_kmeans_max_iters
        )
    assignments = []
    pos = 0
    for n in counts:
        assignments.append(model.assignments[pos : pos + n])
        pos += n
    classes = _class_file_from_segments(segmentations, assignments, rates)
    class_path = out_dir / "classes.txt"
    write_class_file(classes, class_path)
    (out_dir / "run_promseg_clus.log").write_text(
        "\n".join(timer.lines() + [f"inertia={model.inertia:.6f}"]) + "\n", encoding="utf-8"
    )
    return {
        "boundary_file": boundary_path,
        "class_file": class_path,
        "segmentations": segmentations,
        "classes": classes,
        "model": model,
    }


def resolve_candidates(cfg, manifest):
    """Candidate boundary sets per utterance for the top-down system."""
    source = cfg.candidate_source
    prom_based = source in ("prominence", "max_recall_prominence", "union")
    cands_from_prom = {}
    rates = {}
    if prom_based:
        feats = _normalized_boundary_features(cfg, manifest)
        if source == "max_recall_prominence":
            ps_cfg = PromSegConfig(MAX_RECALL_WINDOW, MAX_RECALL_THRESHOLD)
        else:
            ps_cfg = PromSegConfig(cfg.cand_window_frames, cfg.cand_prominence_threshold)
        for m in feats:
            seg = prominence_segment(m, ps_cfg)
            cands_from_prom[m.utterance_id] = list(seg.boundaries)
            rates[m.utterance_id] = m.frame_rate_hz
    cands_from_file = {}
    if source in ("file", "union"):
        if cfg.candidate_file is None:
            raise ValidationError(f"candidate_source={source!r} requires candidate_file")
        cands_from_file = read_boundary_file(cfg.candidate_file)

    out = []
    for ent in manifest.entries:
        utt = ent.utterance_id
        if source == "file":
            if utt not in cands_from_file:
                raise ValidationError(f"candidate file has no entry for utterance {utt!r}")
            bounds = cands_from_file[utt]
        elif source == "union":
            if utt not in cands_from_file:
                raise ValidationError(f"candidate file has no entry for utterance {utt!r}")
            merged = set(cands_from_file[utt]) | set(cands_from_prom[utt])
            bounds = sorted(merged)
        else:
            bounds = cands_from_prom[utt]
        out.append(CandidateSet(utt, tuple(bounds), bounds[-1]))
    return out


def run_eskmeans_plus(cfg, record_segmentations=False):
    """Top-down system: candidate boundaries refined against the cluster model."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = read_manifest(cfg.manifest)
    timer = _PhaseTimer()

    with timer.time("candidates"):
        candidates = resolve_candidates(cfg, manifest)
    projected, _ = _projected_lexicon_features(cfg, manifest, timer)
    rates = {m.utterance_id: m.frame_rate_hz for m in projected}
    for m, c in zip(projected, candidates):
        if m.n_frames != c.n_frames:
            raise ValidationError(
                f"{m.utterance_id}: candidate set ends at {c.n_frames} but features have "
                f"{m.n_frames} frames"
            )
    corpus = list(zip(projected, candidates))

    with timer.time("eskmeans"):
        result = eskmeans_fit(
            corpus, cfg.eskmeans_config(), workers=_effective_workers(cfg.workers),
            record_segmentations=record_segmentations,
        )

    boundary_path = out_dir / "boundaries.txt"
    write_boundary_file(
        {s.utterance_id: list(s.boundaries) for s in result.segmentations}, boundary_path
    )
    classes = _class_file_from_segments(result.segmentations, result.assignments, rates)
    class_path = out_dir / "classes.txt"
    write_class_file(classes, class_path)
    log_path = out_dir / "iterations.log"
    log_lines = [
        f"iter={rec['iter']} phase={rec['phase']} cost={rec['cost']:.6f} inertia={rec['inertia']:.6f}"
        for rec in result.history
    ]
    log_path.write_text("\n".join(log_lines + timer.lines()) + "\n", encoding="utf-8")
    return {
        "boundary_file": boundary_path,
        "class_file": class_path,
        "iteration_log": log_path,
        "segmentations": result.segmentations,
        "classes": classes,
        "candidates": candidates,
        "result": result,
    }


def run_eval(
    manifest_path,
    boundary_file=None,
    class_file=None,
    alignments=None,
    phone_alignments=None,
    tolerance_ms=20.0,
    tier="word",
    pooled_ned=True,
):
    """Score hypothesis files against reference alignments.

    Returns a flat {metric: value} dict; boundary/token metrics need a
    boundary file plus alignments of the requested tier (word by default,
    syllable/phone for the dual evaluation), NED needs a class file plus
    phone alignments, bitrate needs only the class file.
    """
    manifest = read_manifest(manifest_path)
    tolerance_s = tolerance_ms / 1000.0
    report = {}

    ref_tracks = None
    if alignments is not None:
        ref_tracks = {t.utterance_id: t for t in read_alignments(alignments, tier)}

    if boundary_file is not None:
        if ref_tracks is None:
            raise ValidationError("boundary scoring requires reference alignments")
        bounds = read_boundary_file(boundary_file)
        segmentations = {}
        rates = {}
        for ent in manifest.entries:
            utt = ent.utterance_id
            if utt not in bounds:
                raise ValidationError(f"boundary file has no entry for utterance {utt!r}")
            blist = bounds[utt]
            segmentations[utt] = Segmentation(utt, tuple(blist), blist[-1])
            _, _, rate = read_feature_header(manifest.resolve_feature_path(ent))
            rates[utt] = rate
        bscore = boundary_score(segmentations, ref_tracks, tolerance_s, rates)
        tscore = token_score(segmentations, ref_tracks, tolerance_s, rates)
        report.update(
            boundary_precision=bscore.precision,
            boundary_recall=bscore.recall,
            boundary_f1=bscore.f1,
            over_segmentation=bscore.over_segmentation,
            r_value=bscore.r_value,
            token_precision=tscore.precision,
            token_recall=tscore.recall,
            token_f1=tscore.f1,
        )

    if class_file is not None:
        classes = read_class_file(class_file, manifest)
        total_duration = sum(ent.duration_s for ent in manifest.entries)
        report["bitrate_bits_per_s"] = bitrate(classes, total_duration)
        if phone_alignments is not None:
            phones = {
                t.utterance_id: t for t in read_alignments(phone_alignments, "phone")
            }
            ned_value, n_pairs = ned(classes, phones, pooled=pooled_ned)
            report["ned"] = ned_value
            report["ned_pairs"] = n_pairs
    return report


def run_report(manifest_path, class_file, word_alignments, speaker_file=None, top_n=5):
    """Cluster-content report over the largest clusters."""
    manifest = read_manifest(manifest_path)
    classes = read_class_file(class_file, manifest)
    words = {t.utterance_id: t for t in read_alignments(word_alignments, "word")}
    speakers = None
    if speaker_file is not None:
        speakers = {}
        with open(speaker_file, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                utt, spk = line.split()
                speakers[utt] = spk
    return cluster_report(classes, words, speakers=speakers, top_n=top_n)
