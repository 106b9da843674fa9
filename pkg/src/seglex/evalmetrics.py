"""Segmentation and lexicon evaluation.

Boundary precision/recall/F1 with a time tolerance, over-segmentation and
R-value, token F1 (both token edges must match), normalized edit distance
over within-cluster phone transcriptions, unigram bitrate of the cluster
encoding, and a per-cluster content report.

Utterance-initial and utterance-final boundaries are excluded from
boundary scoring on both sides; counts are pooled over the corpus before
ratios are taken.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .errors import ParameterError, UndefinedMetricError, ValidationError


@dataclass(frozen=True)
class BoundaryScore:
    precision: float
    recall: float
    f1: float
    over_segmentation: float
    r_value: float
    n_hyp: int
    n_ref: int
    n_hits: int


@dataclass(frozen=True)
class TokenScore:
    precision: float
    recall: float
    f1: float
    n_hit_tokens: int
    n_hyp_tokens: int
    n_ref_tokens: int


@dataclass(frozen=True)
class LexiconScore:
    ned: float
    n_pairs: int
    bitrate_bits_per_s: float


def _f1(precision, recall):
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def reference_boundaries(track):
    """Interior boundary times of an alignment track: every interval edge
    except the utterance start and end."""
    edges = sorted({t for ent in track.entries for t in (ent.start_s, ent.end_s)})
    return edges[1:-1]


def hyp_boundary_times(segmentation, frame_rate_hz):
    """Interior hypothesis boundaries in seconds (the final boundary T is dropped)."""
    return [b / frame_rate_hz for b in segmentation.boundaries[:-1]]


def _greedy_match(hyp_times, ref_times, tolerance_s):
    """One-to-one greedy matching in time order.

    Each hypothesis boundary takes the nearest unmatched reference within
    tolerance; equidistant candidates resolve to the earlier reference.
    """
    used = [False] * len(ref_times)
    hits = 0
    for h in hyp_times:
        best = -1
        best_gap = None
        for r, t in enumerate(ref_times):
            if used[r]:
                continue
            gap = abs(t - h)
            if gap <= tolerance_s and (best_gap is None or gap < best_gap):
                best, best_gap = r, gap
        if best >= 0:
            used[best] = True
            hits += 1
    return hits


def r_value(recall_pct, over_segmentation_pct):
    """Distance-to-ideal score combining recall with over-segmentation.

    100 at the ideal operating point of full recall and zero
    over-segmentation; falls off with the distance from that point.
    """
    r = recall_pct / 100.0
    os = over_segmentation_pct / 100.0
    r1 = math.sqrt((1.0 - r) ** 2 + os**2)
    r2 = (-os + r - 1.0) / math.sqrt(2.0)
    return 100.0 * (1.0 - (abs(r1) + abs(r2)) / 2.0)


def boundary_score(segmentations, ref_tracks, tolerance_s, frame_rate_hz):
    """Corpus-level boundary precision/recall/F1, over-segmentation, R-value.

    segmentations: {utterance_id: Segmentation}; ref_tracks:
    {utterance_id: AlignmentTrack}. frame_rate_hz may be a scalar or a
    {utterance_id: rate} mapping.
    """
    if tolerance_s < 0:
        raise ParameterError("tolerance_s must be >= 0")
    n_hyp = n_ref = n_hits = 0
    for utt, seg in segmentations.items():
        if utt not in ref_tracks:
            raise ValidationError(f"no reference alignment for utterance {utt!r}")
        rate = frame_rate_hz[utt] if isinstance(frame_rate_hz, dict) else frame_rate_hz
        hyp = hyp_boundary_times(seg, rate)
        ref = reference_boundaries(ref_tracks[utt])
        n_hyp += len(hyp)
        n_ref += len(ref)
        n_hits += _greedy_match(hyp, ref, tolerance_s)
    if n_ref == 0:
        raise UndefinedMetricError("reference contains no interior boundaries")
    precision = 100.0 * n_hits / n_hyp if n_hyp else 0.0
    recall = 100.0 * n_hits / n_ref
    os = 100.0 * (n_hyp / n_ref - 1.0)
    return BoundaryScore(
        precision=precision,
        recall=recall,
        f1=_f1(precision, recall),
        over_segmentation=os,
        r_value=r_value(recall, os),
        n_hyp=n_hyp,
        n_ref=n_ref,
        n_hits=n_hits,
    )


def token_score(segmentations, ref_tracks, tolerance_s, frame_rate_hz):
    """Token-level scoring: a hypothesis token is a hit only when both of
    its boundaries match one reference token's start and end within
    tolerance; each reference token is credited at most once."""
    if tolerance_s < 0:
        raise ParameterError("tolerance_s must be >= 0")
    n_hyp = n_ref = n_hits = 0
    for utt, seg in segmentations.items():
        if utt not in ref_tracks:
            raise ValidationError(f"no reference alignment for utterance {utt!r}")
        rate = frame_rate_hz[utt] if isinstance(frame_rate_hz, dict) else frame_rate_hz
        ref_tokens = [(ent.start_s, ent.end_s) for ent in ref_tracks[utt].entries]
        used = [False] * len(ref_tokens)
        n_ref += len(ref_tokens)
        for start, end in seg.segments():
            n_hyp += 1
            a, b = start / rate, end / rate
            for r, (rs, re) in enumerate(ref_tokens):
                if used[r]:
                    continue
                if abs(rs - a) <= tolerance_s and abs(re - b) <= tolerance_s:
                    used[r] = True
                    n_hits += 1
                    break
    if n_ref == 0:
        raise UndefinedMetricError("reference contains no tokens")
    precision = 100.0 * n_hits / n_hyp if n_hyp else 0.0
    recall = 100.0 * n_hits / n_ref
    return TokenScore(
        precision=precision,
        recall=recall,
        f1=_f1(precision, recall),
        n_hit_tokens=n_hits,
        n_hyp_tokens=n_hyp,
        n_ref_tokens=n_ref,
    )


def edit_distance(a, b):
    """Levenshtein distance between two symbol sequences."""
    table = {}
    enc_a = np.array([table.setdefault(s, len(table)) for s in a], dtype=np.int64)
    enc_b = np.array([table.setdefault(s, len(table)) for s in b], dtype=np.int64)
    return int(_accel.levenshtein(enc_a, enc_b))


def transcribe_token(phone_track, onset_s, offset_s):
    """Phone symbols overlapping the token by >= half the phone or >= 30 ms.

    Multi-symbol phone labels (space separated) contribute each symbol.
    """
    out = []
    for ent in phone_track.entries:
        overlap = min(ent.end_s, offset_s) - max(ent.start_s, onset_s)
        if overlap <= 0:
            continue
        if overlap >= 0.5 * (ent.end_s - ent.start_s) or overlap >= 0.030:
            out.extend(ent.label.split())
    return tuple(out)


def ned(classes, phone_tracks, pooled=True):
    """Normalized edit distance over same-cluster token pairs.

    Token transcriptions come from the phone tier via transcribe_token.
    Returns (ned_percent, n_pairs); pairs pool across clusters unless
    pooled=False, which averages per-cluster means instead. A pair of two
    empty transcriptions contributes 0.
    """
    symbol_ids = {}

    def encode(seq):
        return np.array([symbol_ids.setdefault(s, len(symbol_ids)) for s in seq], dtype=np.int64)

    cluster_sums = []
    n_pairs = 0
    for cid in sorted(classes.classes):
        tokens = classes.classes[cid]
        if len(tokens) < 2:
            continue
        transcripts = []
        for utt, onset, offset in tokens:
            if utt not in phone_tracks:
                raise ValidationError(f"no phone alignment for utterance {utt!r}")
            transcripts.append(encode(transcribe_token(phone_tracks[utt], onset, offset)))
        total = 0.0
        pairs = 0
        for i in range(len(transcripts)):
            for j in range(i + 1, len(transcripts)):
                longest = max(len(transcripts[i]), len(transcripts[j]))
                if longest == 0:
                    pairs += 1
                    continue
                total += _accel.levenshtein(transcripts[i], transcripts[j]) / longest
                pairs += 1
        cluster_sums.append((total, pairs))
        n_pairs += pairs
    if n_pairs == 0:
        raise UndefinedMetricError("no same-cluster token pairs to compare")
    if pooled:
        value = sum(t for t, _ in cluster_sums) / n_pairs
    else:
        means = [t / p for t, p in cluster_sums if p > 0]
        value = sum(means) / len(means)
    return 100.0 * value, n_pairs


def lexicon_score(classes, phone_tracks, total_duration_s, pooled=True):
    """NED and bitrate of one discovered lexicon, bundled."""
    ned_value, n_pairs = ned(classes, phone_tracks, pooled=pooled)
    return LexiconScore(
        ned=ned_value,
        n_pairs=n_pairs,
        bitrate_bits_per_s=bitrate(classes, total_duration_s),
    )


def bitrate(classes, total_duration_s):
    """Bits per second of the token stream under its unigram cluster entropy."""
    if total_duration_s <= 0:
        raise ParameterError("total_duration_s must be positive")
    counts = np.array([len(t) for t in classes.classes.values() if len(t) > 0], dtype=np.float64)
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    entropy = float(-(p * np.log2(p)).sum())
    return (n / total_duration_s) * entropy


def cluster_report(classes, word_tracks, speakers=None, top_n=5):
    """Content summary of the top_n largest clusters.

    Per cluster: token count, unique speaker count (when a speaker map is
    supplied), mean token duration, and a histogram of each token's
    maximal-overlap ground-truth word label (ties to the earlier word;
    tokens overlapping no word are skipped in the histogram).
    """
    sizes = sorted(
        ((len(t), cid) for cid, t in classes.classes.items() if len(t) > 0),
        key=lambda x: (-x[0], x[1]),
    )
    report = []
    for size, cid in sizes[:top_n]:
        tokens = classes.classes[cid]
        durations = [offset - onset for _, onset, offset in tokens]
        labels = {}
        spk = set()
        for utt, onset, offset in tokens:
            if speakers is not None and utt in speakers:
                spk.add(speakers[utt])
            track = word_tracks.get(utt)
            if track is None:
                raise ValidationError(f"no word alignment for utterance {utt!r}")
            best_label = None
            best_overlap = 0.0
            for ent in track.entries:
                overlap = min(ent.end_s, offset) - max(ent.start_s, onset)
                if overlap > best_overlap:
                    best_overlap = overlap
                    best_label = ent.label
            if best_label is not None:
                labels[best_label] = labels.get(best_label, 0) + 1
        entry = {
            "cluster_id": cid,
            "n_tokens": size,
            "mean_duration_s": float(np.mean(durations)),
            "labels": dict(sorted(labels.items(), key=lambda kv: (-kv[1], kv[0]))),
        }
        if speakers is not None:
            entry["n_speakers"] = len(spk)
        report.append(entry)
    return report
