"""Deterministic synthetic corpora for desk-scale verification.

Utterances are concatenations of prototype "words" (random unit vectors)
rendered as repeated frames plus Gaussian noise; the generator records the
exact word alignments, the true class file, and candidate boundary sets
(true boundaries plus random distractor positions).
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpusio import (
    AlignmentTrack,
    ClassFile,
    CorpusManifest,
    FeatureMatrix,
    ManifestEntry,
    write_alignments,
    write_boundary_file,
    write_class_file,
    write_feature_file,
    write_manifest,
)
from .errors import ParameterError
from .eskmeans import CandidateSet


@dataclass(frozen=True)
class SynthSpec:
    vocab_size: int = 20
    dim: int = 16
    frames_per_word: tuple = (8, 8)  # inclusive range; an int fixes the length
    words_per_utterance: tuple = (3, 6)  # inclusive range
    n_utterances: int = 100
    noise_sigma: float = 0.0
    distractor_rate: float = 0.0
    seed: int = 0
    frame_rate_hz: float = 50.0
    allow_adjacent_repeats: bool = True

    def __post_init__(self):
        if self.vocab_size < 1 or self.dim < 1 or self.n_utterances < 1:
            raise ParameterError("vocab_size, dim, and n_utterances must be >= 1")
        if self.noise_sigma < 0 or self.distractor_rate < 0:
            raise ParameterError("noise_sigma and distractor_rate must be >= 0")
        fpw = self.frames_per_word
        if isinstance(fpw, int):
            fpw = (fpw, fpw)
        fpw = (int(fpw[0]), int(fpw[1]))
        if fpw[0] < 1 or fpw[1] < fpw[0]:
            raise ParameterError("frames_per_word must be a positive int or (lo, hi) range")
        object.__setattr__(self, "frames_per_word", fpw)
        wpu = (int(self.words_per_utterance[0]), int(self.words_per_utterance[1]))
        if wpu[0] < 1 or wpu[1] < wpu[0]:
            raise ParameterError("words_per_utterance must be a (lo, hi) range with lo >= 1")
        object.__setattr__(self, "words_per_utterance", wpu)
        if not self.allow_adjacent_repeats and self.vocab_size < 2:
            raise ParameterError("forbidding adjacent repeats requires vocab_size >= 2")


@dataclass
class SynthCorpus:
    features: list
    word_tracks: list
    phone_tracks: list
    candidates: list
    classes: ClassFile
    prototypes: np.ndarray


def _word_sequence(rng, spec, n_words):
    if spec.allow_adjacent_repeats:
        return rng.integers(0, spec.vocab_size, size=n_words)
    seq = np.empty(n_words, dtype=np.int64)
    seq[0] = rng.integers(0, spec.vocab_size)
    for i in range(1, n_words):
        # Draw from vocab minus the previous word, keeping the draw uniform.
        draw = rng.integers(0, spec.vocab_size - 1)
        seq[i] = draw + (draw >= seq[i - 1])
    return seq


def generate(spec):
    """Build a corpus exactly recording its own ground truth; deterministic per seed."""
    proto_rng = np.random.default_rng([spec.seed, 0])
    prototypes = proto_rng.standard_normal((spec.vocab_size, spec.dim))
    prototypes /= np.linalg.norm(prototypes, axis=1, keepdims=True)

    features = []
    word_tracks = []
    phone_tracks = []
    candidate_sets = []
    class_tokens = {cid: [] for cid in range(spec.vocab_size)}
    rate = spec.frame_rate_hz
    f_lo, f_hi = spec.frames_per_word
    w_lo, w_hi = spec.words_per_utterance

    for u in range(spec.n_utterances):
        rng = np.random.default_rng([spec.seed, 1, u])
        utt = f"utt{u:04d}"
        n_words = int(rng.integers(w_lo, w_hi + 1))
        words = _word_sequence(rng, spec, n_words)
        lengths = (
            np.full(n_words, f_lo, dtype=np.int64)
            if f_lo == f_hi
            else rng.integers(f_lo, f_hi + 1, size=n_words)
        )
        blocks = [np.repeat(prototypes[w][None, :], n, axis=0) for w, n in zip(words, lengths)]
        frames = np.concatenate(blocks, axis=0)
        if spec.noise_sigma > 0:
            frames = frames + spec.noise_sigma * rng.standard_normal(frames.shape)
        T = frames.shape[0]
        features.append(FeatureMatrix(utt, frames.astype(np.float32), rate))

        ends = np.cumsum(lengths)
        starts = np.concatenate(([0], ends[:-1]))
        entries = [
            (s / rate, e / rate, f"w{w}") for s, e, w in zip(starts, ends, words)
        ]
        word_tracks.append(AlignmentTrack(utt, "word", entries))
        phone_tracks.append(AlignmentTrack(utt, "phone", entries))
        for (s, e, _), w in zip(entries, words):
            class_tokens[int(w)].append((utt, s, e))

        interior = set(int(b) for b in ends[:-1])
        n_distractors = int(round(spec.distractor_rate * len(interior)))
        eligible = np.array(sorted(set(range(1, T)) - interior), dtype=np.int64)
        if n_distractors > 0 and eligible.size > 0:
            picked = rng.choice(eligible, size=min(n_distractors, eligible.size), replace=False)
            interior |= set(int(p) for p in picked)
        candidate_sets.append(CandidateSet(utt, tuple(sorted(interior)) + (T,), T))

    return SynthCorpus(
        features=features,
        word_tracks=word_tracks,
        phone_tracks=phone_tracks,
        candidates=candidate_sets,
        classes=ClassFile(class_tokens),
        prototypes=prototypes,
    )


def write_corpus(corpus, out_dir):
    """Write a generated corpus to disk in the standard layout.

    Returns the manifest path. Layout: features/<utt>.wdf, manifest.txt,
    words.txt, phones.txt, candidates.txt, classes_true.txt.
    """
    out_dir = Path(out_dir)
    feat_dir = out_dir / "features"
    feat_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for m in corpus.features:
        rel = f"features/{m.utterance_id}.wdf"
        write_feature_file(m, out_dir / rel)
        entries.append(ManifestEntry(m.utterance_id, rel, m.n_frames / m.frame_rate_hz))
    write_alignments(corpus.word_tracks, out_dir / "words.txt")
    write_alignments(corpus.phone_tracks, out_dir / "phones.txt")
    write_boundary_file(
        {c.utterance_id: list(c.candidates) for c in corpus.candidates},
        out_dir / "candidates.txt",
    )
    write_class_file(corpus.classes, out_dir / "classes_true.txt")
    manifest = CorpusManifest(
        entries,
        alignment_paths={"word": "words.txt", "phone": "phones.txt"},
        root=out_dir,
    )
    write_manifest(manifest, out_dir / "manifest.txt")
    return out_dir / "manifest.txt"
