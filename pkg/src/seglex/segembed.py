"""Fixed-dimensional acoustic embeddings of variable-length feature segments.

Two variants: the default mean-pool (average the frames, normalize to the
unit sphere) and a flattened uniform subsample of n frames (n*D dims, not
normalized) kept around as an ablation.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSegmentError, ParameterError


@dataclass(frozen=True)
class SegmentEmbedding:
    utterance_id: str
    start: int
    end: int
    vector: np.ndarray

    @property
    def length_frames(self):
        return self.end - self.start


def _check_span(matrix, start, end):
    if not (0 <= start < end <= matrix.n_frames):
        raise ParameterError(
            f"{matrix.utterance_id}: segment [{start}, {end}) out of range for T={matrix.n_frames}"
        )


def embed_mean(matrix, start, end):
    """L2-normalized mean of frames [start, end)."""
    _check_span(matrix, start, end)
    mean = matrix.data[start:end].astype(np.float64).sum(axis=0) / (end - start)
    norm = np.linalg.norm(mean)
    if norm == 0.0:
        raise DegenerateSegmentError(
            f"{matrix.utterance_id}: segment [{start}, {end}) has zero mean vector"
        )
    return SegmentEmbedding(matrix.utterance_id, int(start), int(end), mean / norm)


def subsample_indices(start, end, n):
    """Frame indices for a uniform n-point subsample of [start, end).

    n >= 2 spaces points endpoint-inclusively over [start, end-1]; n == 1
    takes the midpoint. Positions round to the nearest index with .5 ties
    rounding down, so short segments repeat frames.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    if n == 1:
        pos = np.array([(start + end - 1) / 2.0])
    else:
        pos = np.linspace(start, end - 1, n)
    idx = np.ceil(pos - 0.5).astype(np.int64)
    return np.clip(idx, start, end - 1)


def embed_subsample_flatten(matrix, start, end, n=10):
    """Concatenation of n uniformly subsampled frames; dimensionality n*D."""
    _check_span(matrix, start, end)
    idx = subsample_indices(start, end, n)
    vec = matrix.data[idx].astype(np.float64).reshape(-1)
    return SegmentEmbedding(matrix.utterance_id, int(start), int(end), vec)


def embed_segmentation(matrix, segmentation, variant="mean", n_subsample=10):
    """One embedding per segment of a full-coverage segmentation, in order."""
    if variant == "mean":
        return [embed_mean(matrix, s, e) for s, e in segmentation.segments()]
    if variant == "subsample":
        return [
            embed_subsample_flatten(matrix, s, e, n_subsample)
            for s, e in segmentation.segments()
        ]
    raise ParameterError(f"unknown embedding variant {variant!r}")
