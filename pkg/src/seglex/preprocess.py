"""Feature conditioning: mean-variance normalization and PCA projection.

Normalization statistics are pooled over every frame they are fitted on
(population 1/N variance). Boundary-detection features get normalized;
lexicon features do not - that wiring lives in the pipeline.
"""

from dataclasses import dataclass

import numpy as np

from .corpusio import FeatureMatrix, read_feature_file, write_feature_file
from .errors import FormatError, InsufficientDataError, ParameterError, ShapeError

STD_FLOOR = 1e-8

# Serialization tags stored in the frame_rate header slot of model files.
_NORM_TAG = 1.0
_PCA_TAG = 2.0


@dataclass(frozen=True)
class Normalizer:
    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # (M, D), orthonormal rows, descending variance
    explained_variance: np.ndarray

    @property
    def n_components(self):
        return self.components.shape[0]


def fit_normalizer(frame_blocks):
    """Fit per-dimension mean/std over a stream of (T, D) frame blocks.

    A single pass of partial sums, usable on corpora that do not fit in
    memory. Standard deviations are floored at STD_FLOOR.
    """
    total = None
    total_sq = None
    count = 0
    for block in frame_blocks:
        arr = np.asarray(block.data if isinstance(block, FeatureMatrix) else block, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeError("normalizer expects 2-D frame blocks")
        if total is None:
            total = arr.sum(axis=0)
            total_sq = (arr * arr).sum(axis=0)
        else:
            if arr.shape[1] != total.shape[0]:
                raise ShapeError(
                    f"inconsistent feature dimension: {arr.shape[1]} vs {total.shape[0]}"
                )
            total += arr.sum(axis=0)
            total_sq += (arr * arr).sum(axis=0)
        count += arr.shape[0]
    if count < 2:
        raise InsufficientDataError(f"need at least 2 frames to fit a normalizer, got {count}")
    mean = total / count
    var = np.maximum(total_sq / count - mean * mean, 0.0)
    std = np.maximum(np.sqrt(var), STD_FLOOR)
    return Normalizer(mean=mean, std=std)


def apply_normalizer(norm, matrix):
    if matrix.dim != norm.mean.shape[0]:
        raise ShapeError(f"normalizer dimension {norm.mean.shape[0]} vs features {matrix.dim}")
    out = (matrix.data.astype(np.float64) - norm.mean) / norm.std
    return FeatureMatrix(matrix.utterance_id, out.astype(np.float32), matrix.frame_rate_hz)


def fit_pca(sample, n_components, seed=0, max_frames=100_000):
    """Fit the top principal directions of a frame sample.

    The solver is a deterministic SVD of the centered sample; `seed` only
    enters when the sample exceeds `max_frames` and rows are subsampled.
    Component signs are fixed so each row's largest-magnitude entry is
    positive.
    """
    X = np.asarray(sample, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError("PCA sample must be a 2-D array of frames")
    if n_components < 1 or n_components > X.shape[1]:
        raise ParameterError(
            f"n_components must be in [1, {X.shape[1]}], got {n_components}"
        )
    if X.shape[0] > max_frames:
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(X.shape[0], size=max_frames, replace=False))
        X = X[idx]
    if X.shape[0] < n_components:
        raise InsufficientDataError(
            f"need at least {n_components} sample frames, got {X.shape[0]}"
        )
    mean = X.mean(axis=0)
    _, svals, vt = np.linalg.svd(X - mean, full_matrices=False)
    components = vt[:n_components]
    signs = np.sign(components[np.arange(n_components), np.argmax(np.abs(components), axis=1)])
    components = components * signs[:, None]
    explained = (svals[:n_components] ** 2) / X.shape[0]
    return PcaModel(mean=mean, components=components, explained_variance=explained)


def apply_pca(pca, matrix):
    if matrix.dim != pca.components.shape[1]:
        raise ShapeError(
            f"PCA expects dimension {pca.components.shape[1]}, features have {matrix.dim}"
        )
    out = (matrix.data.astype(np.float64) - pca.mean) @ pca.components.T
    return FeatureMatrix(matrix.utterance_id, out.astype(np.float32), matrix.frame_rate_hz)


def project_vectors(pca, vectors):
    """Project raw (N, D) float vectors without the FeatureMatrix wrapper."""
    return (np.asarray(vectors, dtype=np.float64) - pca.mean) @ pca.components.T


def collect_pca_sample(matrices, max_frames=100_000, seed=0):
    """Pool frames from many feature matrices, uniformly subsampled corpus-wide."""
    pooled = np.concatenate([m.data.astype(np.float64) for m in matrices], axis=0)
    if pooled.shape[0] > max_frames:
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(pooled.shape[0], size=max_frames, replace=False))
        pooled = pooled[idx]
    return pooled


def save_normalizer(norm, path):
    rows = np.stack([norm.mean, norm.std]).astype(np.float32)
    write_feature_file(FeatureMatrix("normalizer", rows, _NORM_TAG), path)


def load_normalizer(path):
    m = read_feature_file(path)
    if m.frame_rate_hz != _NORM_TAG or m.n_frames != 2:
        raise FormatError(f"{path}: not a serialized normalizer")
    data = m.data.astype(np.float64)
    return Normalizer(mean=data[0], std=data[1])


def save_pca(pca, path):
    # Row 0: mean; row 1: explained variance (zero padded); rows 2..: components.
    D = pca.components.shape[1]
    ev_row = np.zeros(D)
    ev_row[: pca.n_components] = pca.explained_variance
    rows = np.vstack([pca.mean, ev_row, pca.components]).astype(np.float32)
    write_feature_file(FeatureMatrix("pca", rows, _PCA_TAG), path)


def load_pca(path):
    m = read_feature_file(path)
    if m.frame_rate_hz != _PCA_TAG or m.n_frames < 3:
        raise FormatError(f"{path}: not a serialized PCA model")
    data = m.data.astype(np.float64)
    n_comp = data.shape[0] - 2
    return PcaModel(
        mean=data[0], components=data[2:], explained_variance=data[1, :n_comp]
    )
