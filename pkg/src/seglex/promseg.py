"""Bottom-up word boundary detection.

Adjacent-frame cosine dissimilarity, centered moving-average smoothing,
and peak picking by topographic prominence. Boundaries always include the
final frame count T, so segments tile [0, T) exactly.
"""

from dataclasses import dataclass

import numpy as np

from . import _accel
from .errors import DegenerateFrameError, ParameterError, ValidationError


@dataclass(frozen=True)
class DissimilarityCurve:
    """Cosine distances between successive frames; length T - 1."""

    utterance_id: str
    values: np.ndarray


@dataclass(frozen=True)
class Segmentation:
    """Ordered boundary frame indices partitioning [0, T); always ends at T."""

    utterance_id: str
    boundaries: tuple
    n_frames: int

    def __post_init__(self):
        bounds = tuple(int(b) for b in self.boundaries)
        if not bounds:
            raise ValidationError(f"{self.utterance_id}: segmentation needs at least one boundary")
        if bounds[0] <= 0 or any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
            raise ValidationError(
                f"{self.utterance_id}: boundaries must be strictly increasing within (0, T]"
            )
        if bounds[-1] != self.n_frames:
            raise ValidationError(
                f"{self.utterance_id}: last boundary {bounds[-1]} != total frames {self.n_frames}"
            )
        object.__setattr__(self, "boundaries", bounds)

    def segments(self):
        """(start, end) frame spans, half-open, covering [0, T)."""
        starts = (0,) + self.boundaries[:-1]
        return list(zip(starts, self.boundaries))


@dataclass(frozen=True)
class PromSegConfig:
    window_frames: int = 4
    prominence_threshold: float = 0.75

    def __post_init__(self):
        if self.window_frames < 1:
            raise ParameterError("window_frames must be >= 1")
        if self.prominence_threshold < 0:
            raise ParameterError("prominence_threshold must be >= 0")


def dissimilarity_curve(matrix):
    """Cosine distance between each pair of neighboring frames.

    values[i] = 1 - cos(frame i, frame i+1), clipped into [0, 2] against
    rounding spill. Zero-norm frames make the cosine undefined and raise.
    """
    if matrix.n_frames < 2:
        raise ValidationError(f"{matrix.utterance_id}: need T >= 2 frames for a dissimilarity curve")
    X = matrix.data.astype(np.float64)
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0.0):
        t = int(np.argmax(norms == 0.0))
        raise DegenerateFrameError(f"{matrix.utterance_id}: zero-norm frame at index {t}")
    dots = np.einsum("ij,ij->i", X[:-1], X[1:])
    values = 1.0 - dots / (norms[:-1] * norms[1:])
    return DissimilarityCurve(matrix.utterance_id, np.clip(values, 0.0, 2.0))


def smooth(curve, window_frames):
    """Centered moving average; the window shrinks near the edges.

    An even window takes (w-1)//2 samples to the left and w//2 to the
    right of the center.
    """
    if window_frames < 1:
        raise ParameterError("window_frames must be >= 1")
    v = curve.values
    if window_frames == 1:
        return DissimilarityCurve(curve.utterance_id, v.copy())
    n = v.shape[0]
    left = (window_frames - 1) // 2
    right = window_frames // 2
    pos = np.arange(n)
    lo = np.maximum(pos - left, 0)
    hi = np.minimum(pos + right, n - 1)
    csum = np.concatenate(([0.0], np.cumsum(v)))
    out = (csum[hi + 1] - csum[lo]) / (hi - lo + 1)
    return DissimilarityCurve(curve.utterance_id, out)


def detect_prominent_peaks(curve, prominence_threshold):
    """Indices of peaks with prominence >= threshold (see _accel for the rule)."""
    if prominence_threshold < 0:
        raise ParameterError("prominence_threshold must be >= 0")
    values = np.ascontiguousarray(curve.values, dtype=np.float64)
    return [int(i) for i in _accel.prominent_peak_indices(values, float(prominence_threshold))]


def prominence_segment(matrix, config):
    """Dissimilarity -> smoothing -> prominent peaks -> boundaries.

    Expects features already conditioned for boundary detection (the
    pipeline normalizes them; this function does not check). A peak at
    curve index i splits between frames i and i+1, so it maps to boundary
    i + 1; the final frame count T is always appended.
    """
    T = matrix.n_frames
    if T == 1:
        return Segmentation(matrix.utterance_id, (1,), 1)
    curve = smooth(dissimilarity_curve(matrix), config.window_frames)
    peaks = detect_prominent_peaks(curve, config.prominence_threshold)
    bounds = [p + 1 for p in peaks]
    if not bounds or bounds[-1] != T:
        bounds.append(T)
    return Segmentation(matrix.utterance_id, tuple(bounds), T)
