"""Top-down word discovery: iterative re-segmentation against a K-means lexicon.

Each round re-segments every utterance by dynamic programming over its
candidate boundary positions, minimizing the summed segment score
len(z) * ||z - nearest centroid||^2, and only then refits K-means on the
new segments (warm-started). Boundaries can only be dropped from the
candidate set, never invented.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .cluster import assign, kmeans_fit, nearest_centroids
from .errors import ParameterError, ValidationError
from .promseg import Segmentation
from .segembed import embed_mean, embed_subsample_flatten

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CandidateSet:
    """Frame positions a segmentation may choose boundaries from; ends at T."""

    utterance_id: str
    candidates: tuple
    n_frames: int

    def __post_init__(self):
        cands = tuple(int(c) for c in self.candidates)
        if not cands:
            raise ValidationError(f"{self.utterance_id}: candidate set cannot be empty")
        if cands[0] <= 0 or any(c2 <= c1 for c1, c2 in zip(cands, cands[1:])):
            raise ValidationError(
                f"{self.utterance_id}: candidates must be strictly increasing within (0, T]"
            )
        if cands[-1] != self.n_frames:
            raise ValidationError(
                f"{self.utterance_id}: last candidate {cands[-1]} != total frames {self.n_frames}"
            )
        object.__setattr__(self, "candidates", cands)


@dataclass(frozen=True)
class EsKmeansConfig:
    n_clusters: int
    n_iterations: int = 5
    init_keep_prob: float = 0.5
    min_segment_frames: int = 5
    max_span_candidates: int = 4
    seed: int = 0
    kmeans_max_iters: int = 10
    embed_variant: str = "mean"
    n_subsample: int = 10
    weighted_centroids: bool = False

    def __post_init__(self):
        if self.n_clusters < 1:
            raise ParameterError("n_clusters must be >= 1")
        if self.n_iterations < 1:
            raise ParameterError("n_iterations must be >= 1")
        if not 0 < self.init_keep_prob <= 1:
            raise ParameterError("init_keep_prob must be in (0, 1]")
        if self.min_segment_frames < 1:
            raise ParameterError("min_segment_frames must be >= 1")
        if self.max_span_candidates < 1:
            raise ParameterError("max_span_candidates must be >= 1")
        if self.embed_variant not in ("mean", "subsample"):
            raise ParameterError(f"unknown embedding variant {self.embed_variant!r}")


@dataclass
class FitResult:
    segmentations: list
    model: object
    assignments: list  # per utterance, cluster index per segment
    history: list = field(default_factory=list)  # {iter, phase, cost, inertia} records


def _embed(matrix, start, end, config):
    if config.embed_variant == "mean":
        return embed_mean(matrix, start, end)
    return embed_subsample_flatten(matrix, start, end, config.n_subsample)


def score(embedding, model):
    """Segment score: frames spanned times squared distance to the nearest centroid."""
    _, sqdist = assign(model, embedding.vector)
    return embedding.length_frames * sqdist


def random_init_segmentation(cands, keep_prob, seed):
    """Keep each interior candidate independently with probability keep_prob.

    The final boundary T always stays. Deterministic given the seed.
    """
    rng = np.random.default_rng(seed)
    interior = np.asarray(cands.candidates[:-1], dtype=np.int64)
    kept = interior[rng.random(interior.shape[0]) < keep_prob]
    bounds = tuple(kept) + (cands.candidates[-1],)
    return Segmentation(cands.utterance_id, bounds, cands.n_frames)


def feasible_pairs(cands, min_segment_frames, max_span_candidates):
    """(start, end) frame pairs a DP segment may span under both constraints."""
    positions = (0,) + cands.candidates
    pairs = []
    for i in range(len(positions) - 1):
        for j in range(i + 1, min(i + max_span_candidates, len(positions) - 1) + 1):
            if positions[j] - positions[i] >= min_segment_frames:
                pairs.append((positions[i], positions[j]))
    return pairs


def precompute_segment_embeddings(matrix, cands, config):
    """Embeddings of every feasible candidate pair, reused across iterations."""
    return {
        (s, e): _embed(matrix, s, e, config)
        for s, e in feasible_pairs(cands, config.min_segment_frames, config.max_span_candidates)
    }


def _pair_costs(matrix, cands, model, config, cache, min_frames):
    """Cost matrix over candidate positions; np.inf marks infeasible pairs."""
    positions = (0,) + cands.candidates
    n_pos = len(positions)
    pairs = []
    embeds = []
    for i in range(n_pos - 1):
        for j in range(i + 1, min(i + config.max_span_candidates, n_pos - 1) + 1):
            s, e = positions[i], positions[j]
            if e - s < min_frames:
                continue
            emb = cache.get((s, e)) if cache is not None else None
            if emb is None:
                emb = _embed(matrix, s, e, config)
            pairs.append((i, j))
            embeds.append(emb)
    cost = np.full((n_pos, n_pos), np.inf)
    if pairs:
        vectors = np.stack([emb.vector for emb in embeds])
        lengths = np.array([emb.length_frames for emb in embeds], dtype=np.float64)
        _, dists = nearest_centroids(vectors, model.centroids)
        values = lengths * dists
        for (i, j), v in zip(pairs, values):
            cost[i, j] = v
    return positions, cost


def _backtrack(positions, back, n_pos):
    path = []
    j = n_pos - 1
    while j > 0:
        path.append(positions[j])
        j = back[j]
    return tuple(reversed(path))


def viterbi_segment(matrix, cands, model, config, cache=None):
    """Minimum-cost segmentation over the candidate positions.

    Segments must span at least min_segment_frames and at most
    max_span_candidates consecutive candidate gaps. If the constraints
    admit no path the minimum duration relaxes to one frame for this
    utterance (logged); the single-segment fallback only guards against
    degenerate inputs. Returns (Segmentation, total cost).
    """
    positions, cost = _pair_costs(matrix, cands, model, config, cache, config.min_segment_frames)
    n_pos = len(positions)
    gamma, _, back = _accel.viterbi_forward(cost, config.max_span_candidates)
    if not np.isfinite(gamma[n_pos - 1]):
        logger.warning(
            "%s: no segmentation satisfies min duration %d; relaxing to 1 frame",
            cands.utterance_id,
            config.min_segment_frames,
        )
        positions, cost = _pair_costs(matrix, cands, model, config, cache, 1)
        gamma, _, back = _accel.viterbi_forward(cost, config.max_span_candidates)
    if not np.isfinite(gamma[n_pos - 1]):
        logger.warning("%s: falling back to a single segment", cands.utterance_id)
        emb = _embed(matrix, 0, cands.n_frames, config)
        seg = Segmentation(cands.utterance_id, (cands.n_frames,), cands.n_frames)
        return seg, score(emb, model)
    bounds = _backtrack(positions, back, n_pos)
    seg = Segmentation(cands.utterance_id, bounds, cands.n_frames)
    return seg, float(gamma[n_pos - 1])


def segmentation_cost(matrix, segmentation, model, config, cache=None):
    """Total score of an existing segmentation under fixed centroids."""
    total = 0.0
    for s, e in segmentation.segments():
        emb = cache.get((s, e)) if cache is not None else None
        if emb is None:
            emb = _embed(matrix, s, e, config)
        total += score(emb, model)
    return total


def _collect_embeddings(corpus, segmentations, caches, config):
    """Embeddings of all current segments, flattened in corpus order."""
    embeds = []
    counts = []
    for (matrix, _), seg, cache in zip(corpus, segmentations, caches):
        n = 0
        for s, e in seg.segments():
            emb = cache.get((s, e))
            if emb is None:
                emb = _embed(matrix, s, e, config)
            embeds.append(emb)
            n += 1
        counts.append(n)
    return embeds, counts


def _model_cost(embeds, model):
    """Total segment score of the embeddings under a model (batched)."""
    vectors = np.stack([e.vector for e in embeds])
    lengths = np.array([e.length_frames for e in embeds], dtype=np.float64)
    _, dists = nearest_centroids(vectors, model.centroids)
    return float((lengths * dists).sum())


def _split_assignments(assignments, counts):
    out = []
    pos = 0
    for n in counts:
        out.append(np.asarray(assignments[pos : pos + n]))
        pos += n
    return out


def fit(corpus, config, workers=None, record_segmentations=False):
    """Run the full batched segment-and-cluster loop.

    corpus is a list of (FeatureMatrix, CandidateSet) pairs; features are
    assumed already projected for lexicon embedding. Per-utterance
    initialization seeds derive from (config.seed, utterance index), so
    results are reproducible bit-for-bit regardless of worker count.
    """
    if not corpus:
        raise ValidationError("corpus is empty")
    for matrix, cands in corpus:
        if matrix.utterance_id != cands.utterance_id:
            raise ValidationError(
                f"corpus mismatch: {matrix.utterance_id} paired with {cands.utterance_id}"
            )

    def run(func, items):
        if workers is not None and workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(func, items))
        return [func(item) for item in items]

    caches = run(
        lambda mc: precompute_segment_embeddings(mc[0], mc[1], config), corpus
    )
    segmentations = [
        random_init_segmentation(cands, config.init_keep_prob, seed=[config.seed, u])
        for u, (_, cands) in enumerate(corpus)
    ]

    embeds, counts = _collect_embeddings(corpus, segmentations, caches, config)
    if not embeds:
        raise ValidationError("corpus produced no embeddable segments")
    if config.n_clusters > len(embeds):
        raise ValidationError(
            f"n_clusters={config.n_clusters} exceeds {len(embeds)} initial segments"
        )
    weights = None
    if config.weighted_centroids:
        weights = np.array([e.length_frames for e in embeds], dtype=np.float64)
    vectors = np.stack([e.vector for e in embeds])
    model = kmeans_fit(
        vectors,
        config.n_clusters,
        seed=config.seed,
        max_iters=config.kmeans_max_iters,
        weights=weights,
    )
    history = [
        {
            "iter": 0,
            "phase": "cluster",
            "cost": _model_cost(embeds, model),
            "inertia": model.inertia,
        }
    ]
    if record_segmentations:
        history[-1]["segmentations"] = list(segmentations)

    for it in range(1, config.n_iterations + 1):
        results = run(
            lambda mcc: viterbi_segment(mcc[0], mcc[1], model, config, mcc[2]),
            [(m, c, cache) for (m, c), cache in zip(corpus, caches)],
        )
        segmentations = [seg for seg, _ in results]
        seg_cost = float(sum(cost for _, cost in results))
        history.append(
            {"iter": it, "phase": "seg", "cost": seg_cost, "inertia": model.inertia}
        )
        if record_segmentations:
            history[-1]["segmentations"] = list(segmentations)

        embeds, counts = _collect_embeddings(corpus, segmentations, caches, config)
        vectors = np.stack([e.vector for e in embeds])
        weights = None
        if config.weighted_centroids:
            weights = np.array([e.length_frames for e in embeds], dtype=np.float64)
        model = kmeans_fit(
            vectors,
            config.n_clusters,
            seed=config.seed,
            max_iters=config.kmeans_max_iters,
            init_centroids=model.centroids,
            weights=weights,
        )
        history.append(
            {
                "iter": it,
                "phase": "cluster",
                "cost": _model_cost(embeds, model),
                "inertia": model.inertia,
            }
        )

    per_utt_assignments = _split_assignments(model.assignments, counts)
    return FitResult(
        segmentations=segmentations,
        model=model,
        assignments=per_utt_assignments,
        history=history,
    )
