"""Full-coverage unsupervised word discovery on precomputed speech features.

Two systems share one toolbox: a bottom-up pipeline that fixes word
boundaries at prominent peaks of the adjacent-frame dissimilarity curve
and then clusters the segments into a lexicon, and a top-down pipeline
that iteratively re-segments utterances over candidate boundaries against
the current cluster model. A full segmentation/lexicon evaluation suite
and a synthetic-corpus generator round out the package.
"""

from .cluster import ClusterModel, assign, kmeans_fit, kmeans_step
from .corpusio import (
    AlignmentTrack,
    ClassFile,
    CorpusManifest,
    FeatureMatrix,
    read_alignments,
    read_class_file,
    read_feature_file,
    read_manifest,
    write_class_file,
    write_feature_file,
)
from .errors import (
    DegenerateFrameError,
    DegenerateSegmentError,
    FormatError,
    InsufficientDataError,
    ParameterError,
    SeglexError,
    ShapeError,
    TruncationError,
    UndefinedMetricError,
    ValidationError,
)
from .eskmeans import CandidateSet, EsKmeansConfig, random_init_segmentation, score, viterbi_segment
from .eskmeans import fit as eskmeans_fit
from .evalmetrics import (
    BoundaryScore,
    LexiconScore,
    TokenScore,
    bitrate,
    boundary_score,
    cluster_report,
    edit_distance,
    lexicon_score,
    ned,
    token_score,
)
from .preprocess import (
    Normalizer,
    PcaModel,
    apply_normalizer,
    apply_pca,
    fit_normalizer,
    fit_pca,
)
from .promseg import (
    DissimilarityCurve,
    PromSegConfig,
    Segmentation,
    detect_prominent_peaks,
    dissimilarity_curve,
    prominence_segment,
    smooth,
)
from .segembed import SegmentEmbedding, embed_mean, embed_segmentation, embed_subsample_flatten
from .synthcorpus import SynthSpec, generate

__version__ = "0.1.0"
