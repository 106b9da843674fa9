"""Audio-to-feature extraction front end for the word-discovery toolkit."""

from .extract import ExtractionJob, ExtractionSummary, extract, load_audio
from .mfcc import mfcc_features
from .wdf import read_feature_file, write_feature_file

__version__ = "0.1.0"
