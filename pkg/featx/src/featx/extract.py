"""Batch extraction over a directory of audio files.

One feature file per utterance in the shared binary format, plus a
manifest whose header comment records the extraction settings. Features
are written raw: no normalization and no dimensionality reduction happen
here, so one frozen extraction serves every downstream conditioning
choice.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from . import mfcc as mfcc_mod
from .wdf import write_feature_file

logger = logging.getLogger(__name__)

AUDIO_SUFFIXES = (".wav",)


@dataclass
class ExtractionJob:
    audio_dir: Path
    output_dir: Path
    encoder_name: str | None = None  # None selects MFCC mode
    layer: int = 9
    frame_rate_hz: float = 50.0  # encoder stride; MFCC mode is configurable

    def __post_init__(self):
        if self.layer < 0:
            raise ValueError("layer must be >= 0")
        if self.frame_rate_hz <= 0:
            raise ValueError("frame_rate_hz must be positive")


@dataclass
class ExtractionSummary:
    manifest_path: Path
    n_written: int
    skipped: list


def load_audio(path):
    """Mono float64 signal in [-1, 1] plus its sample rate."""
    sample_rate, data = wavfile.read(path)
    data = np.asarray(data)
    if data.ndim == 2:
        data = data.mean(axis=1)
    if np.issubdtype(data.dtype, np.integer):
        data = data.astype(np.float64) / float(np.iinfo(data.dtype).max)
    else:
        data = data.astype(np.float64)
    return data, int(sample_rate)


def extract(job):
    """Run the job; unreadable files are skipped with a log entry and
    reported in the summary rather than aborting the batch."""
    audio_dir = Path(job.audio_dir)
    out_dir = Path(job.output_dir)
    feat_dir = out_dir / "features"
    feat_dir.mkdir(parents=True, exist_ok=True)

    files = sorted(
        p for p in audio_dir.iterdir() if p.suffix.lower() in AUDIO_SUFFIXES
    )
    if not files:
        raise FileNotFoundError(f"no audio files under {audio_dir}")

    model = None
    if job.encoder_name is not None:
        from .encoder import ENCODER_FRAME_RATE, load_encoder

        model = load_encoder(job.encoder_name)
        frame_rate = ENCODER_FRAME_RATE
        setting = f"encoder {job.encoder_name} layer {job.layer}"
    else:
        frame_rate = job.frame_rate_hz
        setting = f"mfcc n_mfcc={mfcc_mod.N_MFCC} n_mels={mfcc_mod.N_MELS}"

    entries = []
    skipped = []
    for path in files:
        utt = path.stem
        try:
            signal, sample_rate = load_audio(path)
            if model is not None:
                from .encoder import encode_layer

                features = encode_layer(model, signal, sample_rate, job.layer)
            else:
                features = mfcc_mod.mfcc_features(signal, sample_rate, frame_rate)
            rel = f"features/{utt}.wdf"
            write_feature_file(out_dir / rel, features, frame_rate)
            entries.append((utt, rel, len(signal) / sample_rate))
        except Exception as exc:
            logger.warning("skipping %s: %s", path, exc)
            skipped.append((str(path), str(exc)))

    manifest_path = out_dir / "manifest.txt"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        fh.write(f"# extraction {setting} frame_rate={frame_rate}\n")
        for utt, rel, duration in entries:
            fh.write(f"{utt} {rel} {duration:.3f}\n")
    return ExtractionSummary(manifest_path, len(entries), skipped)
