"""featx command line: extract features from a directory of audio files."""

import argparse
import logging
import sys
from pathlib import Path

from .extract import ExtractionJob, extract


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="featx",
        description="Extract MFCC or pretrained-encoder features into binary feature files",
    )
    parser.add_argument("--audio-dir", type=Path, required=True)
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    mode = parser.add_mutually_exclusive_group(required=True)
    mode.add_argument("--encoder", type=str, default=None, help="encoder checkpoint name or path")
    mode.add_argument("--mfcc", action="store_true", help="MFCC mode (13 + deltas + delta-deltas)")
    parser.add_argument("--layer", type=int, default=9, help="encoder layer to extract")
    parser.add_argument(
        "--frame-rate", type=float, default=100.0,
        help="MFCC frame rate in Hz (the encoder stride fixes 50 Hz)",
    )
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    job = ExtractionJob(
        audio_dir=args.audio_dir,
        output_dir=args.out,
        encoder_name=args.encoder,
        layer=args.layer,
        frame_rate_hz=args.frame_rate,
    )
    try:
        summary = extract(job)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"manifest={summary.manifest_path}")
    print(f"written={summary.n_written} skipped={len(summary.skipped)}")
    return 1 if summary.skipped else 0


if __name__ == "__main__":
    sys.exit(main())
