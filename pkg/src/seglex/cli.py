"""Command-line entry point.

Subcommands: synth, promseg, cluster, eskmeans, eval, report. Exit code 0
on success, 2 on validation/parameter/format errors, 3 on I/O errors.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .errors import SeglexError
from .synthcorpus import SynthSpec, generate, write_corpus

logger = logging.getLogger("seglex")


def _add_common_io(parser, need_k=False):
    parser.add_argument("--manifest", type=Path, required=True, help="corpus manifest file")
    parser.add_argument("--out-dir", type=Path, required=True, help="output directory")
    parser.add_argument(
        "--boundary-feature-dir", type=Path, default=None,
        help="directory overriding feature paths for boundary detection",
    )
    parser.add_argument(
        "--lexicon-feature-dir", type=Path, default=None,
        help="directory overriding feature paths for lexicon embeddings",
    )
    parser.add_argument("--pca-dim", type=int, default=None)
    if need_k:
        parser.add_argument("--k", type=int, default=None, help="number of clusters")


def _pipeline_config(args, need_k=False, extra=None):
    overrides = {"manifest": args.manifest, "out_dir": args.out_dir, "seed": args.seed}
    if args.workers is not None:
        overrides["workers"] = args.workers
    for flag, field in [
        ("boundary_feature_dir", "boundary_feature_dir"),
        ("lexicon_feature_dir", "lexicon_feature_dir"),
        ("pca_dim", "pca_dim"),
    ]:
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field] = value
    if need_k and getattr(args, "k", None) is not None:
        overrides["n_clusters"] = args.k
    if extra:
        overrides.update({k: v for k, v in extra.items() if v is not None})
    if args.config is not None:
        kwargs = pipeline.load_config_file(args.config, overrides)
    else:
        kwargs = overrides
    if "n_clusters" not in kwargs:
        raise SeglexError("number of clusters required (--k or [lexicon] n_clusters)")
    return pipeline.PipelineConfig(**kwargs)


def _print_report(report, json_path=None):
    for key, value in report.items():
        if isinstance(value, float):
            print(f"{key}={value:.4f}")
        else:
            print(f"{key}={value}")
    if json_path is not None:
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")


def cmd_synth(args):
    spec = SynthSpec(
        vocab_size=args.vocab_size,
        dim=args.dim,
        frames_per_word=tuple(args.frames_per_word),
        words_per_utterance=tuple(args.words_per_utterance),
        n_utterances=args.n_utterances,
        noise_sigma=args.noise_sigma,
        distractor_rate=args.distractor_rate,
        seed=args.seed,
        frame_rate_hz=args.frame_rate,
        allow_adjacent_repeats=not args.no_adjacent_repeats,
    )
    manifest = write_corpus(generate(spec), args.out_dir)
    print(f"manifest={manifest}")
    return 0


def cmd_promseg(args):
    cfg = _pipeline_config(
        args, need_k=True,
        extra={
            "window_frames": args.window,
            "prominence_threshold": args.threshold,
            "per_utterance_norm": True if args.per_utterance_norm else None,
        },
    )
    out = pipeline.run_promseg_clus(cfg)
    print(f"boundary_file={out['boundary_file']}")
    print(f"class_file={out['class_file']}")
    return 0


def cmd_cluster(args):
    # Cluster an existing boundary file without re-detecting boundaries.
    cfg = _pipeline_config(args, need_k=True)
    from .corpusio import read_boundary_file, read_manifest, write_class_file
    from .promseg import Segmentation

    manifest = read_manifest(cfg.manifest)
    bounds = read_boundary_file(args.boundaries)
    segmentations = []
    for ent in manifest.entries:
        if ent.utterance_id not in bounds:
            raise SeglexError(f"boundary file has no entry for {ent.utterance_id!r}")
        blist = bounds[ent.utterance_id]
        segmentations.append(Segmentation(ent.utterance_id, tuple(blist), blist[-1]))

    import numpy as np

    from .cluster import kmeans_fit
    from .segembed import embed_segmentation

    timer = pipeline._PhaseTimer()
    projected, _ = pipeline._projected_lexicon_features(cfg, manifest, timer)
    rates = {m.utterance_id: m.frame_rate_hz for m in projected}
    embeds, counts = [], []
    for m, seg in zip(projected, segmentations):
        segs = embed_segmentation(m, seg, cfg.embed_variant, cfg.n_subsample)
        embeds.extend(segs)
        counts.append(len(segs))
    model = kmeans_fit(
        np.stack([e.vector for e in embeds]), cfg.n_clusters,
        seed=cfg.seed, max_iters=cfg.bottomup_kmeans_max_iters,
    )
    assignments, pos = [], 0
    for n in counts:
        assignments.append(model.assignments[pos : pos + n])
        pos += n
    classes = pipeline._class_file_from_segments(segmentations, assignments, rates)
    out_path = Path(cfg.out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    class_path = out_path / "classes.txt"
    write_class_file(classes, class_path)
    print(f"class_file={class_path}")
    return 0


def cmd_eskmeans(args):
    cfg = _pipeline_config(
        args, need_k=True,
        extra={
            "candidate_source": args.candidates,
            "candidate_file": args.candidate_file,
            "n_iterations": args.iterations,
        },
    )
    out = pipeline.run_eskmeans_plus(cfg)
    print(f"boundary_file={out['boundary_file']}")
    print(f"class_file={out['class_file']}")
    print(f"iteration_log={out['iteration_log']}")
    return 0


def cmd_eval(args):
    report = pipeline.run_eval(
        args.manifest,
        boundary_file=args.boundaries,
        class_file=args.classes,
        alignments=args.alignments,
        phone_alignments=args.phones,
        tolerance_ms=args.tolerance_ms,
        tier=args.tier,
        pooled_ned=not args.per_cluster_ned,
    )
    _print_report(report, args.json)
    return 0


def cmd_report(args):
    entries = pipeline.run_report(
        args.manifest, args.classes, args.alignments,
        speaker_file=args.speakers, top_n=args.top_n,
    )
    for entry in entries:
        head = f"cluster={entry['cluster_id']} tokens={entry['n_tokens']}"
        if "n_speakers" in entry:
            head += f" speakers={entry['n_speakers']}"
        head += f" mean_duration_s={entry['mean_duration_s']:.2f}"
        print(head)
        for label, count in entry["labels"].items():
            print(f"  {label} {count}")
    if args.json is not None:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(entries, fh, indent=2)
            fh.write("\n")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="seglex",
        description="Full-coverage unsupervised word discovery on speech features",
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--config", type=Path, default=None, help="key=value config file")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus with known truth")
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--vocab-size", type=int, default=20)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--frames-per-word", type=int, nargs=2, default=(8, 8), metavar=("LO", "HI"))
    p.add_argument("--words-per-utterance", type=int, nargs=2, default=(3, 6), metavar=("LO", "HI"))
    p.add_argument("--n-utterances", type=int, default=100)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--distractor-rate", type=float, default=0.0)
    p.add_argument("--frame-rate", type=float, default=50.0)
    p.add_argument("--no-adjacent-repeats", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("promseg", help="bottom-up system: prominence boundaries + lexicon")
    _add_common_io(p, need_k=True)
    p.add_argument("--window", type=int, default=None, help="smoothing window (frames)")
    p.add_argument("--threshold", type=float, default=None, help="prominence threshold")
    p.add_argument("--per-utterance-norm", action="store_true")
    p.set_defaults(func=cmd_promseg)

    p = sub.add_parser("cluster", help="cluster segments from an existing boundary file")
    _add_common_io(p, need_k=True)
    p.add_argument("--boundaries", type=Path, required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("eskmeans", help="top-down system: iterative segment + cluster")
    _add_common_io(p, need_k=True)
    p.add_argument(
        "--candidates", choices=pipeline.CANDIDATE_SOURCES, default="prominence",
        help="candidate boundary source",
    )
    p.add_argument("--candidate-file", type=Path, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.set_defaults(func=cmd_eskmeans)

    p = sub.add_parser("eval", help="score hypothesis files against alignments")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--boundaries", type=Path, default=None)
    p.add_argument("--classes", type=Path, default=None)
    p.add_argument("--alignments", type=Path, default=None, help="reference alignment file")
    p.add_argument("--phones", type=Path, default=None, help="phone alignment file for NED")
    p.add_argument("--tolerance-ms", type=float, default=20.0)
    p.add_argument("--tier", choices=("word", "syllable", "phone"), default="word")
    p.add_argument("--per-cluster-ned", action="store_true",
                   help="average NED per cluster instead of pooling pairs")
    p.add_argument("--json", type=Path, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="content report of the largest clusters")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--classes", type=Path, required=True)
    p.add_argument("--alignments", type=Path, required=True)
    p.add_argument("--speakers", type=Path, default=None, help="utterance->speaker map file")
    p.add_argument("--top-n", type=int, default=5)
    p.add_argument("--json", type=Path, default=None)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except SeglexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
