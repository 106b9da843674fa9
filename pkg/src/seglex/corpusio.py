"""Readers and writers for all on-disk corpus artifacts.

Formats
-------
Feature file (binary): magic ``WDF1`` | T uint32 LE | D uint32 LE |
    frame_rate_hz float32 LE | T*D float32 LE payload, frame-major.
Alignment file: one interval per line, ``<utt_id> <start_s> <end_s> <label>``;
    for the phone tier the label is the rest of the line and may contain
    spaces, for other tiers it is a single token.
Class file: repeated ``Class <int>`` blocks of ``<utt_id> <onset_s> <offset_s>``
    token lines, blank line between blocks; times at 2 decimals.
Manifest: ``<utt_id> <feature_path> <duration_s>`` lines; ``#`` comments are
    skipped, except ``# alignment <tier> <path>`` which registers an
    alignment file for a tier.
Boundary file: ``<utt_id> <b1> ... <T>``, strictly increasing frame indices.
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import FormatError, TruncationError, ValidationError

FEATURE_MAGIC = b"WDF1"
_HEADER = struct.Struct("<4sIIf")

ALIGNMENT_TIERS = ("word", "phone", "syllable")

# Serialized times carry 2 decimals, so intervals closer than this are
# treated as overlapping.
_TIME_EPS = 1e-9


@dataclass(frozen=True)
class FeatureMatrix:
    """Per-frame speech features for one utterance, stored as float32."""

    utterance_id: str
    data: np.ndarray
    frame_rate_hz: float

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(
                f"{self.utterance_id}: feature matrix must be 2-D with T,D >= 1, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValidationError(f"{self.utterance_id}: feature matrix contains non-finite values")
        if not self.frame_rate_hz > 0:
            raise ValidationError(f"{self.utterance_id}: frame_rate_hz must be positive")
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "frame_rate_hz", float(self.frame_rate_hz))

    @property
    def n_frames(self):
        return self.data.shape[0]

    @property
    def dim(self):
        return self.data.shape[1]


class AlignmentEntry(NamedTuple):
    start_s: float
    end_s: float
    label: str


@dataclass
class AlignmentTrack:
    """Time-stamped labeled intervals of one tier for one utterance."""

    utterance_id: str
    tier: str
    entries: list

    def __post_init__(self):
        if self.tier not in ALIGNMENT_TIERS:
            raise ValidationError(f"unknown alignment tier {self.tier!r}")
        entries = sorted(
            (AlignmentEntry(float(s), float(e), str(l)) for s, e, l in self.entries),
            key=lambda a: (a.start_s, a.end_s),
        )
        for ent in entries:
            if not ent.start_s < ent.end_s:
                raise ValidationError(
                    f"{self.utterance_id}: interval ({ent.start_s}, {ent.end_s}) has end <= start"
                )
        for prev, nxt in zip(entries, entries[1:]):
            if nxt.start_s < prev.end_s - _TIME_EPS:
                raise ValidationError(
                    f"{self.utterance_id}: overlapping intervals "
                    f"({prev.start_s}, {prev.end_s}) and ({nxt.start_s}, {nxt.end_s})"
                )
        self.entries = entries


class ManifestEntry(NamedTuple):
    utterance_id: str
    feature_path: str
    duration_s: float


@dataclass
class CorpusManifest:
    """The utterance list of a corpus plus optional per-tier alignment files."""

    entries: list
    alignment_paths: dict = field(default_factory=dict)
    root: Path | None = None

    def __post_init__(self):
        seen = set()
        for ent in self.entries:
            if ent.utterance_id in seen:
                raise ValidationError(f"duplicate utterance_id {ent.utterance_id!r} in manifest")
            if not ent.duration_s > 0:
                raise ValidationError(f"{ent.utterance_id}: duration_s must be positive")
            seen.add(ent.utterance_id)

    def utterance_ids(self):
        return [ent.utterance_id for ent in self.entries]

    def resolve_feature_path(self, entry, feature_dir=None):
        """Absolute path of an entry's feature file.

        When feature_dir is given the directory part of the stored path is
        replaced (same filenames, different feature set); otherwise relative
        paths resolve against the manifest's own directory.
        """
        p = Path(entry.feature_path)
        if feature_dir is not None:
            return Path(feature_dir) / p.name
        if not p.is_absolute() and self.root is not None:
            return self.root / p
        return p


@dataclass
class ClassFile:
    """Discovered word tokens grouped by cluster id."""

    classes: dict

    def __post_init__(self):
        for cid, tokens in self.classes.items():
            if int(cid) != cid or cid < 0:
                raise ValidationError(f"class id must be a non-negative int, got {cid!r}")
            for utt, onset, offset in tokens:
                if not onset < offset:
                    raise ValidationError(f"{utt}: token ({onset}, {offset}) has offset <= onset")

    def n_tokens(self):
        return sum(len(t) for t in self.classes.values())


def write_feature_file(matrix, path):
    """Serialize a FeatureMatrix; byte output is deterministic for equal input."""
    header = _HEADER.pack(
        FEATURE_MAGIC, matrix.n_frames, matrix.dim, np.float32(matrix.frame_rate_hz)
    )
    payload = np.ascontiguousarray(matrix.data, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_feature_file(path, utterance_id=None):
    """Read a feature file written by write_feature_file (bit-exact round trip)."""
    path = Path(path)
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: file shorter than the {_HEADER.size}-byte header")
    magic, n_frames, dim, rate = _HEADER.unpack_from(raw)
    if magic != FEATURE_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {FEATURE_MAGIC!r}")
    expected = n_frames * dim * 4
    payload = raw[_HEADER.size:]
    if len(payload) < expected:
        raise TruncationError(
            f"{path}: payload has {len(payload)} bytes, header promises {expected}"
        )
    if len(payload) > expected:
        raise FormatError(f"{path}: {len(payload) - expected} trailing bytes after payload")
    if n_frames < 1 or dim < 1:
        raise ValidationError(f"{path}: header declares empty matrix {n_frames}x{dim}")
    data = np.frombuffer(payload, dtype="<f4").reshape(n_frames, dim)
    return FeatureMatrix(
        utterance_id=utterance_id if utterance_id is not None else path.stem,
        data=data,
        frame_rate_hz=float(rate),
    )


def read_feature_header(path):
    """(n_frames, dim, frame_rate_hz) from a feature file without the payload."""
    path = Path(path)
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: file shorter than the {_HEADER.size}-byte header")
    magic, n_frames, dim, rate = _HEADER.unpack(raw)
    if magic != FEATURE_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {FEATURE_MAGIC!r}")
    return int(n_frames), int(dim), float(rate)


def read_alignments(path, tier):
    """Parse an alignment file into one sorted, non-overlapping track per utterance."""
    if tier not in ALIGNMENT_TIERS:
        raise ValidationError(f"unknown alignment tier {tier!r}")
    per_utt = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(maxsplit=3)
            if len(parts) < 4:
                raise FormatError(f"{path}:{lineno}: expected '<utt> <start> <end> <label>'")
            utt, start_s, end_s, label = parts
            if tier != "phone" and any(ch.isspace() for ch in label):
                raise ValidationError(
                    f"{path}:{lineno}: {tier} labels must be single tokens, got {label!r}"
                )
            try:
                start_s, end_s = float(start_s), float(end_s)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: bad time field") from exc
            per_utt.setdefault(utt, []).append((start_s, end_s, label))
    return [AlignmentTrack(utt, tier, entries) for utt, entries in per_utt.items()]


def write_alignments(tracks, path):
    with open(path, "w", encoding="utf-8") as fh:
        for track in tracks:
            for ent in track.entries:
                fh.write(f"{track.utterance_id} {ent.start_s:.2f} {ent.end_s:.2f} {ent.label}\n")


def write_class_file(classes, path):
    """Write class blocks ordered by id; times serialized at 2 decimals."""
    blocks = []
    for cid in sorted(classes.classes):
        lines = [f"Class {cid}"]
        for utt, onset, offset in classes.classes[cid]:
            lines.append(f"{utt} {onset:.2f} {offset:.2f}")
        blocks.append("\n".join(lines))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n\n".join(blocks))
        fh.write("\n")


def read_class_file(path, manifest=None):
    """Parse a class file; token times come back at the serialized 2-decimal precision."""
    known = set(manifest.utterance_ids()) if manifest is not None else None
    classes = {}
    current = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                current = None
                continue
            if line.startswith("Class"):
                parts = line.split()
                if len(parts) != 2:
                    raise FormatError(f"{path}:{lineno}: malformed class header {line!r}")
                try:
                    current = int(parts[1])
                except ValueError as exc:
                    raise FormatError(f"{path}:{lineno}: bad class id") from exc
                if current in classes:
                    raise FormatError(f"{path}:{lineno}: duplicate class id {current}")
                classes[current] = []
                continue
            if current is None:
                raise FormatError(f"{path}:{lineno}: token line outside a class block")
            parts = line.split()
            if len(parts) != 3:
                raise FormatError(f"{path}:{lineno}: expected '<utt> <onset> <offset>'")
            utt, onset, offset = parts[0], float(parts[1]), float(parts[2])
            if known is not None and utt not in known:
                raise ValidationError(f"{path}:{lineno}: unknown utterance_id {utt!r}")
            classes[current].append((utt, onset, offset))
    return ClassFile(classes)


def read_manifest(path):
    path = Path(path)
    entries = []
    alignment_paths = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 3 and parts[0] == "alignment":
                    alignment_paths[parts[1]] = parts[2]
                continue
            parts = line.split()
            if len(parts) != 3:
                raise FormatError(f"{path}:{lineno}: expected '<utt> <feature_path> <duration_s>'")
            entries.append(ManifestEntry(parts[0], parts[1], float(parts[2])))
    return CorpusManifest(entries, alignment_paths, root=path.parent)


def write_manifest(manifest, path):
    with open(path, "w", encoding="utf-8") as fh:
        for tier in sorted(manifest.alignment_paths):
            fh.write(f"# alignment {tier} {manifest.alignment_paths[tier]}\n")
        for ent in manifest.entries:
            fh.write(f"{ent.utterance_id} {ent.feature_path} {ent.duration_s:.3f}\n")


def read_boundary_file(path):
    """Read per-utterance boundary lists as {utterance_id: [b1, ..., T]}."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 2:
                raise FormatError(f"{path}:{lineno}: expected '<utt> <b1> ... <T>'")
            utt = parts[0]
            if utt in out:
                raise ValidationError(f"{path}:{lineno}: duplicate utterance {utt!r}")
            try:
                bounds = [int(p) for p in parts[1:]]
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: boundary indices must be ints") from exc
            if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])) or bounds[0] <= 0:
                raise ValidationError(f"{path}:{lineno}: boundaries must be strictly increasing and > 0")
            out[utt] = bounds
    return out


def write_boundary_file(boundaries, path):
    """Write {utterance_id: [b1, ..., T]} in the given (deterministic) order."""
    with open(path, "w", encoding="utf-8") as fh:
        for utt, bounds in boundaries.items():
            fh.write(utt + " " + " ".join(str(b) for b in bounds) + "\n")
