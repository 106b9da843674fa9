"""Binary feature-file interchange format.

Layout: magic ``WDF1`` | T uint32 LE | D uint32 LE | frame_rate_hz
float32 LE | T*D float32 LE payload, frame-major. This is the on-disk
contract shared with the word-discovery toolkit; files round trip
bit-exactly.
"""

import struct

import numpy as np

MAGIC = b"WDF1"
_HEADER = struct.Struct("<4sIIf")


class FeatureFileError(Exception):
    pass


def write_feature_file(path, data, frame_rate_hz):
    arr = np.ascontiguousarray(data, dtype="<f4")
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise FeatureFileError(f"feature matrix must be 2-D and non-empty, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise FeatureFileError("feature matrix contains non-finite values")
    header = _HEADER.pack(MAGIC, arr.shape[0], arr.shape[1], np.float32(frame_rate_hz))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.tobytes())


def read_feature_file(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise FeatureFileError(f"{path}: shorter than the {_HEADER.size}-byte header")
    magic, n_frames, dim, rate = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FeatureFileError(f"{path}: bad magic {magic!r}")
    payload = raw[_HEADER.size:]
    if len(payload) != n_frames * dim * 4:
        raise FeatureFileError(
            f"{path}: payload is {len(payload)} bytes, header promises {n_frames * dim * 4}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(n_frames, dim)
    return data, float(rate)
