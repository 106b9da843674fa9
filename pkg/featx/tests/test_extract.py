"""Extraction tests, including the release criterion: a 10-file audio
sample whose output passes the word-discovery toolkit's own validation."""

import numpy as np
import pytest
from scipy.io import wavfile

import featx.wdf as wdf
from featx.cli import main as cli_main
from featx.extract import ExtractionJob, extract, load_audio

seglex_corpusio = pytest.importorskip("seglex.corpusio")

SAMPLE_RATE = 16000
FRAME_RATE = 100.0


def write_wavs(directory, n_files=10, seed=0):
    rng = np.random.default_rng(seed)
    directory.mkdir(parents=True, exist_ok=True)
    durations = {}
    for i in range(n_files):
        n = int(rng.integers(SAMPLE_RATE // 2, SAMPLE_RATE * 2))
        t = np.arange(n) / SAMPLE_RATE
        freq = float(rng.uniform(100, 3500))
        signal = 0.4 * np.sin(2 * np.pi * freq * t) + 0.05 * rng.standard_normal(n)
        pcm = np.clip(signal * 32767, -32768, 32767).astype(np.int16)
        wavfile.write(directory / f"utt{i:02d}.wav", SAMPLE_RATE, pcm)
        durations[f"utt{i:02d}"] = n / SAMPLE_RATE
    return durations


def test_acceptance_ten_file_sample(tmp_path, capsys):
    audio_dir = tmp_path / "audio"
    durations = write_wavs(audio_dir, n_files=10)

    job = ExtractionJob(audio_dir, tmp_path / "out", frame_rate_hz=FRAME_RATE)
    summary = extract(job)
    assert summary.n_written == 10
    assert summary.skipped == []

    manifest = seglex_corpusio.read_manifest(summary.manifest_path)
    assert len(manifest.entries) == 10
    for ent in manifest.entries:
        path = manifest.resolve_feature_path(ent)
        # passes the consumer's own validation (shape, finiteness, header)
        matrix = seglex_corpusio.read_feature_file(path)
        assert matrix.frame_rate_hz == FRAME_RATE
        assert matrix.dim == 39
        # frame count within +-1 of duration * frame rate
        expected = durations[ent.utterance_id] * FRAME_RATE
        assert abs(matrix.n_frames - expected) <= 1
        assert ent.duration_s == pytest.approx(durations[ent.utterance_id], abs=5e-4)
        # round trip through the producer's own reader is bit-exact
        again, rate = wdf.read_feature_file(path)
        assert rate == FRAME_RATE
        assert again.tobytes() == matrix.data.tobytes()
    print("\nACCEPTANCE featx-ten-file-sample: PASS", flush=True)


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(1)
    data = rng.standard_normal((37, 39)).astype(np.float32)
    wdf.write_feature_file(tmp_path / "x.wdf", data, 50.0)
    back, rate = wdf.read_feature_file(tmp_path / "x.wdf")
    assert rate == 50.0
    assert back.tobytes() == data.tobytes()
    via_consumer = seglex_corpusio.read_feature_file(tmp_path / "x.wdf")
    assert via_consumer.data.tobytes() == data.tobytes()


def test_unreadable_audio_skipped_with_log(tmp_path, caplog):
    audio_dir = tmp_path / "audio"
    write_wavs(audio_dir, n_files=3)
    (audio_dir / "broken.wav").write_bytes(b"not a wav at all")
    summary = extract(ExtractionJob(audio_dir, tmp_path / "out", frame_rate_hz=FRAME_RATE))
    assert summary.n_written == 3
    assert len(summary.skipped) == 1
    assert "broken" in summary.skipped[0][0]
    manifest = seglex_corpusio.read_manifest(summary.manifest_path)
    assert len(manifest.entries) == 3


def test_stereo_and_float_wavs(tmp_path):
    audio_dir = tmp_path / "audio"
    audio_dir.mkdir()
    t = np.arange(SAMPLE_RATE) / SAMPLE_RATE
    mono = 0.3 * np.sin(2 * np.pi * 440 * t)
    stereo = np.stack([mono, -mono], axis=1).astype(np.float32)
    wavfile.write(audio_dir / "stereo.wav", SAMPLE_RATE, stereo)
    signal, rate = load_audio(audio_dir / "stereo.wav")
    assert rate == SAMPLE_RATE
    assert signal.ndim == 1


def test_cli_mfcc_mode(tmp_path, capsys):
    audio_dir = tmp_path / "audio"
    write_wavs(audio_dir, n_files=2)
    rc = cli_main(
        ["--audio-dir", str(audio_dir), "--out", str(tmp_path / "out"), "--mfcc"]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "written=2 skipped=0" in out
    header = (tmp_path / "out" / "manifest.txt").read_text().splitlines()[0]
    assert header.startswith("# extraction mfcc")


def test_cli_nonzero_exit_when_files_skipped(tmp_path, capsys):
    audio_dir = tmp_path / "audio"
    write_wavs(audio_dir, n_files=2)
    (audio_dir / "junk.wav").write_bytes(b"junk")
    rc = cli_main(
        ["--audio-dir", str(audio_dir), "--out", str(tmp_path / "out"), "--mfcc"]
    )
    assert rc == 1


def test_encoder_glue_with_stub_model():
    torch = pytest.importorskip("torch")
    from featx.encoder import encode_layer

    class StubConfig:
        num_hidden_layers = 2

    class StubOutput:
        def __init__(self, hidden_states):
            self.hidden_states = hidden_states

    class StubModel:
        config = StubConfig()

        def __call__(self, inputs, output_hidden_states=False):
            # 20 ms stride over the waveform, tiny hidden size
            n_frames = inputs.shape[1] // 320
            states = tuple(
                torch.full((1, n_frames, 4), float(layer)) for layer in range(3)
            )
            return StubOutput(states)

    signal = np.zeros(16000, dtype=np.float64)
    out = encode_layer(StubModel(), signal, 16000, layer=2)
    assert out.shape == (50, 4)
    assert np.all(out == 2.0)
    with pytest.raises(ValueError):
        encode_layer(StubModel(), signal, 16000, layer=3)
    with pytest.raises(ValueError):
        encode_layer(StubModel(), signal, 8000, layer=1)


def test_encoder_unavailable_error():
    from featx.encoder import EncoderUnavailableError, load_encoder

    with pytest.raises(EncoderUnavailableError):
        load_encoder("/nonexistent/checkpoint/path")


def test_extraction_job_validation(tmp_path):
    with pytest.raises(ValueError):
        ExtractionJob(tmp_path, tmp_path, layer=-1)
    with pytest.raises(ValueError):
        ExtractionJob(tmp_path, tmp_path, frame_rate_hz=0.0)
    with pytest.raises(FileNotFoundError):
        extract(ExtractionJob(tmp_path, tmp_path / "o"))
