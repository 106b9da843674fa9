"""MFCC extraction: 13 cepstra plus deltas and delta-deltas (39 dims).

Frames are centered on multiples of the hop (zero-padded edges), so the
frame count is ceil(n_samples / hop) and tracks duration * frame_rate to
within one frame. The sample rate must be divisible by the frame rate.
"""

import numpy as np
from scipy.fft import dct, rfft

N_MFCC = 13
N_MELS = 26
WINDOW_S = 0.025
DELTA_WINDOW = 2
LOG_FLOOR = 1e-10


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_fft, sample_rate, n_mels=N_MELS):
    """Triangular filters over rfft bins, (n_mels, n_fft//2 + 1)."""
    n_bins = n_fft // 2 + 1
    edges_hz = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(sample_rate / 2), n_mels + 2))
    bin_freqs = np.arange(n_bins) * sample_rate / n_fft
    bank = np.zeros((n_mels, n_bins))
    for k in range(n_mels):
        lo, mid, hi = edges_hz[k], edges_hz[k + 1], edges_hz[k + 2]
        rising = (bin_freqs - lo) / max(mid - lo, 1e-12)
        falling = (hi - bin_freqs) / max(hi - mid, 1e-12)
        bank[k] = np.clip(np.minimum(rising, falling), 0.0, None)
    return bank


def frame_signal(signal, win_length, hop):
    """Centered frames, zero-padded at the edges; ceil(n/hop) frames."""
    n = signal.shape[0]
    n_frames = max(1, int(np.ceil(n / hop)))
    half = win_length // 2
    padded = np.concatenate(
        [np.zeros(half), signal, np.zeros(half + win_length)]
    )
    frames = np.empty((n_frames, win_length))
    for t in range(n_frames):
        start = t * hop  # padded offset: center t*hop in the original signal
        frames[t] = padded[start : start + win_length]
    return frames


def deltas(x, window=DELTA_WINDOW):
    """Regression deltas over +-window frames, edge-replicated."""
    n = x.shape[0]
    denom = 2.0 * sum(k * k for k in range(1, window + 1))
    padded = np.concatenate([np.repeat(x[:1], window, axis=0), x,
                             np.repeat(x[-1:], window, axis=0)])
    out = np.zeros_like(x)
    for k in range(1, window + 1):
        out += k * (padded[window + k : window + k + n] - padded[window - k : window - k + n])
    return out / denom


def mfcc_features(signal, sample_rate, frame_rate_hz, n_mfcc=N_MFCC, n_mels=N_MELS):
    """(T, 3 * n_mfcc) matrix of MFCCs with deltas and delta-deltas."""
    if sample_rate % frame_rate_hz != 0:
        raise ValueError(
            f"sample rate {sample_rate} not divisible by frame rate {frame_rate_hz}"
        )
    hop = int(sample_rate // frame_rate_hz)
    win_length = int(round(WINDOW_S * sample_rate))
    signal = np.asarray(signal, dtype=np.float64)
    emphasized = np.concatenate([signal[:1], signal[1:] - 0.97 * signal[:-1]])
    frames = frame_signal(emphasized, win_length, hop)
    frames = frames * np.hamming(win_length)
    n_fft = 1 << (win_length - 1).bit_length()
    power = np.abs(rfft(frames, n=n_fft, axis=1)) ** 2 / n_fft
    bank = mel_filterbank(n_fft, sample_rate, n_mels)
    log_mel = np.log(np.maximum(power @ bank.T, LOG_FLOOR))
    cepstra = dct(log_mel, type=2, norm="ortho", axis=1)[:, :n_mfcc]
    d1 = deltas(cepstra)
    d2 = deltas(d1)
    return np.concatenate([cepstra, d1, d2], axis=1)
