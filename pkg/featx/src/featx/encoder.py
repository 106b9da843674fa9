"""Pretrained self-supervised speech encoder wrapper (optional extra).

Loads a transformer speech encoder by checkpoint name or local path and
returns the hidden states of one layer. Layer 0 is the convolutional
front-end output; layers 1..L index the transformer blocks. The
HuBERT-family stride is 20 ms, so features come out at 50 Hz on 16 kHz
input.
"""

import numpy as np

ENCODER_SAMPLE_RATE = 16_000
ENCODER_FRAME_RATE = 50.0


class EncoderUnavailableError(Exception):
    pass


def load_encoder(name_or_path):
    try:
        import torch  # noqa: F401
        from transformers import AutoModel
    except ImportError as exc:
        raise EncoderUnavailableError(
            "encoder mode needs the optional extras: pip install 'featx[encoder]'"
        ) from exc
    try:
        model = AutoModel.from_pretrained(name_or_path)
    except Exception as exc:
        raise EncoderUnavailableError(f"cannot load encoder {name_or_path!r}: {exc}") from exc
    model.eval()
    return model


def n_layers(model):
    return model.config.num_hidden_layers


def encode_layer(model, signal, sample_rate, layer):
    """Hidden states of one layer as a (T, hidden_size) float array."""
    import torch

    if sample_rate != ENCODER_SAMPLE_RATE:
        raise ValueError(
            f"encoder expects {ENCODER_SAMPLE_RATE} Hz audio, got {sample_rate}"
        )
    if not 0 <= layer <= n_layers(model):
        raise ValueError(f"layer must be in [0, {n_layers(model)}], got {layer}")
    with torch.no_grad():
        inputs = torch.as_tensor(np.asarray(signal, dtype=np.float32))[None, :]
        out = model(inputs, output_hidden_states=True)
    return out.hidden_states[layer][0].cpu().numpy()
