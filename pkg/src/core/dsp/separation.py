import librosa
import numpy as np

from core.dsp.audio import AudioClip, AudioError
from core.dsp.features import SpectroTensor


def apply_mask_and_invert(mix_stft: SpectroTensor, mask: np.ndarray, out_len: int) -> AudioClip:
    """Scales the mixture magnitude by `mask`, keeps the mixture phase and inverts by weighted overlap-add.

    Since the mask is real and non-negative, `mask * X` has magnitude `mask * |X|` and the phase of `X`.
    """
    if mix_stft.kind != "stft":
        raise AudioError(f"Expected an STFT tensor, got {mix_stft.kind}")
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != mix_stft.data.shape:
        raise AudioError(f"Mask shape {mask.shape} does not match STFT shape {mix_stft.data.shape}")
    if not np.all(np.isfinite(mask)) or mask.min(initial=0.0) < 0 or mask.max(initial=0.0) > 1:
        raise AudioError("Mask entries must lie in [0, 1]")
    if out_len <= 0:
        raise AudioError(f"Output length must be positive, got {out_len}")

    config = mix_stft.config
    separated = mask * mix_stft.data
    samples = librosa.istft(
        separated.T,
        hop_length=config.hop_length,
        win_length=config.n_fft,
        n_fft=config.n_fft,
        window=config.window,
        center=config.center,
        length=out_len,
    )
    return AudioClip(samples, config.sample_rate)
