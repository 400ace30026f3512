from functools import lru_cache
from typing import Literal

import librosa
import numpy as np
from pydantic import BaseModel, ConfigDict

from core.constants import (
    HOP_LENGTH,
    LOG_FLOOR,
    MEL_FMAX,
    MEL_FMIN,
    MEL_N_FFT,
    N_MELS,
    SAMPLE_RATE,
    STFT_N_FFT,
)
from core.dsp.audio import AudioClip, AudioError

SpectroKind = Literal["logmel", "stft"]


class FeatureConfig(BaseModel):
    """Analysis settings, embedded in every serialized feature tensor."""

    model_config = ConfigDict(frozen=True)

    kind: SpectroKind
    sample_rate: int = SAMPLE_RATE
    n_fft: int
    hop_length: int = HOP_LENGTH
    window: str = "hann"
    center: bool = True
    pad_mode: str = "reflect"
    n_mels: int | None = None
    fmin: float | None = None
    fmax: float | None = None
    mel_scale: str | None = None
    log_floor: float | None = None


LOGMEL_CONFIG = FeatureConfig(
    kind="logmel", n_fft=MEL_N_FFT, n_mels=N_MELS, fmin=MEL_FMIN, fmax=MEL_FMAX, mel_scale="htk", log_floor=LOG_FLOOR
)
STFT_CONFIG = FeatureConfig(kind="stft", n_fft=STFT_N_FFT)


class SpectroTensor:
    """T×F log-mel (real) or STFT (complex) matrix with its framing metadata."""

    def __init__(self, data: np.ndarray, config: FeatureConfig, n_samples: int) -> None:
        expected = config.n_mels if config.kind == "logmel" else config.n_fft // 2 + 1
        if data.ndim != 2 or data.shape[1] != expected:
            raise AudioError(f"{config.kind} tensor must be T×{expected}, got {data.shape}")
        self.data = data
        self.config = config
        self.n_samples = n_samples

    @property
    def kind(self) -> SpectroKind:
        return self.config.kind

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    def magnitude(self) -> np.ndarray:
        return np.abs(self.data)

    def to_meta(self) -> dict:
        return {"feature": self.config.model_dump(), "n_samples": self.n_samples}

    def __repr__(self) -> str:
        return f"SpectroTensor(kind={self.kind!r}, shape={self.data.shape})"


def frame_count(n_samples: int, hop_length: int = HOP_LENGTH) -> int:
    """Centered framing yields one frame per hop plus one."""
    return 1 + n_samples // hop_length


@lru_cache(maxsize=1)
def mel_filterbank() -> np.ndarray:
    """The 229×1025 HTK-scale triangular filterbank over 0-8 kHz, shared read-only."""
    basis = librosa.filters.mel(
        sr=SAMPLE_RATE, n_fft=MEL_N_FFT, n_mels=N_MELS, fmin=MEL_FMIN, fmax=MEL_FMAX, htk=True, norm=None
    ).astype(np.float64)
    basis.flags.writeable = False
    return basis


def _require_rate(clip: AudioClip) -> None:
    if clip.sample_rate != SAMPLE_RATE:
        raise AudioError(f"Expected {SAMPLE_RATE} Hz audio, got {clip.sample_rate} Hz; resample first")
    if len(clip) == 0:
        raise AudioError("Cannot analyse an empty clip")


def _stft(samples: np.ndarray, config: FeatureConfig) -> np.ndarray:
    spectrum = librosa.stft(
        samples,
        n_fft=config.n_fft,
        hop_length=config.hop_length,
        window=config.window,
        center=config.center,
        pad_mode=config.pad_mode,
    )
    return spectrum.T


def logmel(clip: AudioClip) -> SpectroTensor:
    """Log-mel spectrogram: Hann 2048, hop 160, 229 bands, natural log with a 1e-10 floor."""
    _require_rate(clip)
    power = np.abs(_stft(clip.samples, LOGMEL_CONFIG)) ** 2
    mel = power @ mel_filterbank().T
    return SpectroTensor(np.log(mel + LOG_FLOOR), LOGMEL_CONFIG, len(clip))


def stft(clip: AudioClip) -> SpectroTensor:
    """Complex STFT: Hann 1024, hop 160, 513 bins."""
    _require_rate(clip)
    return SpectroTensor(_stft(clip.samples, STFT_CONFIG), STFT_CONFIG, len(clip))