from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Literal

import numpy as np
import soundfile as sf
from loguru import logger
from scipy import signal

from core.constants import RESAMPLE_KAISER_BETA, RESAMPLE_ZERO_CROSSINGS, SAMPLE_RATE

WavSubtype = Literal["PCM_16", "FLOAT"]


class AudioError(ValueError):
    pass


class AudioClip:
    """Mono waveform with its sample rate."""

    def __init__(self, samples: np.ndarray, sample_rate: int) -> None:
        samples = np.asarray(samples, dtype=np.float64)
        if samples.ndim != 1:
            raise AudioError(f"Audio must be mono, got shape {samples.shape}")
        if sample_rate <= 0:
            raise AudioError(f"Sample rate must be positive, got {sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise AudioError("Audio contains non-finite samples")
        self.samples = samples
        self.sample_rate = int(sample_rate)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def __repr__(self) -> str:
        return f"AudioClip(samples={len(self)}, sample_rate={self.sample_rate})"


def read_wav(path: str | Path) -> AudioClip:
    """Reads a PCM-16 or float WAV file, downmixing by channel mean."""
    try:
        data, sample_rate = sf.read(str(path), dtype="float64", always_2d=True)
    except (sf.LibsndfileError, RuntimeError, OSError) as e:
        raise AudioError(f"Could not read WAV file {path}: {e}")
    if data.shape[1] > 1:
        logger.debug(f"Downmixing {data.shape[1]} channels of {path}")
    return AudioClip(data.mean(axis=1), sample_rate)


def write_wav(path: str | Path, clip: AudioClip, subtype: WavSubtype = "FLOAT") -> None:
    sf.write(str(path), clip.samples, clip.sample_rate, subtype=subtype, format="WAV")
    logger.debug(f"Wrote {clip.duration:.2f} s of audio to {path}")


@lru_cache(maxsize=16)
def _kaiser_sinc(up: int, down: int) -> np.ndarray:
    max_rate = max(up, down)
    taps = 2 * RESAMPLE_ZERO_CROSSINGS * max_rate + 1
    return signal.firwin(taps, 1.0 / max_rate, window=("kaiser", RESAMPLE_KAISER_BETA))


def resample(clip: AudioClip, target_hz: int = SAMPLE_RATE) -> AudioClip:
    """Band-limited polyphase resampling with a Kaiser-windowed sinc (β=14, 64 zero crossings).

    The output has `round(L * target / source)` samples; a clip already at `target_hz` is returned untouched.
    """
    if target_hz <= 0:
        raise AudioError(f"Target sample rate must be positive, got {target_hz}")
    if len(clip) == 0:
        raise AudioError("Cannot resample an empty clip")
    if clip.sample_rate == target_hz:
        return AudioClip(clip.samples.copy(), target_hz)

    ratio = Fraction(target_hz, clip.sample_rate)
    up, down = ratio.numerator, ratio.denominator
    out_len = int(len(clip) * ratio + Fraction(1, 2))
    logger.debug(f"Resampling {clip.sample_rate} Hz -> {target_hz} Hz (up={up}, down={down})")
    resampled = signal.resample_poly(clip.samples, up, down, window=_kaiser_sinc(up, down))
    return AudioClip(resampled[:out_len], target_hz)


def snr_db(reference: np.ndarray, estimate: np.ndarray) -> float:
    reference = np.asarray(reference, dtype=np.float64)
    noise = reference - np.asarray(estimate, dtype=np.float64)
    return float(10 * np.log10(np.sum(reference**2) / max(np.sum(noise**2), np.finfo(np.float64).tiny)))
