from .audio import AudioClip, AudioError, read_wav, resample, snr_db, write_wav
from .features import (
    LOGMEL_CONFIG,
    STFT_CONFIG,
    FeatureConfig,
    SpectroTensor,
    frame_count,
    logmel,
    mel_filterbank,
    stft,
)
from .separation import apply_mask_and_invert
